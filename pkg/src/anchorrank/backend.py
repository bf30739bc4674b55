"""Log-probability scoring backends.

Every scorer talks to a backend through one call: score(ScoreRequest) ->
ScoreResponse. Two request modes exist: "continuation" asks for per-token
log-probabilities of a fixed continuation after the prompt; "labels" asks
for one unnormalized logit per candidate label (scorers apply their own
softmax where needed).

Implementations: a deterministic hash mock, a qrels-driven oracle mock
for known-ground-truth runs, an OpenAI-compatible remote client, and a
persistent read-through cache that wraps any of them.
"""

import hashlib
import json
import math
import os
import random
import statistics
import tempfile
import threading
import time
from dataclasses import dataclass, field

import requests

MODES = ("continuation", "labels")


class BackendError(RuntimeError):
    """Transport or provider failure after exhausting retries."""


class CapabilityError(BackendError):
    """The provider cannot return the log-probabilities this request needs."""


@dataclass(frozen=True)
class ScoreRequest:
    prompt: str
    mode: str
    continuation: str | None = None
    labels: tuple[str, ...] | None = None
    metadata: dict = field(default_factory=dict, compare=False, hash=False)
    model_id: str = "default"

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == "continuation":
            if not self.continuation:
                raise ValueError("continuation mode requires non-empty text")
        else:
            if self.labels is None or len(self.labels) < 2:
                raise ValueError("labels mode requires at least 2 labels")
            if len(set(self.labels)) != len(self.labels):
                raise ValueError("labels must be distinct")
            if any(not l for l in self.labels):
                raise ValueError("labels must be non-empty")

    def cache_key(self) -> str:
        targets = self.continuation if self.mode == "continuation" else list(self.labels)
        payload = json.dumps(
            {"model": self.model_id, "mode": self.mode, "prompt": self.prompt,
             "targets": targets},
            sort_keys=True, ensure_ascii=False,
        )
        return payload


@dataclass
class ScoreResponse:
    token_logprobs: list[float] | None = None
    tokens: list[str] | None = None
    label_logprobs: list[float] | None = None
    prompt_tokens: int = 0
    completion_tokens: int = 0

    def check_against(self, request: ScoreRequest):
        if request.mode == "continuation":
            if self.token_logprobs is None or self.tokens is None:
                raise BackendError("continuation response missing token logprobs")
            if len(self.token_logprobs) != len(self.tokens):
                raise BackendError("token/logprob length mismatch")
            values = self.token_logprobs
        else:
            if self.label_logprobs is None:
                raise BackendError("labels response missing label logprobs")
            if len(self.label_logprobs) != len(request.labels):
                raise BackendError("label count mismatch")
            values = self.label_logprobs
        if any(not math.isfinite(v) for v in values):
            raise BackendError("non-finite log-probability in response")
        return self


@dataclass
class BackendConfig:
    endpoint_url: str = "http://localhost:8000/v1/completions"
    auth_env: str = "ANCHORRANK_API_TOKEN"
    timeout_s: float = 60.0
    max_retries: int = 3
    backoff_base_s: float = 0.5
    max_concurrency: int = 4
    top_logprobs: int = 20

    def __post_init__(self):
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if self.max_concurrency < 1:
            raise ValueError("max_concurrency must be >= 1")


@dataclass
class BackendStats:
    """Exact call accounting; calls means requests the backend answered."""

    calls: int = 0
    prompt_tokens: int = 0
    completion_tokens: int = 0
    http_requests: int = 0


def _whitespace_tokens(text: str) -> list[str]:
    return text.split()


class Backend:
    """Base class: concrete backends implement _score(request)."""

    def __init__(self):
        self.stats = BackendStats()
        self._lock = threading.Lock()

    def score(self, request: ScoreRequest) -> ScoreResponse:
        response = self._score(request)
        response.check_against(request)
        with self._lock:
            self.stats.calls += 1
            self.stats.prompt_tokens += response.prompt_tokens
            self.stats.completion_tokens += response.completion_tokens
        return response

    def _score(self, request: ScoreRequest) -> ScoreResponse:
        raise NotImplementedError


FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3


def fnv1a_64(data: bytes) -> int:
    h = FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * FNV_PRIME) & 0xFFFFFFFFFFFFFFFF
    return h


def hash_logprob(prompt: str, target: str) -> float:
    """-10 * frac(FNV1a64(prompt || 0x1f || target) / 2^64), bit-stable."""
    if not target:
        raise ValueError("hash mock target must be non-empty")
    h = fnv1a_64(prompt.encode("utf-8") + b"\x1f" + target.encode("utf-8"))
    return -10.0 * (h / 2.0**64)


class HashMockBackend(Backend):
    """Deterministic pseudo-random logprobs from a fixed 64-bit hash."""

    def _score(self, request: ScoreRequest) -> ScoreResponse:
        prompt_tokens = len(_whitespace_tokens(request.prompt))
        if request.mode == "continuation":
            tokens = _whitespace_tokens(request.continuation)
            return ScoreResponse(
                token_logprobs=[hash_logprob(request.prompt, t) for t in tokens],
                tokens=tokens,
                prompt_tokens=prompt_tokens + len(tokens),
            )
        return ScoreResponse(
            label_logprobs=[hash_logprob(request.prompt, l) for l in request.labels],
            prompt_tokens=prompt_tokens,
        )


def _label_relevance_indices(labels) -> list[int]:
    """Relevance index per label for the oracle mock.

    Numeric labels carry their own level. Otherwise the first label is the
    affirmative/target one (the convention all shipped scorers follow), so
    indices descend from len-1.
    """
    if all(l.strip().lstrip("-").isdigit() for l in labels):
        return [int(l) for l in labels]
    n = len(labels)
    return list(range(n - 1, -1, -1))


class OracleMockBackend(Backend):
    """Qrels-driven backend for known-ground-truth end-to-end tests.

    Label logit for relevance index k is -|k - grade * K_max / maxgrade|
    plus seeded pseudo-normal noise; continuation tokens all score
    -0.5 - 2 * (maxgrade - grade) / maxgrade. Requests carry the query and
    document ids in metadata.
    """

    def __init__(self, qrels, sigma: float = 0.0, seed: int = 0):
        super().__init__()
        if sigma < 0:
            raise ValueError("sigma must be >= 0")
        self._grades = dict(qrels.items()) if hasattr(qrels, "items") else dict(qrels)
        self.sigma = float(sigma)
        self.seed = seed
        self._max_grade = max(self._grades.values(), default=0) or 1

    def _grade(self, request) -> int:
        qid = request.metadata.get("query_id", "")
        doc_id = request.metadata.get("doc_id", "")
        return self._grades.get((qid, doc_id), 0)

    def _noise(self, request, *key_parts) -> float:
        if self.sigma == 0.0:
            return 0.0
        key = "\x1f".join(
            str(p) for p in (
                self.seed,
                request.metadata.get("query_id", ""),
                request.metadata.get("doc_id", ""),
                *key_parts,
            )
        )
        u = (fnv1a_64(key.encode("utf-8")) + 0.5) / 2.0**64
        return self.sigma * statistics.NormalDist().inv_cdf(u)

    def _score(self, request: ScoreRequest) -> ScoreResponse:
        grade = self._grade(request)
        prompt_tokens = len(_whitespace_tokens(request.prompt))
        if request.mode == "continuation":
            base = -0.5 - 2.0 * (self._max_grade - grade) / self._max_grade
            tokens = _whitespace_tokens(request.continuation)
            return ScoreResponse(
                token_logprobs=[
                    base + self._noise(request, "tok", i, t) for i, t in enumerate(tokens)
                ],
                tokens=tokens,
                prompt_tokens=prompt_tokens + len(tokens),
            )
        k_max = len(request.labels) - 1
        scaled = grade * (k_max / self._max_grade)
        indices = _label_relevance_indices(request.labels)
        logprobs = [
            -abs(k - scaled) + self._noise(request, label)
            for k, label in zip(indices, request.labels)
        ]
        return ScoreResponse(label_logprobs=logprobs, prompt_tokens=prompt_tokens)


def _default_transport(url, headers, payload, timeout):
    resp = requests.post(url, headers=headers, json=payload, timeout=timeout)
    return resp.status_code, resp.json()


class RemoteBackend(Backend):
    """OpenAI-compatible completions client for echo/next-token logprobs.

    continuation mode: one echo request over prompt+continuation, reading
    back the token logprobs that fall inside the continuation span.
    labels mode: one next-token request when every label is a single
    token (logits read from top_logprobs, CapabilityError when a label is
    absent); otherwise one echo request per label, summing its tokens.
    """

    def __init__(self, config: BackendConfig, transport=_default_transport):
        super().__init__()
        self.config = config
        self._transport = transport
        self._gate = threading.Semaphore(config.max_concurrency)
        self._rng = random.Random(0)

    def _headers(self):
        headers = {"Content-Type": "application/json"}
        token = os.environ.get(self.config.auth_env, "")
        if token:
            headers["Authorization"] = f"Bearer {token}"
        return headers

    def _post(self, payload):
        last_error = None
        for attempt in range(self.config.max_retries + 1):
            if attempt:
                delay = self.config.backoff_base_s * 2 ** (attempt - 1)
                time.sleep(delay * (0.5 + self._rng.random()))
            try:
                with self._gate:
                    with self._lock:
                        self.stats.http_requests += 1
                    status, body = self._transport(
                        self.config.endpoint_url, self._headers(), payload,
                        self.config.timeout_s,
                    )
            except Exception as exc:
                last_error = BackendError(f"transport failure: {exc}")
                continue
            if status == 200:
                return body
            if status in (429,) or status >= 500:
                last_error = BackendError(f"provider returned HTTP {status}")
                continue
            raise BackendError(f"provider returned HTTP {status}: {body}")
        raise last_error or BackendError("request failed")

    @staticmethod
    def _choice_logprobs(body):
        try:
            return body["choices"][0]["logprobs"]
        except (KeyError, IndexError, TypeError):
            raise CapabilityError("provider response carries no logprobs") from None

    @staticmethod
    def _usage(body):
        usage = body.get("usage", {}) or {}
        return int(usage.get("prompt_tokens", 0)), int(usage.get("completion_tokens", 0))

    def _echo_logprobs(self, model, prompt, continuation):
        body = self._post({
            "model": model,
            "prompt": prompt + continuation,
            "max_tokens": 0,
            "echo": True,
            "logprobs": 0,
            "temperature": 0,
        })
        lp = self._choice_logprobs(body)
        tokens = lp.get("tokens")
        values = lp.get("token_logprobs")
        offsets = lp.get("text_offset")
        if tokens is None or values is None or offsets is None:
            raise CapabilityError("echo response misses tokens/logprobs/offsets")
        span_start = len(prompt)
        picked, picked_tokens = [], []
        for tok, val, off in zip(tokens, values, offsets):
            if off >= span_start:
                if val is None:
                    raise CapabilityError("provider returned null logprob inside the scored span")
                picked.append(float(val))
                picked_tokens.append(tok)
        if not picked:
            raise CapabilityError("no tokens fell inside the scored span")
        return picked, picked_tokens, self._usage(body)

    def _score(self, request: ScoreRequest) -> ScoreResponse:
        if request.mode == "continuation":
            values, tokens, (p_tok, c_tok) = self._echo_logprobs(
                request.model_id, request.prompt, request.continuation
            )
            return ScoreResponse(
                token_logprobs=values, tokens=tokens,
                prompt_tokens=p_tok, completion_tokens=c_tok,
            )

        multi_token = any(len(label.split()) > 1 for label in request.labels)
        if not multi_token:
            body = self._post({
                "model": request.model_id,
                "prompt": request.prompt,
                "max_tokens": 1,
                "logprobs": self.config.top_logprobs,
                "temperature": 0,
            })
            lp = self._choice_logprobs(body)
            top = (lp.get("top_logprobs") or [{}])[0]
            values = []
            for label in request.labels:
                hit = None
                for candidate in (label, " " + label):
                    if candidate in top:
                        hit = float(top[candidate])
                        break
                if hit is None:
                    raise CapabilityError(
                        f"label {label!r} not among the top-{self.config.top_logprobs} tokens"
                    )
                values.append(hit)
            p_tok, c_tok = self._usage(body)
            return ScoreResponse(label_logprobs=values, prompt_tokens=p_tok,
                                 completion_tokens=c_tok)

        values = []
        p_total = c_total = 0
        for label in request.labels:
            lps, _, (p_tok, c_tok) = self._echo_logprobs(
                request.model_id, request.prompt, " " + label
            )
            values.append(sum(lps))
            p_total += p_tok
            c_total += c_tok
        return ScoreResponse(label_logprobs=values, prompt_tokens=p_total,
                             completion_tokens=c_total)


class CachedBackend(Backend):
    """Persistent read-through cache keyed by (model, mode, prompt, targets).

    Entries live in an append-only JSONL file; loading tolerates a torn
    final line so an interrupted run never poisons the next one. Hits do
    not touch the inner backend and are tallied separately.
    """

    def __init__(self, inner: Backend, path):
        super().__init__()
        self.inner = inner
        self.path = str(path)
        self.hits = 0
        self._entries: dict[str, dict] = {}
        self._load()

    def _load(self):
        if not os.path.exists(self.path):
            return
        with open(self.path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                try:
                    record = json.loads(line)
                    self._entries[record["key_hash"]] = record["response"]
                except (json.JSONDecodeError, KeyError):
                    continue

    @staticmethod
    def _hash_key(key: str) -> str:
        return hashlib.sha256(key.encode("utf-8")).hexdigest()

    def _append(self, key_hash: str, key: str, response: dict):
        record = json.dumps(
            {"key_hash": key_hash, "request_digest": key, "response": response},
            ensure_ascii=False,
        )
        with open(self.path, "a", encoding="utf-8") as fh:
            fh.write(record + "\n")
            fh.flush()

    def rewrite(self):
        """Compact the cache file atomically (write-temp-then-rename)."""
        with self._lock:
            directory = os.path.dirname(os.path.abspath(self.path))
            fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                for key_hash, response in self._entries.items():
                    fh.write(json.dumps(
                        {"key_hash": key_hash, "request_digest": None,
                         "response": response}, ensure_ascii=False) + "\n")
            os.replace(tmp, self.path)

    def score(self, request: ScoreRequest) -> ScoreResponse:
        key = request.cache_key()
        key_hash = self._hash_key(key)
        with self._lock:
            cached = self._entries.get(key_hash)
        if cached is not None:
            with self._lock:
                self.hits += 1
                self.stats.calls += 1
            return ScoreResponse(**cached).check_against(request)
        response = self.inner.score(request)
        payload = {
            "token_logprobs": response.token_logprobs,
            "tokens": response.tokens,
            "label_logprobs": response.label_logprobs,
            "prompt_tokens": response.prompt_tokens,
            "completion_tokens": response.completion_tokens,
        }
        with self._lock:
            self._entries[key_hash] = payload
            self._append(key_hash, key, payload)
            self.stats.calls += 1
            self.stats.prompt_tokens += response.prompt_tokens
            self.stats.completion_tokens += response.completion_tokens
        return response

    @property
    def remote_calls(self) -> int:
        return self.inner.stats.calls

    def cache_stats(self) -> dict:
        return {
            "entries": len(self._entries),
            "hits": self.hits,
            "misses": self.inner.stats.calls,
            "total_requests": self.stats.calls,
        }
