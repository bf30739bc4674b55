"""Sentence-graph spectral analysis: affinity matrix, normalized Laplacian,
and the Fiedler eigenpair that drives the two-way sentence partition.

The Fiedler solver works on the complement of the trivial null-space
direction sqrt(d): that direction is deflated analytically, and a Krylov
basis with full reorthogonalization (plus deterministic restarts on
breakdown) is grown until the projected operator captures the restricted
spectrum. The smallest Ritz pair of the projection is the Fiedler pair.
"""

from dataclasses import dataclass, field

import numpy as np

from anchorrank.textproc import TfIdfVector, cosine


class AnchorUnavailable(RuntimeError):
    """The sentence graph cannot support spectral partitioning."""


class ConvergenceError(RuntimeError):
    """Eigensolver failed to reach the residual tolerance."""

    def __init__(self, message, residual):
        self.residual = residual
        super().__init__(f"{message} (residual {residual:.3e})")


@dataclass
class AffinityMatrix:
    """Symmetric thresholded cosine-similarity matrix with zero diagonal."""

    matrix: np.ndarray
    theta: float

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def from_dense(cls, matrix, theta: float) -> "AffinityMatrix":
        m = np.asarray(matrix, dtype=float).copy()
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("affinity matrix must be square")
        if not np.allclose(m, m.T, atol=1e-12):
            raise ValueError("affinity matrix must be symmetric")
        if (m < 0).any():
            raise ValueError("affinity entries must be non-negative")
        np.fill_diagonal(m, 0.0)
        m = 0.5 * (m + m.T)
        return cls(matrix=m, theta=theta)

    def degrees(self) -> np.ndarray:
        return self.matrix.sum(axis=1)


def build_affinity(embeddings: list[TfIdfVector], theta: float) -> AffinityMatrix:
    """Pairwise thresholded cosines: entry kept iff cos >= theta; diagonal 0."""
    if not 0.0 <= theta < 1.0:
        raise ValueError(f"theta must be in [0, 1), got {theta}")
    n = len(embeddings)
    if n < 2:
        raise ValueError(f"need at least 2 embeddings, got {n}")
    m = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            c = cosine(embeddings[i], embeddings[j])
            if c >= theta:
                m[i, j] = m[j, i] = c
    return AffinityMatrix(matrix=m, theta=theta)


def normalized_laplacian(affinity: AffinityMatrix):
    """L = I - D^{-1/2} A D^{-1/2} over the non-isolated vertices.

    Returns (L, degrees, index_map) where index_map sends reduced vertex
    positions back to original ones. Isolated vertices have no defined
    normalization and can never join a cluster, so they are dropped first.
    """
    deg = affinity.degrees()
    keep = np.flatnonzero(deg > 0.0)
    if keep.size == 0:
        raise AnchorUnavailable("every vertex in the sentence graph is isolated")
    sub = affinity.matrix[np.ix_(keep, keep)]
    d = deg[keep]
    inv_sqrt = 1.0 / np.sqrt(d)
    lap = np.eye(keep.size) - inv_sqrt[:, None] * sub * inv_sqrt[None, :]
    lap = 0.5 * (lap + lap.T)
    return lap, d, keep.tolist()


@dataclass
class SpectralResult:
    """Second-smallest eigenpair of the normalized Laplacian."""

    lambda2: float
    vector: np.ndarray
    degrees: np.ndarray
    index_map: list[int] = field(default_factory=list)
    residual: float = 0.0
    iterations: int = 0


def _apply_sign_convention(v: np.ndarray) -> np.ndarray:
    # first component of largest absolute value made positive
    i = int(np.argmax(np.abs(v)))
    return -v if v[i] < 0 else v


def fiedler_vector(lap: np.ndarray, degrees, index_map=None,
                   tol: float = 1e-8, max_iter: int = 10_000) -> SpectralResult:
    """Eigenpair for the second-smallest eigenvalue of a normalized Laplacian.

    The exact null-space direction sqrt(d)/||sqrt(d)|| is deflated; the
    iteration builds an orthonormal basis of its complement (start vector:
    alternating +-1 projected; canonical directions on breakdown), fully
    reorthogonalizing each step, and takes the smallest Ritz pair of the
    projected operator. Raises ConvergenceError if the residual stays
    above tol within max_iter basis expansions.
    """
    lap = np.asarray(lap, dtype=float)
    n = lap.shape[0]
    if n < 2:
        raise ValueError("Fiedler vector needs at least 2 vertices")
    d = np.asarray(degrees, dtype=float)
    u0 = np.sqrt(d)
    u0 /= np.linalg.norm(u0)

    basis = np.zeros((n, n - 1))
    k = 0
    restart = 0

    def orthogonalize(x):
        for _ in range(2):
            x = x - (u0 @ x) * u0
            if k:
                x = x - basis[:, :k] @ (basis[:, :k].T @ x)
        return x

    proj = np.zeros((n - 1, n - 1))
    r = np.where(np.arange(n) % 2 == 0, 1.0, -1.0)
    iterations = 0
    while k < n - 1 and iterations < max_iter:
        iterations += 1
        r = orthogonalize(r)
        nrm = np.linalg.norm(r)
        if nrm <= 1e-10:
            # breakdown: the Krylov direction is spent, restart from the
            # next canonical direction outside the current span
            r = None
            while restart < n:
                e = np.zeros(n)
                e[restart] = 1.0
                restart += 1
                e = orthogonalize(e)
                if np.linalg.norm(e) > 1e-8:
                    r = e
                    nrm = np.linalg.norm(r)
                    break
            if r is None:
                break
        basis[:, k] = r / nrm
        w = lap @ basis[:, k]
        col = basis[:, : k + 1].T @ w
        proj[: k + 1, k] = col
        proj[k, : k + 1] = col
        k += 1
        r = w

    if k == 0:
        raise ConvergenceError("no usable search direction", residual=np.inf)

    eigvals, eigvecs = np.linalg.eigh(proj[:k, :k])
    theta = float(eigvals[0])
    v = basis[:, :k] @ eigvecs[:, 0]
    v = v - (u0 @ v) * u0
    v /= np.linalg.norm(v)
    residual = float(np.linalg.norm(lap @ v - theta * v))
    if residual > tol:
        raise ConvergenceError("Fiedler iteration did not converge", residual=residual)
    lambda2 = max(theta, 0.0)
    v = _apply_sign_convention(v)
    return SpectralResult(
        lambda2=lambda2,
        vector=v,
        degrees=d,
        index_map=list(index_map) if index_map is not None else list(range(n)),
        residual=residual,
        iterations=iterations,
    )


SIGN_EPSILON = 1e-9


def partition(result: SpectralResult) -> tuple[list[int], list[int]]:
    """Split vertices by the sign of their Fiedler components.

    Components above SIGN_EPSILON go to the positive cluster; zeros and
    negatives to the other. Returned indices are original vertex indices
    (isolated vertices were never part of the spectral problem).
    """
    plus, minus = [], []
    for pos, value in enumerate(result.vector):
        original = result.index_map[pos]
        if value > SIGN_EPSILON:
            plus.append(original)
        else:
            minus.append(original)
    return plus, minus
