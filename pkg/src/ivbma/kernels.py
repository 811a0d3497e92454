"""Linear-algebra and sampling kernels shared by every conditional update.

Everything here operates on small dense matrices.  Covariances and precisions
are handled through their Cholesky factors; no explicit inverse is formed.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.linalg import lapack

_dtrtrs = lapack.get_lapack_funcs("trtrs", dtype=np.float64)

__all__ = [
    "CholeskyError",
    "make_rng",
    "spawn_rngs",
    "stream",
    "cholesky",
    "log_det_psd",
    "mvn_sample",
    "inv_wishart_sample",
    "trisolve",
]


class CholeskyError(np.linalg.LinAlgError):
    """Raised when a matrix expected to be positive definite is not.

    ``pivot`` is the zero-based index of the leading minor that failed.
    """

    def __init__(self, pivot: int, msg: str | None = None):
        self.pivot = pivot
        super().__init__(msg or f"matrix is not positive definite (pivot {pivot})")


def make_rng(seed: int | None = None) -> np.random.Generator:
    """Generator backed by PCG64 (128-bit state, supports ``jumped``)."""
    return np.random.Generator(np.random.PCG64(seed))


def spawn_rngs(seed: int, count: int) -> list[np.random.Generator]:
    """Independent streams for ``count`` chains derived from one master seed.

    Stream ``i`` is the master PCG64 stream advanced by ``i + 1`` jumps of
    2**127 draws, so the streams never overlap and stream ``i`` does not
    depend on ``count``.
    """
    return [stream(seed, i) for i in range(count)]


def stream(seed: int, index: int) -> np.random.Generator:
    """Stream ``index`` of the family used by :func:`spawn_rngs`."""
    return np.random.Generator(np.random.PCG64(seed).jumped(index + 1))


def cholesky(a: np.ndarray) -> np.ndarray:
    """Lower-triangular ``L`` with ``L @ L.T == a``.

    Raises
    ------
    CholeskyError
        If ``a`` is not positive definite; carries the failing pivot.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if a.shape[0] == 0:
        return np.zeros((0, 0))
    c, info = lapack.dpotrf(a, lower=1, clean=1, overwrite_a=0)
    if info > 0:
        raise CholeskyError(info - 1)
    if info < 0:
        raise ValueError(f"illegal value in argument {-info} of dpotrf")
    return c


def trisolve(c: np.ndarray, b: np.ndarray, trans: bool = False) -> np.ndarray:
    """Solve ``c x = b`` (or ``c' x = b``) for lower-triangular ``c``.

    Thin LAPACK call; the scipy wrapper's validation dominates at these sizes.
    """
    x, info = _dtrtrs(c, b, lower=1, trans=int(trans))
    if info != 0:
        raise np.linalg.LinAlgError(f"singular triangular factor (info {info})")
    return x


def log_det_psd(a: np.ndarray) -> float:
    """log|a| for positive definite ``a``, from the Cholesky diagonal."""
    c = cholesky(a)
    return 2.0 * float(np.sum(np.log(np.diag(c))))


def mvn_sample(mean: np.ndarray, precision: np.ndarray, rng: np.random.Generator,
               chol: np.ndarray | None = None) -> np.ndarray:
    """One draw from N(mean, precision^{-1}).

    If ``precision = L L'`` then ``mean + L'^{-1} z`` has covariance
    ``(L L')^{-1}``.  Pass a precomputed factor as ``chol`` to skip the
    decomposition.
    """
    mean = np.asarray(mean, dtype=float)
    d = mean.shape[0]
    if precision.shape != (d, d):
        raise ValueError(f"mean has length {d} but precision has shape {precision.shape}")
    if d == 0:
        return np.zeros(0)
    if chol is None:
        chol = cholesky(precision)
    z = rng.standard_normal(d)
    return mean + trisolve(chol, z, trans=True)


@lru_cache(maxsize=None)
def _strict_lower(d: int):
    return np.tril_indices(d, -1)


def inv_wishart_sample(scale: np.ndarray, df: float, rng: np.random.Generator) -> np.ndarray:
    """Draw ``S`` with ``S^{-1} ~ Wishart(scale^{-1}, df)``, so ``E[S^{-1}] = df * scale^{-1}``.

    Uses the Bartlett decomposition ``G = A A'`` of a standard Wishart and
    returns ``R G^{-1} R'`` where ``scale = R R'``.
    """
    scale = np.asarray(scale, dtype=float)
    d = scale.shape[0]
    if df <= d - 1:
        raise ValueError(f"degrees of freedom {df} must exceed dim - 1 = {d - 1}")
    r = cholesky(scale)
    a = np.zeros((d, d))
    a.flat[:: d + 1] = np.sqrt(rng.chisquare(df - np.arange(d)))
    lower = _strict_lower(d)
    a[lower] = rng.standard_normal(len(lower[0]))
    # m = A^{-1} R'  ->  m'm = R (A A')^{-1} R'
    m = trisolve(a, r.T)
    s = m.T @ m
    return 0.5 * (s + s.T)

