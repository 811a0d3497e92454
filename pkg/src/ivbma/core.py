"""Conditional posteriors and conditional integrated likelihoods.

The outcome equation is ``Y = X beta + W gamma + eps`` and the instrument
equation ``X = Z delta + W tau + eta`` with ``(eps_i, eta_i) ~ N(0, Sigma)``.
Coefficients carry independent N(0, 1) priors, so every conditional update is
a ridge-type Gaussian posterior ``N(Omega^{-1} b, Omega^{-1})`` with
``Omega = I + G``.  For a stage we compute the full ``(G, b)`` once and read
off any sub-model by indexing, which is what makes model moves cheap.

The integrated likelihood of a sub-model, conditional on the other stage's
coefficients and ``Sigma``, is

    -1/2 log|Omega_K| + 1/2 mean_K' Omega_K mean_K

up to a constant that does not depend on the sub-model ``K``.  Differences
of these values are exact log conditional Bayes factors.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from .kernels import cholesky, trisolve
from .models import ModelPair

__all__ = [
    "DegenerateError",
    "Dataset",
    "ParameterState",
    "GaussianPosterior",
    "NormalEquations",
    "residuals",
    "second_stage_equations",
    "first_stage_equations",
    "doubled_stage_equations",
    "sur_stage_equations",
    "build_doubled_system",
    "psi_matrix",
    "rho_posterior",
    "lambda_posterior",
    "sur_lambda_posterior",
    "first_stage_posterior",
    "log_integrated_lik_second",
    "log_integrated_lik_first",
]

BETA_TOL = 1e-12


class DegenerateError(ArithmeticError):
    """A conditional update is numerically undefined at the current state."""


def _as_matrix(a, n: int, name: str) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim == 1:
        a = a.reshape(n, -1) if a.size else np.zeros((n, 0))
    if a.ndim != 2 or a.shape[0] != n:
        raise ValueError(f"{name} must have {n} rows, got shape {a.shape}")
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    """Observed data ``(Y, X, W, Z)`` plus cached cross-products.

    ``V = [X W]`` are the outcome-equation regressors and ``U = [Z W]`` the
    instrument-equation regressors.
    """

    Y: np.ndarray
    X: np.ndarray
    W: np.ndarray
    Z: np.ndarray
    w_names: tuple[str, ...] = ()
    z_names: tuple[str, ...] = ()
    x_name: str = "X"
    y_name: str = "Y"
    V: np.ndarray = field(init=False, repr=False)
    U: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        Y = np.asarray(self.Y, dtype=float).ravel()
        X = np.asarray(self.X, dtype=float).ravel()
        n = Y.shape[0]
        if n < 1:
            raise ValueError("dataset needs at least one observation")
        if X.shape[0] != n:
            raise ValueError(f"X has {X.shape[0]} rows but Y has {n}")
        W = _as_matrix(self.W, n, "W")
        Z = _as_matrix(self.Z, n, "Z")
        if Z.shape[1] < 1:
            raise ValueError("at least one instrument column is required")
        for name, arr in (("Y", Y), ("X", X), ("W", W), ("Z", Z)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite values")
        p, q = W.shape[1], Z.shape[1]
        w_names = tuple(self.w_names) or tuple(f"W{k + 1}" for k in range(p))
        z_names = tuple(self.z_names) or tuple(f"Z{j + 1}" for j in range(q))
        if len(w_names) != p or len(z_names) != q:
            raise ValueError("column name count does not match the data")
        V = np.column_stack([X, W])
        U = np.column_stack([Z, W])
        for k, v in dict(Y=Y, X=X, W=W, Z=Z, V=V, U=U, w_names=w_names, z_names=z_names).items():
            if isinstance(v, np.ndarray):
                v.flags.writeable = False
            object.__setattr__(self, k, v)
        # cross-products reused by every sweep
        grams = {
            "VtV": V.T @ V, "VtY": V.T @ Y, "VtX": V.T @ X, "VtU": V.T @ U,
            "UtU": U.T @ U, "UtY": U.T @ Y, "UtX": U.T @ X, "UtW": U.T @ W,
        }
        for k, v in grams.items():
            v.flags.writeable = False
            object.__setattr__(self, k, v)

    @property
    def n(self) -> int:
        return self.Y.shape[0]

    @property
    def p(self) -> int:
        return self.W.shape[1]

    @property
    def q(self) -> int:
        return self.Z.shape[1]

    @property
    def second_stage_names(self) -> tuple[str, ...]:
        return (self.x_name,) + self.w_names

    @property
    def first_stage_names(self) -> tuple[str, ...]:
        return self.z_names + self.w_names


@dataclass
class ParameterState:
    """One Gibbs state: coefficients of both stages, ``Sigma`` and the models."""

    rho: np.ndarray
    lam: np.ndarray
    Sigma: np.ndarray
    pair: ModelPair

    @property
    def beta(self) -> float:
        return float(self.rho[0])

    def copy(self) -> "ParameterState":
        return ParameterState(self.rho.copy(), self.lam.copy(), self.Sigma.copy(), self.pair)


@dataclass
class GaussianPosterior:
    """``N(mean, precision^{-1})`` with the lower Cholesky factor of the precision."""

    mean: np.ndarray
    precision: np.ndarray
    chol: np.ndarray
    _lil: float | None = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    def log_integrated_lik(self) -> float:
        """``-1/2 log|P| + 1/2 m' P m``; zero for the empty model."""
        if self._lil is None:
            if self.dim == 0:
                self._lil = 0.0
            else:
                quad = float(self.mean @ self.precision @ self.mean)
                self._lil = -float(np.sum(np.log(np.diag(self.chol)))) + 0.5 * quad
        return self._lil


@dataclass
class NormalEquations:
    """Full-model ``(G, b)``: a sub-model ``K`` has precision ``I + G[K, K]``
    and posterior mean ``(I + G[K, K])^{-1} b[K]``."""

    G: np.ndarray
    b: np.ndarray

    def posterior(self, include: np.ndarray) -> GaussianPosterior:
        idx = include.nonzero()[0]
        d = idx.shape[0]
        if d == 0:
            return GaussianPosterior(np.zeros(0), np.zeros((0, 0)), np.zeros((0, 0)))
        P = self.G[idx][:, idx]
        P.flat[:: d + 1] += 1.0
        c = cholesky(P)
        u = trisolve(c, self.b[idx])
        mean = trisolve(c, u, trans=True)
        # m' P m = u'u
        lil = -float(np.log(c.diagonal()).sum()) + 0.5 * float(u @ u)
        return GaussianPosterior(mean, P, c, lil)

    def log_integrated_lik(self, include: np.ndarray) -> float:
        return self.posterior(include).log_integrated_lik()


def residuals(data: Dataset, rho: np.ndarray, lam: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``eps = Y - X beta - W gamma`` and ``eta = X - Z delta - W tau``."""
    rho = np.asarray(rho, dtype=float)
    lam = np.asarray(lam, dtype=float)
    if rho.shape != (1 + data.p,) or lam.shape != (data.q + data.p,):
        raise ValueError(f"coefficient lengths {rho.shape}, {lam.shape} do not match p={data.p}, q={data.q}")
    return data.Y - data.V @ rho, data.X - data.U @ lam


def _sigma_parts(Sigma: np.ndarray) -> tuple[float, float, float]:
    s11, s21, s22 = float(Sigma[0, 0]), float(Sigma[1, 0]), float(Sigma[1, 1])
    if s11 <= 0 or s22 <= 0:
        raise DegenerateError(f"Sigma has non-positive diagonal ({s11}, {s22})")
    return s11, s21, s22


def second_stage_equations(data: Dataset, lam: np.ndarray, Sigma: np.ndarray) -> NormalEquations:
    """Outcome-equation update given ``lam`` and ``Sigma``.

    Conditioning ``eps`` on ``eta`` gives ``Ytilde = V rho + nu`` with
    ``Ytilde = Y - (s21/s22) eta`` and ``Var(nu) = xi = s11 - s21^2/s22``.
    """
    s11, s21, s22 = _sigma_parts(Sigma)
    xi = s11 - s21 * s21 / s22
    if not xi > 0:
        raise DegenerateError(f"conditional variance xi = {xi} is not positive")
    c = s21 / s22
    # V'eta = V'X - V'U lam
    Vt_ytilde = data.VtY - c * (data.VtX - data.VtU @ lam)
    return NormalEquations(data.VtV / xi, Vt_ytilde / xi)


def sur_stage_equations(data: Dataset, rho: np.ndarray, Sigma: np.ndarray) -> NormalEquations:
    """Instrument-equation update by conditioning ``eta`` on ``eps``.

    ``X* = X - (s21/s11) eps = U lam + nu`` with ``Var(nu) = omega =
    s22 - s21^2/s11``.  Used when the endogenous regressor is out of the
    outcome model, where ``eps = Y - W gamma`` does not involve ``X``.
    """
    s11, s21, s22 = _sigma_parts(Sigma)
    omega = s22 - s21 * s21 / s11
    if not omega > 0:
        raise DegenerateError(f"conditional variance omega = {omega} is not positive")
    c = s21 / s11
    # U'eps = U'Y - U'V rho
    Ut_xstar = data.UtX - c * (data.UtY - data.VtU.T @ rho)
    return NormalEquations(data.UtU / omega, Ut_xstar / omega)


def psi_matrix(beta: float, Sigma: np.ndarray) -> np.ndarray:
    """Covariance of ``(theta_i, eta_i)`` in the doubled system."""
    s11, s21, s22 = float(Sigma[0, 0]), float(Sigma[1, 0]), float(Sigma[1, 1])
    off = s22 + s21 / beta
    return np.array([[s22 + s11 / beta**2 + 2.0 * s21 / beta, off], [off, s22]])


def _whitener(beta: float, Sigma: np.ndarray) -> np.ndarray:
    """``A`` with ``A' Psi A = I``, applied on the right of each row pair.

    With ``Psi = Phi Phi'`` (``Phi`` lower), ``A = Phi'^{-1}``.
    """
    phi = cholesky(psi_matrix(beta, Sigma))
    return trisolve(phi, np.eye(2)).T


def _check_beta(rho: np.ndarray) -> float:
    beta = float(rho[0])
    if beta == 0.0:
        raise DegenerateError("beta is zero; use the SUR update")
    if abs(beta) < BETA_TOL:
        raise DegenerateError(f"|beta| = {abs(beta):.3g} is numerically zero while X is in the outcome model")
    return beta


def build_doubled_system(data: Dataset, rho: np.ndarray, Sigma: np.ndarray,
                         M: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Stacked, whitened ``2n`` observation system for the instrument equation.

    Substituting the instrument equation into the outcome equation gives
    ``Y* = (Y - W gamma)/beta = U lam + theta`` alongside ``X = U lam + eta``;
    the pair ``(theta_i, eta_i)`` has covariance ``Psi``.  Every row pair is
    post-multiplied by the whitening matrix so the stacked errors are iid
    N(0, 1).  Returns ``S`` (length ``2n``) and ``T`` (``2n x m``); rows
    ``0..n-1`` come from the first whitened component, ``n..2n-1`` from the
    second.
    """
    beta = _check_beta(rho)
    A = _whitener(beta, Sigma)
    ystar = (data.Y - data.W @ rho[1:]) / beta
    pairs = np.column_stack([ystar, data.X]) @ A
    S = np.concatenate([pairs[:, 0], pairs[:, 1]])
    U = data.U if M is None else data.U[:, np.asarray(M, dtype=bool)]
    # [U_j U_j] A = U_j * (column sums of A)
    a0, a1 = A.sum(axis=0)
    T = np.vstack([U * a0, U * a1])
    return S, T


def doubled_stage_equations(data: Dataset, rho: np.ndarray, Sigma: np.ndarray) -> NormalEquations:
    """``(T'T, T'S)`` of :func:`build_doubled_system` from cached cross-products.

    Each row of ``T`` is ``U_i (1,1) A``, so ``T'T = g U'U`` with
    ``g = 1' Psi^{-1} 1`` and ``T'S = h_1 U'Y* + h_2 U'X`` with
    ``h = 1' Psi^{-1}``.
    """
    beta = _check_beta(rho)
    A = _whitener(beta, Sigma)
    h = A.sum(axis=0) @ A.T
    g = float(h.sum())
    Ut_ystar = (data.UtY - data.UtW @ rho[1:]) / beta
    return NormalEquations(g * data.UtU, h[0] * Ut_ystar + h[1] * data.UtX)


def first_stage_equations(data: Dataset, rho: np.ndarray, Sigma: np.ndarray) -> NormalEquations:
    """Routes on whether the endogenous coefficient is a structural zero."""
    if rho[0] == 0.0:
        return sur_stage_equations(data, rho, Sigma)
    return doubled_stage_equations(data, rho, Sigma)


def rho_posterior(data: Dataset, lam: np.ndarray, Sigma: np.ndarray, L: np.ndarray) -> GaussianPosterior:
    return second_stage_equations(data, lam, Sigma).posterior(L)


def lambda_posterior(data: Dataset, rho: np.ndarray, Sigma: np.ndarray, M: np.ndarray) -> GaussianPosterior:
    """Posterior of the active first-stage coefficients when ``beta != 0``."""
    return doubled_stage_equations(data, rho, Sigma).posterior(M)


def sur_lambda_posterior(data: Dataset, rho: np.ndarray, Sigma: np.ndarray, M: np.ndarray) -> GaussianPosterior:
    """Posterior of the active first-stage coefficients when ``beta == 0``."""
    if rho[0] != 0.0:
        raise DegenerateError("SUR update requires the endogenous coefficient to be zero")
    return sur_stage_equations(data, rho, Sigma).posterior(M)


def first_stage_posterior(data: Dataset, rho: np.ndarray, Sigma: np.ndarray, M: np.ndarray) -> GaussianPosterior:
    return first_stage_equations(data, rho, Sigma).posterior(M)


def log_integrated_lik_second(data: Dataset, lam: np.ndarray, Sigma: np.ndarray, L: np.ndarray) -> float:
    return rho_posterior(data, lam, Sigma, L).log_integrated_lik()


def log_integrated_lik_first(data: Dataset, rho: np.ndarray, Sigma: np.ndarray, M: np.ndarray) -> float:
    return first_stage_posterior(data, rho, Sigma, M).log_integrated_lik()
