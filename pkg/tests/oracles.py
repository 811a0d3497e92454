"""Independent reference computations used by the tests.

Nothing here imports the package's linear algebra.  The likelihood is the
plain bivariate normal density of the two structural errors, written out
with the closed-form 2x2 inverse, and integrals over coefficients are done by
adaptive cubature.
"""

from __future__ import annotations

import itertools

import numpy as np
from scipy import integrate, optimize


def det_laplace(a) -> float:
    """Determinant by cofactor expansion along the first row."""
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    if n == 1:
        return float(a[0, 0])
    total = 0.0
    for j in range(n):
        minor = np.delete(np.delete(a, 0, axis=0), j, axis=1)
        total += (-1) ** j * a[0, j] * det_laplace(minor)
    return total


def bivariate_loglik(eps, eta, Sigma):
    """Sum over rows of log N2((eps_i, eta_i); 0, Sigma).

    ``eps`` and ``eta`` may carry leading batch axes; the sum is over the last.
    """
    s11, s12, s22 = Sigma[0, 0], Sigma[0, 1], Sigma[1, 1]
    det = s11 * s22 - s12 * s12
    quad = (s22 * np.sum(eps * eps, -1) - 2 * s12 * np.sum(eps * eta, -1)
            + s11 * np.sum(eta * eta, -1)) / det
    n = eps.shape[-1]
    return -n * np.log(2 * np.pi) - 0.5 * n * np.log(det) - 0.5 * quad


def joint_loglik(Y, X, W, Z, rho, lam, Sigma) -> float:
    """log p(Y, X | rho, lam, Sigma); the map (Y, X) -> (eps, eta) has unit Jacobian."""
    V = np.column_stack([X, W])
    U = np.column_stack([Z, W])
    return float(bivariate_loglik(Y - V @ rho, X - U @ lam, Sigma))


def _log_std_normal(theta):
    return -0.5 * theta.shape[-1] * np.log(2 * np.pi) - 0.5 * np.sum(theta * theta, -1)


def log_marginal(logf, dim: int) -> float:
    """log of the integral of ``exp(logf(theta))`` over R^dim, by adaptive cubature.

    ``logf`` maps an ``(npoints, dim)`` array to ``npoints`` values and must
    be concave (here: Gaussian likelihood times Gaussian prior).  The mode and
    curvature come from a numerical optimiser and finite differences; they
    only place and size the integration box.
    """
    if dim == 0:
        return float(logf(np.zeros((1, 0)))[0])

    def f1(t):
        return float(logf(t[None, :])[0])

    res = optimize.minimize(lambda t: -f1(t), np.zeros(dim), method="BFGS", options={"gtol": 1e-10})
    mode = res.x
    peak = f1(mode)
    # curvature by central differences; exact for a quadratic up to rounding
    h = 1e-3
    H = np.zeros((dim, dim))
    for i, j in itertools.product(range(dim), repeat=2):
        ei, ej = np.eye(dim)[i] * h, np.eye(dim)[j] * h
        H[i, j] = -(f1(mode + ei + ej) - f1(mode + ei - ej)
                    - f1(mode - ei + ej) + f1(mode - ei - ej)) / (4 * h * h)
    sd = np.sqrt(np.diag(np.linalg.inv(H)))
    res = integrate.cubature(lambda t: np.exp(logf(t) - peak), mode - 12 * sd, mode + 12 * sd,
                             rtol=1e-10, atol=0.0)
    if res.status != "converged":
        raise RuntimeError("quadrature did not converge")
    return peak + float(np.log(res.estimate))


def log_marginal_second(Y, X, W, Z, lam, Sigma, L) -> float:
    """log of the integral over active rho of p(Y, X | rho, lam, Sigma) N(rho_L; 0, I)."""
    idx = np.flatnonzero(L)
    V = np.column_stack([X, W])[:, idx]
    eta = X - np.column_stack([Z, W]) @ lam

    def logf(t):
        return bivariate_loglik(Y - t @ V.T, eta, Sigma) + _log_std_normal(t)

    return log_marginal(logf, idx.size)


def log_marginal_first(Y, X, W, Z, rho, Sigma, M) -> float:
    """log of the integral over active lam of p(Y, X | rho, lam, Sigma) N(lam_M; 0, I)."""
    idx = np.flatnonzero(M)
    U = np.column_stack([Z, W])[:, idx]
    eps = Y - np.column_stack([X, W]) @ rho

    def logf(t):
        return bivariate_loglik(eps, X - t @ U.T, Sigma) + _log_std_normal(t)

    return log_marginal(logf, idx.size)


def scalar_posterior(v, y, noise_var):
    """Hand formula for one regressor, unit prior: precision and mean."""
    prec = 1.0 + float(v @ v) / noise_var
    return prec, float(v @ y) / noise_var / prec


def enumerate_pairs(p: int, q: int):
    """All (L, M) indicator pairs in the admissible set, by brute force."""
    for L in itertools.product([False, True], repeat=1 + p):
        for M in itertools.product([False, True], repeat=q + p):
            Lw = np.array(L[1:], dtype=bool)
            Mz, Mw = np.array(M[:q], dtype=bool), np.array(M[q:], dtype=bool)
            if Mz.any() or (Mw & ~Lw).any():
                yield np.array(L), np.array(M)
