"""Synthetic two-stage datasets from a sparse default design.

Defaults: n = 120, p = 15 covariates, q = 10 candidate instruments,
``Sigma = [[1, 0.4], [0.4, 1]]``, and a sparse truth in both stages.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .core import Dataset
from .kernels import cholesky

__all__ = ["SimSpec", "default_truth", "generate", "truth_record"]

# 1-based indices, as the design is usually written
_GAMMA = {1: 2.0, 4: 1.4, 8: 2.7, 9: 1.25, 13: 3.3}
_DELTA = {3: 4.0, 7: 1.2, 8: 3.0, 10: 0.9}
_TAU = {2: 2.5, 9: 1.7, 13: 0.8}
_BETA = 1.5


def _embed(values: dict[int, float], size: int) -> np.ndarray:
    out = np.zeros(size)
    for k, v in values.items():
        if k <= size:
            out[k - 1] = v
    return out


@dataclass(frozen=True)
class SimSpec:
    n: int = 120
    p: int = 15
    q: int = 10
    rho_true: np.ndarray = field(default=None)
    lambda_true: np.ndarray = field(default=None)
    Sigma_true: np.ndarray = field(default=None)
    seed: int = 0

    def __post_init__(self):
        if self.n < 1 or self.p < 0 or self.q < 1:
            raise ValueError(f"invalid dimensions n={self.n}, p={self.p}, q={self.q}")
        rho = self.rho_true
        if rho is None:
            rho = np.concatenate([[_BETA], _embed(_GAMMA, self.p)])
        lam = self.lambda_true
        if lam is None:
            lam = np.concatenate([_embed(_DELTA, self.q), _embed(_TAU, self.p)])
        Sigma = self.Sigma_true
        if Sigma is None:
            Sigma = np.array([[1.0, 0.4], [0.4, 1.0]])
        rho, lam, Sigma = (np.asarray(a, dtype=float) for a in (rho, lam, Sigma))
        if rho.shape != (1 + self.p,):
            raise ValueError(f"rho_true must have length {1 + self.p}")
        if lam.shape != (self.q + self.p,):
            raise ValueError(f"lambda_true must have length {self.q + self.p}")
        cholesky(Sigma)
        object.__setattr__(self, "rho_true", rho)
        object.__setattr__(self, "lambda_true", lam)
        object.__setattr__(self, "Sigma_true", Sigma)

    def with_seed(self, seed: int) -> "SimSpec":
        return replace(self, seed=seed)


def default_truth() -> SimSpec:
    return SimSpec()


def generate(spec: SimSpec, rng: np.random.Generator | None = None) -> tuple[Dataset, dict]:
    """Draw ``W`` and ``Z`` iid N(0, 1), correlated errors, then ``X`` and ``Y``."""
    if rng is None:
        rng = np.random.default_rng(spec.seed)
    n, p, q = spec.n, spec.p, spec.q
    W = rng.standard_normal((n, p))
    Z = rng.standard_normal((n, q))
    E = rng.standard_normal((n, 2)) @ cholesky(spec.Sigma_true).T
    eps, eta = E[:, 0], E[:, 1]
    delta, tau = spec.lambda_true[:q], spec.lambda_true[q:]
    X = Z @ delta + W @ tau + eta
    Y = X * spec.rho_true[0] + W @ spec.rho_true[1:] + eps
    return Dataset(Y, X, W, Z), truth_record(spec)


def truth_record(spec: SimSpec) -> dict:
    return {
        "n": spec.n,
        "p": spec.p,
        "q": spec.q,
        "seed": spec.seed,
        "rho": spec.rho_true.tolist(),
        "lambda": spec.lambda_true.tolist(),
        "Sigma": spec.Sigma_true.tolist(),
    }
