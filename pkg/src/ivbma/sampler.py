"""Gibbs samplers: IVBMA (with model moves) and the fixed-model IV baseline.

One IVBMA sweep updates, in order, the outcome model ``L``, its coefficients
``rho``, the instrument model ``M``, its coefficients ``lam`` and finally
``Sigma``.  Model moves are Metropolis steps on single-variable flips whose
acceptance ratio is a conditional Bayes factor times the admissibility
indicator.  The IV baseline is the same sweep with both models held at the
full model.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import (
    Dataset,
    DegenerateError,
    GaussianPosterior,
    NormalEquations,
    ParameterState,
    first_stage_equations,
    second_stage_equations,
)
from .kernels import CholeskyError, inv_wishart_sample, make_rng, mvn_sample, spawn_rngs
from .models import ModelPair, full_pair, is_valid_pair, neighborhood_propose

__all__ = [
    "SamplerConfig",
    "SamplerError",
    "SweepStats",
    "ChainTrace",
    "initial_state",
    "mc3_step",
    "draw_coefficients",
    "sigma_step",
    "ivbma_sweep",
    "iv_sweep",
    "run_chain",
    "run_chains",
]

log = logging.getLogger(__name__)

MODES = ("ivbma", "iv")


@dataclass(frozen=True)
class SamplerConfig:
    iterations: int = 50_000
    burn_in: int = 10_000
    seed: int = 0
    mode: str = "ivbma"
    thin: int = 1

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be positive")
        if not 0 <= self.burn_in < self.iterations:
            raise ValueError(f"burn_in must lie in [0, iterations), got {self.burn_in}")
        if self.thin < 1:
            raise ValueError("thin must be positive")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")

    @property
    def n_kept(self) -> int:
        return -(-(self.iterations - self.burn_in) // self.thin)


class SamplerError(RuntimeError):
    """A numerical degeneracy that aborts the chain, tagged with the sweep index."""

    def __init__(self, iteration: int, cause: Exception):
        self.iteration = iteration
        self.cause = cause
        super().__init__(f"iteration {iteration}: {cause}")


@dataclass
class SweepStats:
    proposed_L: int = 0
    accepted_L: int = 0
    proposed_M: int = 0
    accepted_M: int = 0
    psi_failures: int = 0
    psi_failure_iters: list[int] = field(default_factory=list)

    @property
    def acceptance_L(self) -> float:
        return self.accepted_L / self.proposed_L if self.proposed_L else float("nan")

    @property
    def acceptance_M(self) -> float:
        return self.accepted_M / self.proposed_M if self.proposed_M else float("nan")


def initial_state(data: Dataset) -> ParameterState:
    """Full models, zero coefficients, identity ``Sigma``."""
    return ParameterState(
        rho=np.zeros(1 + data.p),
        lam=np.zeros(data.q + data.p),
        Sigma=np.eye(2),
        pair=full_pair(data.p, data.q),
    )


def draw_coefficients(post: GaussianPosterior, include: np.ndarray, rng) -> np.ndarray:
    """Full coefficient vector: a posterior draw on ``include``, exact zeros elsewhere."""
    out = np.zeros(include.shape[0])
    out[include] = mvn_sample(post.mean, post.precision, rng, chol=post.chol)
    return out


def sigma_step(data: Dataset, rho: np.ndarray, lam: np.ndarray, rng) -> np.ndarray:
    """``Sigma ~ IW(I + Q, n + 3)`` with ``Q`` the residual cross-product."""
    eps = data.Y - data.V @ rho
    eta = data.X - data.U @ lam
    ee, eh, hh = eps @ eps, eps @ eta, eta @ eta
    # I + [eps eta]'[eps eta]
    scale = np.array([[1.0 + ee, eh], [eh, 1.0 + hh]])
    return inv_wishart_sample(scale, data.n + 3, rng)


def _mh_accept(log_alpha: float, rng) -> bool:
    return log_alpha >= 0.0 or np.log(rng.random()) < log_alpha


def mc3_step(eqs: NormalEquations, current: np.ndarray, current_post: GaussianPosterior,
             admissible, rng: np.random.Generator, move: bool = True):
    """Propose a single flip of ``current`` and accept it with probability
    ``min(1, CBF * 1{admissible(proposal)})``.

    Returns ``(model, posterior, accepted)``.
    """
    proposal, _ = neighborhood_propose(current, rng)
    if move and admissible(proposal):
        post = eqs.posterior(proposal)
        if _mh_accept(post.log_integrated_lik() - current_post.log_integrated_lik(), rng):
            return proposal, post, True
    return current, current_post, False


def ivbma_sweep(data: Dataset, state: ParameterState, rng: np.random.Generator,
                stats: SweepStats | None = None, iteration: int = 0,
                move_models: bool = True) -> ParameterState:
    """One five-step IVBMA update; returns a new state.

    ``move_models=False`` rejects every model proposal (the proposals are
    still drawn), which reduces the sweep to the fixed-model sampler.
    """
    if stats is None:
        stats = SweepStats()
    q = data.q
    L, M = state.pair.L, state.pair.M
    Sigma = state.Sigma

    # 1. outcome model
    eq2 = second_stage_equations(data, state.lam, Sigma)
    L, post, accepted = mc3_step(eq2, L, eq2.posterior(L), lambda l: is_valid_pair(l, M, q),
                                 rng, move_models)
    stats.proposed_L += 1
    stats.accepted_L += accepted

    # 2. outcome coefficients, structural zeros outside L
    rho = draw_coefficients(post, L, rng)

    # 3-4. instrument model and coefficients
    lam = state.lam
    stats.proposed_M += 1
    try:
        eq1 = first_stage_equations(data, rho, Sigma)
        M_new, post1, accepted = mc3_step(eq1, M, eq1.posterior(M), lambda m: is_valid_pair(L, m, q),
                                          rng, move_models)
        lam = draw_coefficients(post1, M_new, rng)
        M = M_new
        stats.accepted_M += accepted
    except (CholeskyError, DegenerateError) as exc:
        # keep (M, lam) from the previous sweep
        stats.psi_failures += 1
        stats.psi_failure_iters.append(iteration)
        log.warning("first-stage update skipped at iteration %d: %s", iteration, exc)

    # 5. error covariance
    Sigma = sigma_step(data, rho, lam, rng)
    pair = state.pair if (L is state.pair.L and M is state.pair.M) else ModelPair(L, M, q)
    return ParameterState(rho, lam, Sigma, pair)


def iv_sweep(data: Dataset, state: ParameterState, rng: np.random.Generator,
             stats: SweepStats | None = None, iteration: int = 0) -> ParameterState:
    """Three-step update of ``rho``, ``lam`` and ``Sigma`` with no model moves."""
    L, M = state.pair.L, state.pair.M
    if not (L.all() and M.all()):
        raise ValueError("the IV sampler requires the full models")
    post = second_stage_equations(data, state.lam, state.Sigma).posterior(L)
    rho = draw_coefficients(post, L, rng)
    lam = state.lam
    try:
        post1 = first_stage_equations(data, rho, state.Sigma).posterior(M)
        lam = draw_coefficients(post1, M, rng)
    except (CholeskyError, DegenerateError) as exc:
        if stats is not None:
            stats.psi_failures += 1
            stats.psi_failure_iters.append(iteration)
        log.warning("first-stage update skipped at iteration %d: %s", iteration, exc)
    Sigma = sigma_step(data, rho, lam, rng)
    return ParameterState(rho, lam, Sigma, state.pair)


@dataclass
class ChainTrace:
    """Kept draws of one chain plus per-iteration model sizes and counters.

    ``size_L`` and ``size_M`` cover every sweep, burn-in included; all other
    arrays hold kept iterations only.
    """

    rho: np.ndarray
    lam: np.ndarray
    Sigma: np.ndarray
    L: np.ndarray
    M: np.ndarray
    iteration: np.ndarray
    size_L: np.ndarray
    size_M: np.ndarray
    stats: SweepStats
    config: SamplerConfig
    second_stage_names: tuple[str, ...] = ()
    first_stage_names: tuple[str, ...] = ()

    def __len__(self) -> int:
        return self.rho.shape[0]

    @property
    def q(self) -> int:
        return self.M.shape[1] - self.L.shape[1] + 1


def run_chain(data: Dataset, config: SamplerConfig, rng: np.random.Generator | None = None,
              init: ParameterState | None = None, move_models: bool = True) -> ChainTrace:
    """Run ``config.iterations`` sweeps and keep the post-burn-in, thinned draws.

    The generator defaults to ``make_rng(config.seed)``; identical inputs give
    a bit-identical trace.
    """
    if rng is None:
        rng = make_rng(config.seed)
    state = init.copy() if init is not None else initial_state(data)
    if not state.pair.valid:
        raise ValueError("initial model pair is not admissible")
    ivbma = config.mode == "ivbma"
    if not ivbma:
        state.pair = full_pair(data.p, data.q)

    K = config.n_kept
    p1, qp = 1 + data.p, data.q + data.p
    rho = np.empty((K, p1))
    lam = np.empty((K, qp))
    Sig = np.empty((K, 2, 2))
    Ls = np.empty((K, p1), dtype=bool)
    Ms = np.empty((K, qp), dtype=bool)
    its = np.empty(K, dtype=np.int64)
    size_L = np.empty(config.iterations, dtype=np.int32)
    size_M = np.empty(config.iterations, dtype=np.int32)
    stats = SweepStats()

    k = 0
    for s in range(config.iterations):
        try:
            if ivbma:
                state = ivbma_sweep(data, state, rng, stats, s, move_models=move_models)
            else:
                state = iv_sweep(data, state, rng, stats, s)
        except (DegenerateError, CholeskyError) as exc:
            raise SamplerError(s, exc) from exc
        size_L[s] = state.pair.L.sum()
        size_M[s] = state.pair.M.sum()
        if s >= config.burn_in and (s - config.burn_in) % config.thin == 0:
            rho[k], lam[k], Sig[k] = state.rho, state.lam, state.Sigma
            Ls[k], Ms[k] = state.pair.L, state.pair.M
            its[k] = s
            k += 1

    return ChainTrace(rho, lam, Sig, Ls, Ms, its, size_L, size_M, stats, config,
                      data.second_stage_names, data.first_stage_names)


def _chain_job(args):
    data, config, rng = args
    return run_chain(data, config, rng=rng)


def default_workers() -> int:
    env = os.environ.get("IVBMA_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def run_chains(data: Dataset, config: SamplerConfig, n_chains: int,
               workers: int | None = None) -> list[ChainTrace]:
    """Independent chains whose streams are jumps of the master ``config.seed``."""
    rngs = spawn_rngs(config.seed, n_chains)
    jobs = [(data, config, r) for r in rngs]
    workers = min(workers or default_workers(), n_chains)
    if workers <= 1:
        return [_chain_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_chain_job, jobs))
