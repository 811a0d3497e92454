"""Posterior summaries of chain traces and replicate-level error measures."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .models import indicator_string
from .sampler import ChainTrace

__all__ = [
    "QUANTILES",
    "StageSummary",
    "PosteriorSummary",
    "summarize",
    "conditional_density",
    "model_size_trajectory",
    "replicate_mse",
    "visit_frequencies",
]

QUANTILES = (0.025, 0.5, 0.975)
STAGES = ("first", "second")


@dataclass
class StageSummary:
    names: tuple[str, ...]
    inclusion_prob: np.ndarray
    mean: np.ndarray
    sd: np.ndarray
    quantiles: np.ndarray  # (3, k): 2.5%, 50%, 97.5%
    avg_model_size: float
    acceptance_rate: float

    def rows(self):
        for j, name in enumerate(self.names):
            yield name, self.inclusion_prob[j], self.mean[j], self.sd[j], *self.quantiles[:, j]


@dataclass
class PosteriorSummary:
    first: StageSummary
    second: StageSummary
    n_kept: int

    def stage(self, which: str) -> StageSummary:
        if which not in STAGES:
            raise ValueError(f"stage must be one of {STAGES}")
        return self.first if which == "first" else self.second


def _stage(draws, include, names, rate) -> StageSummary:
    # moments over all kept draws, structural zeros included
    return StageSummary(
        names=tuple(names) or tuple(str(j) for j in range(draws.shape[1])),
        inclusion_prob=include.mean(axis=0),
        mean=draws.mean(axis=0),
        sd=draws.std(axis=0),
        quantiles=np.quantile(draws, QUANTILES, axis=0),
        avg_model_size=float(include.sum(axis=1).mean()),
        acceptance_rate=rate,
    )


def summarize(trace: ChainTrace) -> PosteriorSummary:
    if len(trace) == 0:
        raise ValueError("cannot summarize an empty trace")
    st = trace.stats
    return PosteriorSummary(
        first=_stage(trace.lam, trace.M, trace.first_stage_names, st.acceptance_M),
        second=_stage(trace.rho, trace.L, trace.second_stage_names, st.acceptance_L),
        n_kept=len(trace),
    )


def _index(trace: ChainTrace, variable, stage: str) -> int:
    names = trace.first_stage_names if stage == "first" else trace.second_stage_names
    if isinstance(variable, str):
        return names.index(variable)
    return int(variable)


def conditional_density(trace: ChainTrace, variable, stage: str) -> np.ndarray | None:
    """Draws of one coefficient from the iterations where it is in the model.

    Returns ``None`` if the variable is never included.
    """
    if stage not in STAGES:
        raise ValueError(f"stage must be one of {STAGES}")
    j = _index(trace, variable, stage)
    draws, include = (trace.lam, trace.M) if stage == "first" else (trace.rho, trace.L)
    keep = include[:, j]
    if not keep.any():
        return None
    return draws[keep, j]


def model_size_trajectory(traces: list[ChainTrace]) -> dict[str, np.ndarray]:
    """Running mean of model size per sweep, one row per chain."""
    def running(sizes):
        return np.cumsum(sizes, dtype=float) / np.arange(1, sizes.shape[0] + 1)

    return {
        "first": np.vstack([running(t.size_M) for t in traces]),
        "second": np.vstack([running(t.size_L) for t in traces]),
    }


def replicate_mse(summaries: list[PosteriorSummary], truths: list[dict]) -> dict[str, float]:
    """Average over replicates of the summed squared error of posterior means.

    ``truths[i]`` holds ``"rho"`` and ``"lambda"`` for replicate ``i``.  Returns
    the per-stage averages and their sum under ``"total"``.
    """
    if len(summaries) != len(truths):
        raise ValueError("need one truth record per summary")
    if not summaries:
        raise ValueError("no replicates")
    first, second = [], []
    for s, t in zip(summaries, truths):
        rho, lam = np.asarray(t["rho"], dtype=float), np.asarray(t["lambda"], dtype=float)
        if rho.shape != s.second.mean.shape or lam.shape != s.first.mean.shape:
            raise ValueError("truth dimensions do not match the summary")
        first.append(float(np.sum((s.first.mean - lam) ** 2)))
        second.append(float(np.sum((s.second.mean - rho) ** 2)))
    f, sec = float(np.mean(first)), float(np.mean(second))
    return {"first": f, "second": sec, "total": f + sec}


def visit_frequencies(trace: ChainTrace) -> dict[tuple[str, str], float]:
    """Empirical frequency of each visited ``(L, M)`` pair, keyed by 0/1 strings."""
    k = trace.L.shape[1]
    rows, counts = np.unique(np.hstack([trace.L, trace.M]), axis=0, return_counts=True)
    total = counts.sum()
    return {
        (indicator_string(r[:k]), indicator_string(r[k:])): c / total
        for r, c in zip(rows, counts)
    }
