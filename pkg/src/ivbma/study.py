"""Replicated simulation studies comparing IVBMA against the IV baseline."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .kernels import stream
from .sampler import SamplerConfig, default_workers, run_chain
from .simulate import SimSpec, generate
from .summary import PosteriorSummary, replicate_mse, summarize

__all__ = ["summary_to_dict", "run_replicate", "run_study", "aggregate", "report_json"]

# streams per replicate: data, ivbma chain, iv chain
_STREAMS = 3


def summary_to_dict(s: PosteriorSummary) -> dict:
    out = {"n_kept": s.n_kept}
    for stage in ("first", "second"):
        st = s.stage(stage)
        out[stage] = {
            "names": list(st.names),
            "prob": st.inclusion_prob.tolist(),
            "mean": st.mean.tolist(),
            "sd": st.sd.tolist(),
            "q025": st.quantiles[0].tolist(),
            "q50": st.quantiles[1].tolist(),
            "q975": st.quantiles[2].tolist(),
            "avg_model_size": st.avg_model_size,
            "acceptance_rate": None if np.isnan(st.acceptance_rate) else st.acceptance_rate,
        }
    return out


def run_replicate(spec: SimSpec, config: SamplerConfig, index: int,
                  modes: tuple[str, ...] = ("ivbma", "iv"), keep_traces: bool = False) -> dict:
    """Simulate replicate ``index`` and fit it with each mode.

    Streams are jumps ``3*index + 1 .. 3*index + 3`` of the master seed, so
    results do not depend on scheduling.
    """
    rngs = [stream(config.seed, _STREAMS * index + k) for k in range(_STREAMS)]
    data, truth = generate(spec, rngs[0])
    out = {"index": index, "truth": truth, "summaries": {}, "psi_failures": {}}
    traces = {}
    for mode in modes:
        cfg = SamplerConfig(config.iterations, config.burn_in, config.seed, mode, config.thin)
        trace = run_chain(data, cfg, rng=rngs[1 if mode == "ivbma" else 2])
        out["summaries"][mode] = summarize(trace)
        out["psi_failures"][mode] = trace.stats.psi_failures
        if keep_traces:
            traces[mode] = trace
    if keep_traces:
        out["traces"] = traces
        out["data"] = data
    return out


def _job(args):
    return run_replicate(*args)


def aggregate(replicates: list[dict], modes: tuple[str, ...]) -> dict:
    """Median estimates, inclusion-probability median/IQR and average MSE per mode."""
    truths = [r["truth"] for r in replicates]
    out = {}
    for mode in modes:
        sums = [r["summaries"][mode] for r in replicates]
        agg = {"mse": replicate_mse(sums, truths)}
        for stage in ("first", "second"):
            names = sums[0].stage(stage).names
            means = np.array([s.stage(stage).mean for s in sums])
            probs = np.array([s.stage(stage).inclusion_prob for s in sums])
            q25, med, q75 = np.quantile(probs, [0.25, 0.5, 0.75], axis=0)
            agg[stage] = {
                "names": list(names),
                "median_estimate": np.median(means, axis=0).tolist(),
                "inclusion_median": med.tolist(),
                "inclusion_q25": q25.tolist(),
                "inclusion_q75": q75.tolist(),
            }
        out[mode] = agg
    return out


def run_study(reps: int, spec: SimSpec, config: SamplerConfig,
              modes: tuple[str, ...] = ("ivbma", "iv"), workers: int | None = None,
              keep_traces: bool = False) -> dict:
    if reps < 1:
        raise ValueError("reps must be at least 1")
    jobs = [(spec, config, i, modes, keep_traces) for i in range(reps)]
    workers = min(workers or default_workers(), reps)
    if workers <= 1:
        replicates = [_job(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            replicates = list(pool.map(_job, jobs))
    return {"replicates": replicates, "aggregate": aggregate(replicates, modes)}


def report_json(study: dict, spec: SimSpec, config: SamplerConfig, modes) -> dict:
    """JSON-ready form of :func:`run_study` output."""
    return {
        "reps": len(study["replicates"]),
        "modes": list(modes),
        "sampler": {"iterations": config.iterations, "burn_in": config.burn_in,
                    "thin": config.thin, "seed": config.seed},
        "design": {"n": spec.n, "p": spec.p, "q": spec.q},
        "aggregate": study["aggregate"],
        "replicates": [
            {
                "index": r["index"],
                "truth": r["truth"],
                "psi_failures": r["psi_failures"],
                "summaries": {m: summary_to_dict(s) for m, s in r["summaries"].items()},
            }
            for r in study["replicates"]
        ],
    }

