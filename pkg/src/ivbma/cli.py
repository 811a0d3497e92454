"""Command-line front end.

    ivbma run --data F --response Y --endogenous X --instruments A,B --covariates C,D --out DIR
    ivbma simulate [--n N --p P --q Q --seed S] --out DIR
    ivbma replicate --reps R [--desk-scale] [--both-modes] --out DIR

Exit codes: 0 success, 2 malformed input, 3 numerical degeneracy.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import Dataset
from .sampler import ChainTrace, SamplerConfig, SamplerError, run_chain
from .simulate import SimSpec, generate
from .study import report_json, run_study
from .summary import PosteriorSummary, model_size_trajectory, summarize

log = logging.getLogger("ivbma")

EXIT_INPUT = 2
EXIT_DEGENERATE = 3

PRESETS = {
    "simulation": (50_000, 10_000),
    "growth": (200_000, 20_000),
    "margarine": (250_000, 50_000),
}
DESK_SCALE = (10_000, 2_000)
SUMMARY_HEADER = ["stage", "name", "prob", "mean", "sd", "q025", "q50", "q975"]


class InputError(ValueError):
    """Malformed user input; reported with exit code 2."""


@dataclass
class RunManifest:
    data: Path
    response: str
    endogenous: str
    instruments: list[str]
    covariates: list[str] = field(default_factory=list)
    config: SamplerConfig = field(default_factory=SamplerConfig)
    add_intercept: bool = False
    center: bool = False
    scale: bool = False
    trace: bool = False
    out: Path = Path("out")

    def __post_init__(self):
        if not self.instruments:
            raise InputError("at least one instrument column is required")
        roles = [self.response, self.endogenous, *self.instruments, *self.covariates]
        dupes = sorted({c for c in roles if roles.count(c) > 1})
        if dupes:
            raise InputError(f"columns assigned more than one role: {', '.join(dupes)}")


def _g(x: float, digits: int) -> str:
    return f"{x:.{digits}g}"


def read_csv(path: Path) -> dict[str, np.ndarray]:
    """Header-driven numeric CSV; every cell must parse as a finite float."""
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot open {path}: {exc.strerror}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise InputError(f"{path}: file is empty") from None
        if len(set(header)) != len(header):
            raise InputError(f"{path}: duplicate column names in header")
        rows = []
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise InputError(f"{path}:{line}: expected {len(header)} fields, found {len(row)}")
            vals = []
            for col, cell in zip(header, row):
                try:
                    v = float(cell)
                except ValueError:
                    raise InputError(f"{path}:{line}: column {col!r}: cannot parse {cell!r} as a number") from None
                if not math.isfinite(v):
                    raise InputError(f"{path}:{line}: column {col!r}: non-finite value {cell!r}")
                vals.append(v)
            rows.append(vals)
    if not rows:
        raise InputError(f"{path}: no data rows")
    arr = np.array(rows)
    return {name: arr[:, j] for j, name in enumerate(header)}


def _standardize(a: np.ndarray, center: bool, scale: bool) -> np.ndarray:
    if center:
        a = a - a.mean(axis=0)
    if scale:
        sd = a.std(axis=0)
        if np.any(sd == 0):
            raise InputError("cannot scale a constant column")
        a = a / sd
    return a


def load_dataset(m: RunManifest) -> Dataset:
    cols = read_csv(m.data)
    wanted = [m.response, m.endogenous, *m.instruments, *m.covariates]
    missing = [c for c in wanted if c not in cols]
    if missing:
        raise InputError(f"{m.data}: missing column(s): {', '.join(missing)}")
    n = cols[m.response].shape[0]

    def block(names):
        return np.column_stack([cols[c] for c in names]) if names else np.zeros((n, 0))

    W = _standardize(block(m.covariates), m.center, m.scale)
    Z = _standardize(block(m.instruments), m.center, m.scale)
    w_names = list(m.covariates)
    if m.add_intercept:
        if "Intercept" in w_names:
            raise InputError("an 'Intercept' covariate already exists")
        W = np.column_stack([W, np.ones(n)])
        w_names.append("Intercept")
    return Dataset(cols[m.response], cols[m.endogenous], W, Z,
                   w_names=tuple(w_names), z_names=tuple(m.instruments),
                   x_name=m.endogenous, y_name=m.response)


def write_summary(path: Path, s: PosteriorSummary) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_HEADER)
        for stage in ("first", "second"):
            for name, *vals in s.stage(stage).rows():
                w.writerow([stage, name, *(_g(float(v), 6) for v in vals)])


def write_trace(path: Path, t: ChainTrace) -> None:
    header = (["iteration"]
              + [f"rho_{n}" for n in t.second_stage_names]
              + [f"lambda_{n}" for n in t.first_stage_names]
              + ["sigma11", "sigma21", "sigma22"]
              + [f"L_{n}" for n in t.second_stage_names]
              + [f"M_{n}" for n in t.first_stage_names])
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for k in range(len(t)):
            S = t.Sigma[k]
            w.writerow([int(t.iteration[k])]
                       + [_g(v, 17) for v in t.rho[k]]
                       + [_g(v, 17) for v in t.lam[k]]
                       + [_g(S[0, 0], 17), _g(S[1, 0], 17), _g(S[1, 1], 17)]
                       + [int(b) for b in t.L[k]]
                       + [int(b) for b in t.M[k]])


def _log_grid(n: int, points: int = 200) -> np.ndarray:
    return np.unique(np.geomspace(1, n, points).astype(int)) - 1


def diagnostics(t: ChainTrace, s: PosteriorSummary) -> dict:
    traj = model_size_trajectory([t])
    grid = _log_grid(t.size_L.shape[0])

    def rate(x):
        return None if math.isnan(x) else x

    return {
        "mode": t.config.mode,
        "iterations": t.config.iterations,
        "burn_in": t.config.burn_in,
        "thin": t.config.thin,
        "seed": t.config.seed,
        "n_kept": len(t),
        "acceptance_rate": {"first": rate(t.stats.acceptance_M), "second": rate(t.stats.acceptance_L)},
        "avg_model_size": {"first": s.first.avg_model_size, "second": s.second.avg_model_size},
        "psi_failures": t.stats.psi_failures,
        "psi_failure_iterations": list(t.stats.psi_failure_iters),
        "model_size_trajectory": {
            "iteration": (grid + 1).tolist(),
            "first": traj["first"][0, grid].tolist(),
            "second": traj["second"][0, grid].tolist(),
        },
    }


def cmd_run(m: RunManifest) -> int:
    data = load_dataset(m)
    trace = run_chain(data, m.config)
    s = summarize(trace)
    m.out.mkdir(parents=True, exist_ok=True)
    write_summary(m.out / "summary.csv", s)
    with open(m.out / "diagnostics.json", "w", encoding="utf-8") as fh:
        json.dump(diagnostics(trace, s), fh, indent=2)
    if m.trace:
        write_trace(m.out / "trace.csv", trace)
    return 0


def write_dataset(path: Path, data: Dataset) -> None:
    header = [data.y_name, data.x_name, *data.w_names, *data.z_names]
    block = np.column_stack([data.Y, data.X, data.W, data.Z])
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in block:
            w.writerow([_g(float(v), 17) for v in row])


def cmd_simulate(spec: SimSpec, out: Path) -> int:
    data, truth = generate(spec)
    out.mkdir(parents=True, exist_ok=True)
    write_dataset(out / "dataset.csv", data)
    with open(out / "truth.json", "w", encoding="utf-8") as fh:
        json.dump(truth, fh, indent=2)
    return 0


def cmd_replicate(reps: int, spec: SimSpec, config: SamplerConfig, both_modes: bool,
                  out: Path, workers: int | None = None) -> int:
    modes = ("ivbma", "iv") if both_modes else ("ivbma",)
    study = run_study(reps, spec, config, modes, workers=workers)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "study_report.json", "w", encoding="utf-8") as fh:
        json.dump(report_json(study, spec, config, modes), fh, indent=2)
    return 0


def _names(arg: str | None) -> list[str]:
    return [c.strip() for c in arg.split(",") if c.strip()] if arg else []


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ivbma", description="Instrumental variable Bayesian model averaging")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def sampler_args(p, iters, burn):
        p.add_argument("--iters", type=int, default=None, help=f"sweeps (default {iters})")
        p.add_argument("--burn", type=int, default=None, help=f"burn-in sweeps (default {burn})")
        p.add_argument("--thin", type=int, default=1)
        p.add_argument("--seed", type=int, default=0)

    r = sub.add_parser("run", help="fit a CSV dataset")
    r.add_argument("--data", type=Path, required=True)
    r.add_argument("--response", required=True)
    r.add_argument("--endogenous", required=True)
    r.add_argument("--instruments", required=True, help="comma-separated column names")
    r.add_argument("--covariates", default="", help="comma-separated column names")
    r.add_argument("--add-intercept", action="store_true")
    r.add_argument("--center", action="store_true", help="center covariates and instruments")
    r.add_argument("--scale", action="store_true", help="scale covariates and instruments to unit sd")
    r.add_argument("--mode", choices=["ivbma", "iv"], default="ivbma")
    r.add_argument("--preset", choices=sorted(PRESETS), default="simulation",
                   help="iteration/burn-in defaults")
    sampler_args(r, *PRESETS["simulation"])
    r.add_argument("--trace", action="store_true", help="also write trace.csv")
    r.add_argument("--out", type=Path, required=True)

    s = sub.add_parser("simulate", help="write a synthetic dataset")
    s.add_argument("--n", type=int, default=120)
    s.add_argument("--p", type=int, default=15)
    s.add_argument("--q", type=int, default=10)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", type=Path, required=True)

    rp = sub.add_parser("replicate", help="replicated simulation study")
    rp.add_argument("--reps", type=int, required=True)
    rp.add_argument("--desk-scale", action="store_true",
                    help=f"{DESK_SCALE[0]} sweeps, {DESK_SCALE[1]} burn-in")
    rp.add_argument("--both-modes", action="store_true", help="also fit the IV baseline")
    rp.add_argument("--n", type=int, default=120)
    rp.add_argument("--p", type=int, default=15)
    rp.add_argument("--q", type=int, default=10)
    rp.add_argument("--workers", type=int, default=None, help="default: $IVBMA_THREADS or CPU count")
    sampler_args(rp, *PRESETS["simulation"])
    rp.add_argument("--out", type=Path, required=True)
    return parser


def _config(args, mode: str, defaults: tuple[int, int]) -> SamplerConfig:
    iters = args.iters if args.iters is not None else defaults[0]
    burn = args.burn if args.burn is not None else min(defaults[1], iters - 1)
    return SamplerConfig(iterations=iters, burn_in=burn, seed=args.seed, mode=mode, thin=args.thin)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "run":
            m = RunManifest(
                data=args.data, response=args.response, endogenous=args.endogenous,
                instruments=_names(args.instruments), covariates=_names(args.covariates),
                config=_config(args, args.mode, PRESETS[args.preset]),
                add_intercept=args.add_intercept, center=args.center, scale=args.scale,
                trace=args.trace, out=args.out,
            )
            return cmd_run(m)
        if args.command == "simulate":
            return cmd_simulate(SimSpec(n=args.n, p=args.p, q=args.q, seed=args.seed), args.out)
        defaults = DESK_SCALE if args.desk_scale else PRESETS["simulation"]
        spec = SimSpec(n=args.n, p=args.p, q=args.q)
        return cmd_replicate(args.reps, spec, _config(args, "ivbma", defaults),
                             args.both_modes, args.out, workers=args.workers)
    except InputError as exc:
        print(f"ivbma: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SamplerError as exc:
        print(f"ivbma: numerical degeneracy: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except ValueError as exc:
        print(f"ivbma: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
