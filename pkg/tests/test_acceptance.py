"""Acceptance criteria, one test per criterion.

Each test records a PASS/FAIL line that the terminal summary prints at the
end of the run, then asserts.  Tolerances are the stated ones; nothing is
loosened when a run fails.
"""

import time

import numpy as np
import pytest

import oracles
from ivbma.cli import main
from ivbma.core import (
    Dataset,
    log_integrated_lik_first,
    log_integrated_lik_second,
    rho_posterior,
)
from ivbma.kernels import cholesky, make_rng
from ivbma.models import is_valid_pair
from ivbma.sampler import SamplerConfig, draw_coefficients, run_chain, run_chains, sigma_step
from ivbma.simulate import SimSpec, generate
from ivbma.study import aggregate, run_replicate
from ivbma.summary import summarize, visit_frequencies

# ---- 1. conditional Bayes factors against quadrature ----------------------


def _random_instance(rng):
    n = 30
    p, q = int(rng.integers(1, 4)), int(rng.integers(1, 4))
    W, Z = rng.standard_normal((n, p)), rng.standard_normal((n, q))
    a = rng.standard_normal((2, 2))
    Sigma = a @ a.T + 0.3 * np.eye(2)
    E = rng.standard_normal((n, 2)) @ cholesky(Sigma).T
    lam = rng.normal(0, 1, q + p)
    X = np.column_stack([Z, W]) @ lam + E[:, 1]
    rho = rng.normal(0, 1, 1 + p)
    rho[0] = rng.choice([-1, 1]) * rng.uniform(0.3, 2.0)
    Y = np.column_stack([X, W]) @ rho + E[:, 0]
    return Dataset(Y, X, W, Z), rho, lam, Sigma


def _random_model(rng, size):
    k = int(rng.integers(0, min(2, size) + 1))
    m = np.zeros(size, dtype=bool)
    m[rng.choice(size, k, replace=False)] = True
    return m


def _rel_err(log_ours, log_ref):
    return abs(np.expm1(log_ours - log_ref))


def test_criterion_1_cbf_matches_quadrature(report):
    rng = np.random.default_rng(101)
    start = time.perf_counter()
    worst = {"second": 0.0, "doubled": 0.0, "sur": 0.0}
    for _ in range(50):
        d, rho, lam, Sigma = _random_instance(rng)
        raw = (d.Y, d.X, d.W, d.Z)

        L1, L2 = _random_model(rng, 1 + d.p), _random_model(rng, 1 + d.p)
        ours = log_integrated_lik_second(d, lam, Sigma, L1) - log_integrated_lik_second(d, lam, Sigma, L2)
        ref = (oracles.log_marginal_second(*raw, lam, Sigma, L1)
               - oracles.log_marginal_second(*raw, lam, Sigma, L2))
        worst["second"] = max(worst["second"], _rel_err(ours, ref))

        M1, M2 = _random_model(rng, d.q + d.p), _random_model(rng, d.q + d.p)
        for branch, r in (("doubled", rho), ("sur", np.r_[0.0, rho[1:]])):
            ours = log_integrated_lik_first(d, r, Sigma, M1) - log_integrated_lik_first(d, r, Sigma, M2)
            ref = (oracles.log_marginal_first(*raw, r, Sigma, M1)
                   - oracles.log_marginal_first(*raw, r, Sigma, M2))
            worst[branch] = max(worst[branch], _rel_err(ours, ref))
    elapsed = time.perf_counter() - start
    ok = max(worst.values()) <= 1e-5 and elapsed < 60
    detail = ", ".join(f"{k} {v:.1e}" for k, v in worst.items()) + f"; {elapsed:.0f}s"
    report("1 CBF equals quadrature Bayes factor (rel err <= 1e-5, < 1 min)", ok, detail)
    assert ok


# ---- 2. conjugate updates --------------------------------------------------


def test_criterion_2_conjugacy(report, sim_data):
    data, truth = sim_data
    start = time.perf_counter()
    rng = make_rng(202)
    lam = np.asarray(truth["lambda"])
    Sigma = np.asarray(truth["Sigma"])
    L = np.ones(1 + data.p, dtype=bool)
    post = rho_posterior(data, lam, Sigma, L)
    N = 50_000
    draws = np.array([draw_coefficients(post, L, rng) for _ in range(N)])
    cov = np.linalg.inv(post.precision)
    se = np.sqrt(np.diag(cov) / N)
    z_max = float(np.max(np.abs(draws.mean(0) - post.mean) / se))
    cov_err = np.linalg.norm(np.cov(draws.T) - cov) / np.linalg.norm(cov)

    rho = np.asarray(truth["rho"])
    eps, eta = data.Y - data.V @ rho, data.X - data.U @ lam
    E = np.column_stack([eps, eta])
    target = (data.n + 3) * np.linalg.inv(np.eye(2) + E.T @ E)
    prec = np.mean([np.linalg.inv(sigma_step(data, rho, lam, rng)) for _ in range(10_000)], axis=0)
    sig_err = np.linalg.norm(prec - target) / np.linalg.norm(target)
    elapsed = time.perf_counter() - start

    ok = z_max <= 3 and cov_err <= 0.05 and sig_err <= 0.05 and elapsed < 60
    report("2 conjugate draws match their targets", ok,
           f"max |z| {z_max:.2f}, cov {cov_err:.3f}, Sigma^-1 {sig_err:.3f}; {elapsed:.0f}s")
    assert ok


# ---- 3 and 5. desk-scale simulation study -------------------------------

REPS = 20
DESK = SamplerConfig(iterations=10_000, burn_in=2_000, seed=2013)
MODES = ("ivbma", "iv")


@pytest.fixture(scope="module")
def study():
    spec = SimSpec()
    start = time.perf_counter()
    first = run_replicate(spec, DESK, 0, MODES, keep_traces=True)
    rest = [run_replicate(spec, DESK, i, MODES) for i in range(1, REPS)]
    reps = [first] + rest
    return {"spec": spec, "replicates": reps, "aggregate": aggregate(reps, MODES),
            "seconds": time.perf_counter() - start}


def test_criterion_3_simulation_study(report, study):
    spec, agg = study["spec"], study["aggregate"]
    bma, iv = agg["ivbma"], agg["iv"]
    checks = []
    for stage, truth in (("second", spec.rho_true), ("first", spec.lambda_true)):
        med = np.asarray(bma[stage]["inclusion_median"])
        active = truth != 0
        checks.append((f"{stage} true min", med[active].min(), med[active].min() >= 0.95))
        checks.append((f"{stage} noise max", med[~active].max(), med[~active].max() <= 0.40))
    mse_ok = bma["mse"]["total"] < iv["mse"]["total"]
    beta = bma["second"]["median_estimate"][0]
    ok = all(c[2] for c in checks) and mse_ok and abs(beta - 1.5) <= 0.1
    detail = ", ".join(f"{name} {v:.3f}" for name, v, _ in checks)
    detail += (f"; MSE {bma['mse']['total']:.3f} vs {iv['mse']['total']:.3f}"
               f"; beta {beta:.3f}; {study['seconds']:.0f}s")
    report("3 desk-scale study (inclusion, MSE, beta)", ok, detail)
    assert ok


def test_criterion_5_structural_invariants(report, study):
    first = study["replicates"][0]
    q = first["data"].q
    problems = []
    for mode, t in first["traces"].items():
        if not all(is_valid_pair(L, M, q) for L, M in zip(t.L, t.M)):
            problems.append(f"{mode}: inadmissible pair")
        if np.any(t.rho[~t.L] != 0) or np.any(t.lam[~t.M] != 0):
            problems.append(f"{mode}: nonzero structural zero")
        if not np.all(np.linalg.eigvalsh(t.Sigma)[:, 0] > 0):
            problems.append(f"{mode}: Sigma not positive definite")
    st = first["traces"]["ivbma"].stats
    rates = (st.acceptance_L, st.acceptance_M)
    if not all(0 < r < 1 for r in rates):
        problems.append(f"acceptance rates {rates}")
    ok = not problems
    report("5 structural invariants on replicate 0", ok,
           "; ".join(problems) or f"acceptance L {rates[0]:.3f}, M {rates[1]:.3f}")
    assert ok


# ---- 4. cross-chain agreement ----------------------------------------------


def test_criterion_4_chains_agree(report):
    data, _ = generate(SimSpec(), np.random.default_rng(404))
    traces = run_chains(data, SamplerConfig(iterations=50_000, burn_in=10_000, seed=404), 5)
    sums = [summarize(t) for t in traces]
    spread_p, spread_size = 0.0, 0.0
    for stage in ("first", "second"):
        probs = np.array([s.stage(stage).inclusion_prob for s in sums])
        sizes = np.array([s.stage(stage).avg_model_size for s in sums])
        spread_p = max(spread_p, float(np.max(probs.max(0) - probs.min(0))))
        spread_size = max(spread_size, float(sizes.max() - sizes.min()))
    ok = spread_p <= 0.05 and spread_size <= 0.3
    report("4 five chains agree (inclusion <= 0.05, size <= 0.3)", ok,
           f"max inclusion spread {spread_p:.3f}, size spread {spread_size:.3f}")
    assert ok


# ---- 6. small model space ----------------------------------------------------


def test_criterion_6_small_space_reproducible(report):
    # weak effects so the posterior spreads over many of the admissible pairs
    spec = SimSpec(n=120, p=2, q=2, rho_true=np.array([0.5, 0.15, 0.1]),
                   lambda_true=np.array([0.6, 0.15, 0.1, 0.15]))
    data, _ = generate(spec, np.random.default_rng(606))
    start = time.perf_counter()
    freqs = [visit_frequencies(run_chain(data, SamplerConfig(1_000_000, 10_000, seed)))
             for seed in (61, 62)]
    keys = set(freqs[0]) | set(freqs[1])
    tv = 0.5 * sum(abs(freqs[0].get(k, 0.0) - freqs[1].get(k, 0.0)) for k in keys)
    ok = tv <= 0.02
    report("6 p=q=2 visit frequencies reproducible (TV <= 0.02)", ok,
           f"TV {tv:.4f} over {len(keys)} pairs; {time.perf_counter() - start:.0f}s")
    assert ok


# ---- 7. determinism -----------------------------------------------------------


def test_criterion_7_cli_determinism(report, tmp_path):
    main(["simulate", "--seed", "7", "--out", str(tmp_path)])
    args = ["run", "--data", str(tmp_path / "dataset.csv"), "--response", "Y", "--endogenous", "X",
            "--instruments", ",".join(f"Z{j}" for j in range(1, 11)),
            "--covariates", ",".join(f"W{k}" for k in range(1, 16)),
            "--iters", "5000", "--burn", "1000", "--seed", "77", "--trace"]
    outputs = []
    for run in ("a", "b"):
        assert main(args + ["--out", str(tmp_path / run)]) == 0
        outputs.append(((tmp_path / run / "summary.csv").read_bytes(),
                        (tmp_path / run / "trace.csv").read_bytes()))
    ok = outputs[0] == outputs[1]
    report("7 identical manifest and seed give byte-identical outputs", ok)
    assert ok
