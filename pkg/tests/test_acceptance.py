"""Acceptance gate: one test per contract-level criterion, stated tolerances.

Targets are pinned by (spectrum, shape, seed) so reruns are exact. Sketch
seeds follow the library convention of target seed plus INIT_SEED_OFFSET.
"""
import time

import numpy as np
import pytest

from mfbench.diagnostics import classify_rate, rate_fit_floor
from mfbench.expconfig import INIT_SEED_OFFSET, preset_configs
from mfbench.initializers import InitSpec, nystrom_init, nystrom_via_gradient, small_gaussian_init
from mfbench.linalg import gaussian, pinv
from mfbench.nora import LinearFinetuneProblem, NoraConfig, nora_init, nora_plus_step, run_nora
from mfbench.problems import TargetSpec, build_problem, synthesize_target
from mfbench.solvers import (
    IterState,
    SolverConfig,
    fixed_schedule,
    gd_step,
    run,
    scaledgd_asym_step,
    scaledgd_lambda_step,
    scaledgd_sym_step,
    step_decay_schedule,
)
from mfbench.verdicts import (
    check_quad_contraction,
    check_sigma_floor,
    check_weakopt_plateau,
    plateau_level,
)

GEO8 = tuple((0.01) ** (i / 7) for i in range(8))  # kappa = 100
GEO10 = tuple((0.01) ** (i / 9) for i in range(10))  # kappa = 100
UP_SPECTRUM = tuple(round(1.0 - 0.01 * i, 2) for i in range(37)) + (0.05, 0.025, 0.01)

SEEDS_20 = range(20)

_LEAKAGE_POOL = []


def _sketch_runs_asym(r, method, seeds=SEEDS_20, max_iters=1):
    """One-step style runs on the 50 x 40 rank-8 target, one per seed."""
    traces = []
    for seed in seeds:
        spec = TargetSpec(m=50, n=40, spectrum=GEO8, symmetric=False, seed=seed)
        prob = build_problem(spec, r)
        init = nystrom_init(
            prob.a, r, InitSpec(kind="nystrom", seed=seed + INIT_SEED_OFFSET),
            symmetric=False, r_a=prob.r_a,
        )
        cfg = SolverConfig(
            method=method, schedule=fixed_schedule(1.0), max_iters=max_iters, tol=1e-300,
        )
        traces.append((prob, run(prob, init, cfg)))
    return traces


def _ep_problem(seed=0):
    spec = TargetSpec(m=100, n=100, spectrum=GEO10, symmetric=True, seed=seed)
    return build_problem(spec, 10)


def _nystrom(prob, seed, xi=1.0):
    return nystrom_init(
        prob.a, prob.r, InitSpec(kind="nystrom", xi=xi, seed=seed + INIT_SEED_OFFSET),
        symmetric=prob.symmetric, r_a=prob.r_a,
    )


@pytest.fixture(scope="module")
def ep_trace():
    """Criterion 4 run, shared with criteria 7, 8, and 12."""
    prob = _ep_problem(seed=0)
    cfg = SolverConfig(method="scaledgd", schedule=fixed_schedule(0.5),
                       max_iters=60, tol=1e-12)
    trace = run(prob, _nystrom(prob, 0), cfg)
    _LEAKAGE_POOL.append(trace)
    return prob, trace


def test_criterion_01_one_step_exact_rank_asymmetric(acceptance):
    start = time.perf_counter()
    worst = 0.0
    for prob, trace in _sketch_runs_asym(8, "scaledgd"):
        _LEAKAGE_POOL.append(trace)
        worst = max(worst, trace.records[1].error / np.linalg.norm(prob.a))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-9 and elapsed < 1.0
    acceptance(1, ok, f"worst relative one-step error {worst:.3e} "
                      f"(limit 1e-9), 20 seeds in {elapsed:.2f}s")


def test_criterion_02_one_step_overparameterized_asymmetric(acceptance):
    worst = 0.0
    for prob, trace in _sketch_runs_asym(24, "scaledgd_pinv"):
        _LEAKAGE_POOL.append(trace)
        worst = max(worst, trace.records[1].error / np.linalg.norm(prob.a))
    acceptance(2, worst <= 1e-9,
               f"worst relative one-step error {worst:.3e} (limit 1e-9), r=24 pseudo")


def test_criterion_03_one_step_weak_optimality_underparameterized(acceptance):
    worst = 0.0
    for prob, trace in _sketch_runs_asym(4, "scaledgd"):
        _LEAKAGE_POOL.append(trace)
        worst = max(worst, trace.records[1].weak_opt)
    acceptance(3, worst <= 1e-9,
               f"worst one-step weak-opt residual {worst:.3e} (limit 1e-9), r=4")


def test_criterion_04_quadratic_verdict_exact_rank(acceptance, ep_trace):
    prob, trace = ep_trace
    est = classify_rate(trace.errors(), rate_fit_floor(np.linalg.norm(prob.a)))
    contraction = check_quad_contraction(trace, kappa=100.0, sigma_min_a=0.01)
    converged_fast = trace.termination == "converged" and trace.final.t <= 60
    ok = (est.verdict == "quadratic" and 1.7 <= est.phase2_slope <= 2.3
          and converged_fast and contraction is True)
    acceptance(4, ok, f"verdict {est.verdict} slope {est.phase2_slope:.3f} "
                      f"(band [1.7, 2.3]), reached {trace.final.error:.2e} at "
                      f"t={trace.final.t}, phase-2 contraction {contraction}")


def test_criterion_05_overparameterized_pseudo_vs_damped(acceptance):
    spec = TargetSpec(m=100, n=100, spectrum=GEO10, symmetric=True, seed=0)
    prob = build_problem(spec, 30)
    floor = rate_fit_floor(np.linalg.norm(prob.a))
    verdicts = {}
    for method in ("scaledgd_pinv", "scaledgd_lambda"):
        cfg = SolverConfig(method=method, schedule=fixed_schedule(0.5),
                           lam=0.01, max_iters=60, tol=1e-12)
        trace = run(prob, _nystrom(prob, 0), cfg)
        _LEAKAGE_POOL.append(trace)
        verdicts[method] = classify_rate(trace.errors(), floor).verdict
    ok = verdicts["scaledgd_pinv"] == "quadratic" and verdicts["scaledgd_lambda"] == "linear"
    acceptance(5, ok, f"pseudo-inverse mode {verdicts['scaledgd_pinv']}, "
                      f"damped lambda=0.01 {verdicts['scaledgd_lambda']}")


def test_criterion_06_sketch_scale_free_but_noise_fragile(acceptance):
    prob = _ep_problem(seed=0)
    floor = rate_fit_floor(np.linalg.norm(prob.a))
    cfg = SolverConfig(method="scaledgd", schedule=fixed_schedule(0.5),
                       max_iters=60, tol=1e-9)
    verdicts = {}
    for xi in (0.1, 1.0, 10.0):
        trace = run(prob, _nystrom(prob, 0, xi=xi), cfg)
        _LEAKAGE_POOL.append(trace)
        verdicts[xi] = classify_rate(trace.errors(), floor).verdict
    from mfbench.initializers import perturbed_nystrom_init

    pert = perturbed_nystrom_init(
        prob.a, prob.r,
        InitSpec(kind="perturbed_nystrom", xi=1.0, xi_n=1e-6, seed=INIT_SEED_OFFSET),
        symmetric=True, r_a=prob.r_a,
    )
    pert_trace = run(prob, pert, cfg)
    pert_verdict = classify_rate(pert_trace.errors(), floor).verdict
    ok = all(v == "quadratic" for v in verdicts.values()) and pert_verdict == "linear"
    acceptance(6, ok, f"xi sweep {sorted(verdicts.items())} all quadratic, "
                      f"perturbed xi_n=1e-6 {pert_verdict}")


def test_criterion_07_alignment_leakage(acceptance, ep_trace):
    worst = 0.0
    count = 0
    for trace in _LEAKAGE_POOL:
        for rec in trace.records:
            for leak in (rec.leakage_x, rec.leakage_y):
                if np.isfinite(leak):
                    worst = max(worst, leak)
                    count += 1
    acceptance(7, count > 0 and worst <= 1e-9,
               f"max leakage {worst:.3e} over {count} recorded values "
               f"from the sketch-init runs in criteria 1-6 (limit 1e-9)")


def test_criterion_08_core_sigma_floor(acceptance, ep_trace):
    prob, trace = ep_trace
    ok = check_sigma_floor(trace, eta=0.5, sigma_r_a=0.01)
    acceptance(8, ok is True,
               f"core sigma_r above its geometric floor at every iteration: {ok}")


def test_criterion_09_underparameterized_plateau(acceptance):
    spec = TargetSpec(m=100, n=100, spectrum=UP_SPECTRUM, symmetric=True, seed=0)
    prob = build_problem(spec, 20)
    plateaus = {}
    for eta, budget in ((0.1, 300), (0.01, 3000)):
        cfg = SolverConfig(method="scaledgd", schedule=fixed_schedule(eta),
                           max_iters=budget, tol=1e-300)
        trace = run(prob, _nystrom(prob, 0), cfg)
        plateaus[eta] = plateau_level(trace)
        settled = check_weakopt_plateau(trace)
        assert settled is True, f"eta={eta} never settled"
    ratio = plateaus[0.1] / plateaus[0.01]
    decay_cfg = SolverConfig(
        method="scaledgd", schedule=step_decay_schedule((0.5, 0.1), 50),
        max_iters=2000, tol=1e-6,
    )
    decay_trace = run(prob, _nystrom(prob, 0), decay_cfg)
    decay_ok = (decay_trace.termination == "converged"
                and decay_trace.final.weak_opt <= 1e-6)
    ok = 5.0 <= ratio <= 20.0 and decay_ok
    acceptance(9, ok, f"plateau ratio eta 0.1/0.01 = {ratio:.2f} (band [5, 20]), "
                      f"decay schedule reached {decay_trace.final.weak_opt:.2e}")


def test_criterion_10_gradient_oracle_init_identity(acceptance):
    worst_sym = 0.0
    worst_asym = 0.0
    for seed in SEEDS_20:
        sspec = TargetSpec(m=30, n=30, spectrum=GEO8, symmetric=True, seed=seed)
        sprob = build_problem(sspec, 8)
        kw = dict(xi=0.1, seed=seed + INIT_SEED_OFFSET)
        direct = nystrom_init(sprob.a, 8, InitSpec(kind="nystrom", **kw),
                              symmetric=True, r_a=8)
        a = sprob.a
        via = nystrom_via_gradient(
            lambda w: (w @ w.T - a) @ w, a.shape, 8,
            InitSpec(kind="nystrom_via_gradient", **kw), symmetric=True, r_a=8,
        )
        worst_sym = max(worst_sym, float(np.max(np.abs(via.x0 - direct.x0))))

        aspec = TargetSpec(m=30, n=24, spectrum=GEO8, symmetric=False, seed=seed)
        aprob = build_problem(aspec, 8)
        adirect = nystrom_init(aprob.a, 8, InitSpec(kind="nystrom", **kw),
                               symmetric=False, r_a=8)
        b = aprob.a
        avia = nystrom_via_gradient(
            lambda wx, wy: (wx @ wy.T - b) @ wy, b.shape, 8,
            InitSpec(kind="nystrom_via_gradient", **kw), symmetric=False, r_a=8,
        )
        worst_asym = max(worst_asym, float(np.max(np.abs(avia.x0 - adirect.x0))))
    ok = worst_sym <= 1e-14 and worst_asym <= 1e-14
    acceptance(10, ok, f"oracle-route deviation sym {worst_sym:.3e}, "
                       f"asym {worst_asym:.3e} (limit 1e-14 absolute)")


def test_criterion_11_adapter_bridge_and_defaults(acceptance):
    spec = TargetSpec(m=32, n=32, spectrum=(1.0,) * 4, symmetric=False, seed=31)
    a_eff = synthesize_target(spec)
    w0 = gaussian(32, 32, 0.1, 8)
    problem = LinearFinetuneProblem(w0=w0, b=w0 + a_eff, r=4)

    bridge_cfg = NoraConfig(xi=0.1, lam=0.0, lr=0.5, normalize=False, seed=9)
    x0, y0 = nora_init(problem, bridge_cfg.xi, bridge_cfg.seed)
    ours = IterState(t=0, x=x0, y=y0, last_error=0.0)
    xs, ys = np.array(x0), np.array(y0)
    worst = 0.0
    for t in range(50):
        ours = nora_plus_step(ours, problem, bridge_cfg)
        ref = scaledgd_asym_step(IterState(t=t, x=xs, y=ys, last_error=0.0),
                                 a_eff, 0.5, "inverse")
        xs, ys = ref.x, ref.y
        dev = np.linalg.norm(ours.x - xs) + np.linalg.norm(ours.y - ys)
        worst = max(worst, dev / max(np.linalg.norm(xs) + np.linalg.norm(ys), 1e-300))

    tol = 1e-6 * np.linalg.norm(a_eff)
    defaults = run_nora(problem, NoraConfig(xi=0.1, max_iters=500, tol=tol, seed=9))
    ok = worst <= 1e-10 and defaults.termination == "converged"
    acceptance(11, ok, f"bridge deviation {worst:.3e} over 50 iterations "
                       f"(limit 1e-10), defaults {defaults.termination} at "
                       f"t={defaults.final.t} error {defaults.final.error:.2e}")


def test_criterion_12_step_kernels_vs_direct_formulas(acceptance, ep_trace):
    rng = np.random.default_rng(20260814)
    worst = 0.0
    for _ in range(100):
        x = rng.standard_normal((4, 2))
        m = rng.standard_normal((4, 4))
        a = m + m.T
        eta = rng.uniform(0.05, 1.0)
        lam = rng.uniform(0.0, 2.0)
        resid = x @ x.T - a

        got = scaledgd_sym_step(x, a, eta, "inverse")
        ref = x - eta * resid @ x @ np.linalg.inv(x.T @ x)
        worst = max(worst, np.linalg.norm(got - ref))

        got = gd_step(IterState(t=0, x=x, y=None, last_error=0.0), a, eta).x
        ref = x - eta * resid @ x
        worst = max(worst, np.linalg.norm(got - ref))

        got = scaledgd_lambda_step(x, a, eta, lam)
        ref = x - eta * resid @ x @ np.linalg.inv(x.T @ x + lam * np.eye(2))
        worst = max(worst, np.linalg.norm(got - ref))

    prob, _ = ep_trace
    s = np.diag(prob.spectrum)
    xr = _nystrom(prob, 0).x0
    eta = 0.5
    worst_rec = 0.0
    for _ in range(8):
        b = (prob.u.T @ xr) @ (prob.u.T @ xr).T
        xr = scaledgd_sym_step(xr, prob.a, eta, "inverse")
        b_next = (prob.u.T @ xr) @ (prob.u.T @ xr).T
        pred = ((1 - eta) ** 2 * b + 2 * eta * (1 - eta) * s
                + eta**2 * s @ np.linalg.inv(b) @ s)
        worst_rec = max(worst_rec, np.linalg.norm(b_next - pred) / np.linalg.norm(b_next))
    ok = worst <= 1e-12 and worst_rec <= 1e-8
    acceptance(12, ok, f"step kernels vs direct formulas {worst:.3e} over 300 "
                       f"instances (limit 1e-12), core recursion {worst_rec:.3e} "
                       f"(limit 1e-8)")


def test_criterion_13_plain_gd_baseline(acceptance):
    variants = dict(preset_configs("fig1a"))
    finals = {}
    gd_monotone = None
    for label in ("gd_small", "scaledgd_nystrom"):
        cfg = variants[label]
        spec = cfg.target_spec(cfg.seed)
        prob = build_problem(spec, cfg.r)
        init_seed = cfg.seed + INIT_SEED_OFFSET
        if cfg.init == "small":
            init = small_gaussian_init(prob.a.shape, cfg.r,
                                       InitSpec(kind="small_gaussian", zeta=cfg.zeta,
                                                seed=init_seed))
        else:
            init = _nystrom(prob, cfg.seed, xi=cfg.xi)
        trace = run(prob, init, cfg.solver_config(prob.kappa, spec.fro_norm))
        finals[label] = trace.final.error
        if label == "gd_small":
            errs = trace.errors()
            gd_monotone = all(b <= a * (1 + 1e-12) for a, b in zip(errs, errs[1:]))
            assert trace.final.t == 200
    gap = finals["gd_small"] / finals["scaledgd_nystrom"]
    ok = gd_monotone and gap >= 1e6
    acceptance(13, ok, f"plain descent monotone {gd_monotone}, final-error gap "
                       f"{gap:.1e} (needs >= 1e6)")
