"""
mfbench: synthesize targets, run solvers, sweep grids, and report verdicts.

Exit codes: 0 success (verdicts are data, not errors), 2 config error,
3 I/O or trace-format error.
"""
import argparse
import itertools
import math
import os
import sys
from dataclasses import replace
from pathlib import Path

from .expconfig import (
    _ATTRS,
    _KEYS,
    ConfigError,
    ExperimentConfig,
    INIT_SEED_OFFSET,
    PRESET_NAMES,
    SCALES,
    parse_config,
    preset_configs,
    serialize_config,
)
from .initializers import (
    NYSTROM,
    NYSTROM_VIA_GRADIENT,
    PERTURBED_NYSTROM,
    SMALL_GAUSSIAN,
    InitSpec,
    nystrom_init,
    nystrom_via_gradient,
    perturbed_nystrom_init,
    small_gaussian_init,
)
from .linalg import gaussian
from .nora import NORA, NORA_PLUS, LinearFinetuneProblem, NoraConfig, run_nora
from .problems import (
    EP,
    OP,
    UP,
    TargetSpec,
    build_problem,
    classify_regime,
    parse_spectrum,
    synthesize_target,
)
from .solvers import run
from .tracefile import TraceFormatError, format_float, read_trace, write_trace, write_verdicts
from .verdicts import plateau_level, summarize

_CONFIG_FLAGS = (
    ("kind", str, ["sym", "asym"]),
    ("m", int, None),
    ("n", int, None),
    ("spectrum", str, None),
    ("r", int, None),
    ("init", str, ["nystrom", "small", "perturbed", "grad"]),
    ("xi", float, None),
    ("zeta", float, None),
    ("xi_n", float, None),
    ("solver", str, ["gd", "scaledgd", "scaledgd-pinv", "scaledgd-lambda"]),
    ("schedule", str, ["fixed", "two_phase", "step_decay"]),
    ("eta", float, None),
    ("eta1", float, None),
    ("t1", int, None),
    ("eta2", float, None),
    ("tp_c", float, None),
    ("levels", str, None),
    ("switch_every", int, None),
    ("lam", float, None),
    ("max_iters", int, None),
    ("tol", float, None),
    ("seed", int, None),
    ("repeats", int, None),
    ("out", str, None),
)


def _add_config_flags(sub):
    sub.add_argument("--preset", choices=PRESET_NAMES)
    sub.add_argument("--scale", choices=SCALES, default="desk")
    sub.add_argument("--regime", choices=[EP, OP, UP], default=None)
    for attr, kind, choices in _CONFIG_FLAGS:
        flag = "--" + ("lambda" if attr == "lam" else attr).replace("_", "-")
        sub.add_argument(flag, dest=attr, type=kind, choices=choices, default=None)


def _check_regime(want, cfg):
    """Fail fast when a declared regime disagrees with the actual one.

    The regime is not a knob: it follows from the factor rank and the
    spectrum length. The flag exists so a script can state which case it
    believes it is running and get a config error instead of a silently
    different experiment.
    """
    if want is None:
        return
    r_a = len(parse_spectrum(cfg.spectrum))
    actual = classify_regime(r_a, cfg.r)
    if actual != want:
        raise ConfigError(
            f"declared regime {want!r} but r={cfg.r} against a rank-{r_a} "
            f"target is {actual!r}"
        )


def _expand_configs(args):
    """Preset variants (or one default config) with CLI overrides applied."""
    overrides = {
        attr: getattr(args, attr)
        for attr, _, _ in _CONFIG_FLAGS
        if getattr(args, attr) is not None
    }
    if args.preset:
        return args.preset, preset_configs(args.preset, args.scale, **overrides)
    try:
        cfg = ExperimentConfig(**overrides).validate()
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    return "run", [("single", cfg)]


_INIT_KINDS = {
    "nystrom": NYSTROM,
    "small": SMALL_GAUSSIAN,
    "perturbed": PERTURBED_NYSTROM,
    "grad": NYSTROM_VIA_GRADIENT,
}


def _build_init(problem, cfg, init_seed):
    spec = InitSpec(
        kind=_INIT_KINDS[cfg.init],
        xi=cfg.xi,
        zeta=cfg.zeta,
        xi_n=cfg.xi_n,
        seed=init_seed,
    )
    sym = problem.symmetric
    if cfg.init == "nystrom":
        return nystrom_init(problem.a, cfg.r, spec, symmetric=sym, r_a=problem.r_a)
    if cfg.init == "small":
        return small_gaussian_init(problem.a.shape, cfg.r, spec, symmetric=sym)
    if cfg.init == "perturbed":
        return perturbed_nystrom_init(
            problem.a, cfg.r, spec, symmetric=sym, r_a=problem.r_a
        )
    a = problem.a
    if sym:
        oracle = lambda w: (w @ w.T - a) @ w
    else:
        oracle = lambda wx, wy: (wx @ wy.T - a) @ wy
    return nystrom_via_gradient(
        oracle, a.shape, cfg.r, spec, symmetric=sym, r_a=problem.r_a
    )


def _execute(cfg, repeat_index):
    """One run of one config cell; returns (trace, canonical line)."""
    seed = cfg.seed + repeat_index
    run_cfg = replace(cfg, seed=seed, repeats=1)
    spec = run_cfg.target_spec(seed)
    problem = build_problem(spec, run_cfg.r)
    init = _build_init(problem, run_cfg, seed + INIT_SEED_OFFSET)
    solver_cfg = run_cfg.solver_config(problem.kappa, spec.fro_norm)
    line = serialize_config(run_cfg)
    trace = run(problem, init, solver_cfg, config_echo={"canonical": line})
    return trace, line, run_cfg


def _final_error(trace):
    return trace.records[-1].error if trace.records else math.nan


def _emit(out_dir, run_id, cfg, repeat_index, verdict_rows):
    trace, line, run_cfg = _execute(cfg, repeat_index)
    write_trace(out_dir / f"{run_id}.csv", trace, config_line=line)
    summ = summarize(trace, run_cfg)
    verdict_rows.append(summ.to_row(run_id))
    print(
        f"{run_id}: verdict={summ.verdict} termination={trace.termination} "
        f"final_error={_final_error(trace):.3e}"
    )
    return trace, summ


def cmd_run(args):
    name, configs = _expand_configs(args)
    for _, cfg in configs:
        _check_regime(args.regime, cfg)
    out_dir = Path(args.out if args.out else configs[0][1].out)
    os.makedirs(out_dir, exist_ok=True)
    verdict_rows = []
    for label, cfg in configs:
        for i in range(cfg.repeats):
            run_id = f"{name}_{label}_s{cfg.seed + i}"
            _emit(out_dir, run_id, cfg, i, verdict_rows)
    write_verdicts(out_dir / f"{name}_verdicts.csv", verdict_rows)
    return 0


def _parse_grid(specs):
    if not specs:
        raise ConfigError("sweep needs at least one --grid key=v1,v2,...")
    if len(specs) > 3:
        raise ConfigError(f"at most 3 grid parameters, got {len(specs)}")
    grid = []
    for spec in specs:
        key, sep, raw = spec.partition("=")
        if not sep or key not in _KEYS:
            raise ConfigError(f"bad grid parameter {spec!r}")
        attr = _KEYS[key]
        kind = _ATTRS[attr]
        values = []
        for tok in raw.split(","):
            if tok == "":
                continue
            try:
                if kind is int or kind == "int":
                    values.append(int(tok))
                elif kind is float or kind == "float":
                    values.append(float(tok))
                else:
                    values.append(tok)
            except ValueError as exc:
                raise ConfigError(f"bad grid value {tok!r} for {key!r}") from exc
        if not values:
            raise ConfigError(f"empty grid for {key!r}")
        grid.append((attr, key, values))
    return grid


def cmd_sweep(args):
    name, configs = _expand_configs(args)
    grid = _parse_grid(args.grid)
    out_dir = Path(args.out if args.out else configs[0][1].out)
    eta_values = next((vals for attr, _, vals in grid if attr == "eta"), None)
    cells = []
    for label, cfg in configs:
        for combo in itertools.product(*(vals for _, _, vals in grid)):
            cell_cfg = cfg
            cell_parts = [label]
            for (attr, key, _), value in zip(grid, combo):
                cell_cfg = replace(cell_cfg, **{attr: value})
                cell_parts.append(f"{key}={_format_cell(value)}")
            if eta_values and cell_cfg.schedule == "fixed":
                budget = int(math.ceil(cfg.max_iters * max(eta_values) / cell_cfg.eta))
                cell_cfg = replace(cell_cfg, max_iters=budget)
            cell_cfg.validate()
            _check_regime(args.regime, cell_cfg)
            cells.append(("_".join(cell_parts), cell_cfg))
    os.makedirs(out_dir, exist_ok=True)
    verdict_rows = []
    summary_lines = ["cell,seed,verdict,termination,final_error,plateau"]
    for cell, cell_cfg in cells:
        for i in range(cell_cfg.repeats):
            run_id = f"{name}_{cell}_s{cell_cfg.seed + i}"
            trace, summ = _emit(out_dir, run_id, cell_cfg, i, verdict_rows)
            summary_lines.append(
                ",".join(
                    [
                        cell,
                        str(cell_cfg.seed + i),
                        summ.verdict,
                        trace.termination,
                        format_float(_final_error(trace)),
                        format_float(plateau_level(trace)),
                    ]
                )
            )
    write_verdicts(out_dir / f"{name}_verdicts.csv", verdict_rows)
    with open(out_dir / f"{name}_sweep_summary.csv", "w") as fh:
        fh.write("\n".join(summary_lines) + "\n")
    return 0


def _format_cell(value):
    return repr(value) if isinstance(value, float) else str(value)


def cmd_report(args):
    code = 0
    for path in args.traces:
        trace = read_trace(path)
        canonical = trace.config.get("canonical", "")
        cfg = None
        if canonical:
            try:
                cfg = parse_config(canonical)
            except ConfigError:
                cfg = None
        summ = summarize(trace, cfg)
        print(f"== {path}")
        print(f"termination: {trace.termination}")
        final = _final_error(trace)
        print(f"iterations: {len(trace.records)}  final_error: {final:.6e}")
        slope = summ.phase2_slope
        slope_txt = "nan" if slope is None or math.isnan(slope) else f"{slope:.4f}"
        print(f"verdict: {summ.verdict} (slope {slope_txt})")
        print(
            "align_ok: {}  sigma_bound_ok: {}  quad_contract_ok: {}  "
            "weakopt_plateau_ok: {}".format(
                _na(summ.align_ok),
                _na(summ.sigma_bound_ok),
                _na(summ.quad_contract_ok),
                _na(summ.weakopt_plateau_ok),
            )
        )
    return code


def _na(value):
    if value is None:
        return "na"
    return "true" if value else "false"


def cmd_nora(args):
    spec = TargetSpec(
        m=args.m,
        n=args.n if args.n else args.m,
        spectrum=parse_spectrum(args.spectrum),
        symmetric=False,
        seed=args.target_seed,
    )
    a_eff = synthesize_target(spec)
    w0 = gaussian(spec.m, spec.n, args.w0_std, args.w0_seed)
    problem = LinearFinetuneProblem(w0=w0, b=w0 + a_eff, r=args.r)
    tol = args.tol if args.tol is not None else 1e-6 * spec.fro_norm
    config = NoraConfig(
        xi=args.xi,
        lam=args.lam,
        lr=args.lr,
        normalize=args.normalize,
        max_iters=args.max_iters,
        tol=tol,
        seed=args.seed,
    )
    trace = run_nora(problem, config, variant=args.variant)
    out_dir = Path(args.out)
    os.makedirs(out_dir, exist_ok=True)
    run_id = f"nora_{args.variant}_s{args.seed}"
    line = " ".join(
        f"{k}={v}" for k, v in sorted(trace.config.items())
    )
    write_trace(out_dir / f"{run_id}.csv", trace, config_line=line)
    summ = summarize(trace, None)
    write_verdicts(out_dir / "nora_verdicts.csv", [summ.to_row(run_id)])
    print(
        f"{run_id}: verdict={summ.verdict} termination={trace.termination} "
        f"final_error={_final_error(trace):.3e}"
    )
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="mfbench",
        description="Low-rank factorization benchmark harness.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p_run = subs.add_parser("run", help="run one config or preset")
    _add_config_flags(p_run)
    p_run.set_defaults(func=cmd_run)

    p_sweep = subs.add_parser("sweep", help="run a parameter grid")
    _add_config_flags(p_sweep)
    p_sweep.add_argument("--grid", action="append", metavar="key=v1,v2,...")
    p_sweep.set_defaults(func=cmd_sweep)

    p_report = subs.add_parser("report", help="summarize trace CSVs")
    p_report.add_argument("traces", nargs="+")
    p_report.set_defaults(func=cmd_report)

    p_nora = subs.add_parser("nora", help="adapter finetuning toy runs")
    p_nora.add_argument("--variant", choices=[NORA, NORA_PLUS], default=NORA_PLUS)
    p_nora.add_argument("--m", type=int, default=32)
    p_nora.add_argument("--n", type=int, default=0)
    p_nora.add_argument("--r", type=int, default=4)
    p_nora.add_argument("--spectrum", default="list:1.0,1.0,1.0,1.0")
    p_nora.add_argument("--w0-std", dest="w0_std", type=float, default=0.1)
    p_nora.add_argument("--xi", type=float, default=0.1)
    p_nora.add_argument("--lambda", dest="lam", type=float, default=1e-6)
    p_nora.add_argument("--lr", type=float, default=0.5)
    p_nora.add_argument(
        "--normalize", action=argparse.BooleanOptionalAction, default=True
    )
    p_nora.add_argument("--max-iters", dest="max_iters", type=int, default=500)
    p_nora.add_argument("--tol", type=float, default=None)
    p_nora.add_argument("--seed", type=int, default=9)
    p_nora.add_argument("--w0-seed", dest="w0_seed", type=int, default=8)
    p_nora.add_argument("--target-seed", dest="target_seed", type=int, default=31)
    p_nora.add_argument("--out", default="runs")
    p_nora.set_defaults(func=cmd_nora)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"mfbench: config error: {exc}", file=sys.stderr)
        return 2
    except TraceFormatError as exc:
        print(f"mfbench: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"mfbench: i/o error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
