"""
Flat textual experiment configs: parse, validate, serialize, presets.

A config is one line of space-separated key=value pairs, serialized with
sorted keys and repr'd floats so that parse(serialize(c)) == c exactly.
Unknown keys are rejected by name. Presets expand to plain configs that
could equally have been written by hand.

Repeat index i shifts the target seed to seed + i; the sketch seed is the
target seed plus a fixed large offset so the two Gaussian streams never
coincide even when the shapes match.
"""
from dataclasses import dataclass, fields

from .initializers import (
    NYSTROM,
    NYSTROM_VIA_GRADIENT,
    PERTURBED_NYSTROM,
    SMALL_GAUSSIAN,
    InitSpec,
)
from .problems import TargetSpec, parse_spectrum
from .solvers import (
    FIXED,
    GD,
    SCALEDGD,
    SCALEDGD_LAMBDA,
    SCALEDGD_PINV,
    STEP_DECAY,
    TWO_PHASE,
    Schedule,
    SolverConfig,
    two_phase_schedule,
)

INIT_SEED_OFFSET = 9973

_INIT_TOKENS = {
    "nystrom": NYSTROM,
    "small": SMALL_GAUSSIAN,
    "perturbed": PERTURBED_NYSTROM,
    "grad": NYSTROM_VIA_GRADIENT,
}
_SOLVER_TOKENS = {
    "gd": GD,
    "scaledgd": SCALEDGD,
    "scaledgd-pinv": SCALEDGD_PINV,
    "scaledgd-lambda": SCALEDGD_LAMBDA,
}
_SCHEDULES = (FIXED, TWO_PHASE, STEP_DECAY)


class ConfigError(Exception):
    """Invalid experiment config; the CLI maps this to exit code 2."""


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str = "sym"
    m: int = 100
    n: int = 0
    spectrum: str = "lin:1.0,-0.01,9,0.01"
    r: int = 10
    init: str = "nystrom"
    xi: float = 1.0
    zeta: float = 1e-3
    xi_n: float = 0.0
    solver: str = "scaledgd"
    schedule: str = FIXED
    eta: float = 0.5
    eta1: float = 0.0
    t1: int = -1
    eta2: float = 0.5
    tp_c: float = 1.0
    levels: str = "0.5,0.1,0.01,0.001"
    switch_every: int = 50
    lam: float = 0.01
    max_iters: int = 200
    tol: float = 1e-12
    seed: int = 0
    repeats: int = 1
    out: str = "runs"

    def validate(self):
        if self.kind not in ("sym", "asym"):
            raise ConfigError(f"kind must be sym or asym, got {self.kind!r}")
        if self.init not in _INIT_TOKENS:
            raise ConfigError(f"unknown init {self.init!r}")
        if self.solver not in _SOLVER_TOKENS:
            raise ConfigError(f"unknown solver {self.solver!r}")
        if self.schedule not in _SCHEDULES:
            raise ConfigError(f"unknown schedule {self.schedule!r}")
        if self.m < 1:
            raise ConfigError(f"m must be >= 1, got {self.m}")
        if self.n < 0:
            raise ConfigError(f"n must be >= 0, got {self.n}")
        if self.kind == "sym" and self.n not in (0, self.m):
            raise ConfigError("symmetric targets are square; leave n at 0")
        if self.r < 1:
            raise ConfigError(f"r must be >= 1, got {self.r}")
        if self.repeats < 1:
            raise ConfigError(f"repeats must be >= 1, got {self.repeats}")
        if self.max_iters < 0:
            raise ConfigError(f"max_iters must be >= 0, got {self.max_iters}")
        if not self.tol > 0:
            raise ConfigError(f"tol must be > 0, got {self.tol}")
        if not self.xi > 0:
            raise ConfigError(f"xi must be > 0, got {self.xi}")
        if not self.zeta > 0:
            raise ConfigError(f"zeta must be > 0, got {self.zeta}")
        if self.xi_n < 0:
            raise ConfigError(f"xi_n must be >= 0, got {self.xi_n}")
        if self.lam < 0:
            raise ConfigError(f"lambda must be >= 0, got {self.lam}")
        if not self.tp_c > 0:
            raise ConfigError(f"tp_c must be > 0, got {self.tp_c}")
        if self.switch_every < 1:
            raise ConfigError(f"switch_every must be >= 1, got {self.switch_every}")
        if not 0 < self.eta <= 1:
            raise ConfigError(f"eta must be in (0, 1], got {self.eta}")
        if not 0 < self.eta2 <= 1:
            raise ConfigError(f"eta2 must be in (0, 1], got {self.eta2}")
        if not 0 <= self.eta1 <= 1:
            raise ConfigError(f"eta1 must be in [0, 1] (0 = auto), got {self.eta1}")
        if self.t1 < -1:
            raise ConfigError(f"t1 must be >= -1 (-1 = auto), got {self.t1}")
        if not self.out:
            raise ConfigError("out must be non-empty")
        try:
            parse_spectrum(self.spectrum)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        for tok in self.levels.split(","):
            try:
                v = float(tok)
            except ValueError as exc:
                raise ConfigError(f"bad level {tok!r} in levels") from exc
            if not 0 < v <= 1:
                raise ConfigError(f"levels must be in (0, 1], got {v}")
        return self

    def target_spec(self, seed):
        n = self.n if self.n else self.m
        return TargetSpec(
            m=self.m,
            n=n,
            spectrum=parse_spectrum(self.spectrum),
            symmetric=self.kind == "sym",
            seed=seed,
        )

    def init_spec(self, seed):
        return InitSpec(
            kind=_INIT_TOKENS[self.init],
            xi=self.xi,
            zeta=self.zeta,
            xi_n=self.xi_n,
            seed=seed,
        )

    def schedule_obj(self, kappa, a_fro_norm):
        if self.schedule == FIXED:
            return Schedule(kind=FIXED, eta=self.eta)
        if self.schedule == STEP_DECAY:
            levels = tuple(float(tok) for tok in self.levels.split(","))
            return Schedule(
                kind=STEP_DECAY, levels=levels, switch_every=self.switch_every
            )
        if self.eta1 == 0.0 or self.t1 == -1:
            return two_phase_schedule(
                kappa, a_fro_norm, self.r, self.max_iters, c=self.tp_c, eta2=self.eta2
            )
        return Schedule(kind=TWO_PHASE, eta1=self.eta1, t1=self.t1, eta2=self.eta2)

    def solver_config(self, kappa, a_fro_norm):
        return SolverConfig(
            method=_SOLVER_TOKENS[self.solver],
            schedule=self.schedule_obj(kappa, a_fro_norm),
            lam=self.lam,
            max_iters=self.max_iters,
            tol=self.tol,
        )


_KEY_TO_ATTR = {"lambda": "lam"}
_ATTR_TO_KEY = {"lam": "lambda"}
_ATTRS = {f.name: f.type for f in fields(ExperimentConfig)}
_KEYS = {_ATTR_TO_KEY.get(name, name): name for name in _ATTRS}


def _format_value(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def serialize_config(cfg):
    """One line, sorted key=value pairs, floats via repr (lossless)."""
    parts = []
    for key in sorted(_KEYS):
        value = getattr(cfg, _KEYS[key])
        parts.append(f"{key}={_format_value(value)}")
    return " ".join(parts)


def parse_config(text):
    """Parse a canonical config line; unknown or malformed keys are fatal."""
    kwargs = {}
    for token in text.split():
        key, sep, raw = token.partition("=")
        if not sep:
            raise ConfigError(f"malformed config token {token!r} (want key=value)")
        if key not in _KEYS:
            raise ConfigError(f"unknown config key {key!r}")
        attr = _KEYS[key]
        if attr in kwargs:
            raise ConfigError(f"duplicate config key {key!r}")
        kind = _ATTRS[attr]
        try:
            if kind is int or kind == "int":
                kwargs[attr] = int(raw)
            elif kind is float or kind == "float":
                kwargs[attr] = float(raw)
            else:
                kwargs[attr] = raw
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {raw!r}") from exc
    cfg = ExperimentConfig(**kwargs)
    cfg.validate()
    return cfg


def _up_spectrum():
    head = [round(1.0 - 0.01 * i, 2) for i in range(37)]
    return "list:" + ",".join(repr(v) for v in head + [0.05, 0.025, 0.01])


_EP_TARGET = {
    "desk": dict(kind="sym", m=100, spectrum="lin:1.0,-0.01,9,0.01", r=10, seed=15),
    "paper": dict(kind="sym", m=1000, spectrum="lin:1.0,-0.01,19,0.01", r=20),
}
_OP_TARGET = {
    "desk": dict(kind="sym", m=100, spectrum="lin:1.0,-0.01,9,0.01", r=30),
    "paper": dict(kind="sym", m=1000, spectrum="lin:1.0,-0.01,19,0.01", r=60),
}
_UP_TARGET = {
    "desk": dict(kind="sym", m=100, spectrum=_up_spectrum(), r=20),
    "paper": dict(kind="sym", m=1000, spectrum=_up_spectrum(), r=20),
}

PRESET_NAMES = ("fig1a", "fig1b", "fig1c", "fig5a", "fig5b")
SCALES = ("desk", "paper")


def preset_configs(name, scale="desk", **overrides):
    """Expand a preset to (label, ExperimentConfig) pairs.

    fig1a: GD and ScaledGD from a small init plus ScaledGD from the sketch
    init on the exact-rank target. fig1b: sketch-std sweep and a perturbed
    variant. fig1c: three fixed etas plus a decay ladder on the low-rank
    target. fig5a: pseudo-inverse vs damped method over-parameterized.
    fig5b: pseudo-inverse from a clean vs a perturbed sketch.
    """
    if name not in PRESET_NAMES:
        raise ConfigError(f"unknown preset {name!r} (have {', '.join(PRESET_NAMES)})")
    if scale not in SCALES:
        raise ConfigError(f"unknown scale {scale!r} (have desk, paper)")
    ep, op, up = _EP_TARGET[scale], _OP_TARGET[scale], _UP_TARGET[scale]
    if name == "fig1a":
        variants = [
            ("gd_small", dict(ep, solver="gd", init="small", eta=0.01, max_iters=200)),
            ("scaledgd_small", dict(ep, solver="scaledgd", init="small", eta=0.5, tol=1e-9)),
            ("scaledgd_nystrom", dict(ep, solver="scaledgd", init="nystrom", eta=0.5, tol=1e-9)),
        ]
    elif name == "fig1b":
        variants = [
            ("xi_0.1", dict(ep, init="nystrom", xi=0.1, tol=1e-9)),
            ("xi_1", dict(ep, init="nystrom", xi=1.0, tol=1e-9)),
            ("xi_10", dict(ep, init="nystrom", xi=10.0, tol=1e-9)),
            ("perturbed", dict(ep, init="perturbed", xi=1.0, xi_n=1e-6, tol=1e-9)),
        ]
    elif name == "fig1c":
        variants = [
            ("eta_0.5", dict(up, eta=0.5, max_iters=60)),
            ("eta_0.1", dict(up, eta=0.1, max_iters=300)),
            ("eta_0.01", dict(up, eta=0.01, max_iters=3000)),
            (
                "step_decay",
                dict(
                    up,
                    schedule=STEP_DECAY,
                    levels="0.5,0.1",
                    switch_every=50,
                    max_iters=2000,
                    tol=1e-6,
                ),
            ),
        ]
    elif name == "fig5a":
        variants = [
            ("scaledgd_pinv", dict(op, solver="scaledgd-pinv", init="nystrom", max_iters=400)),
            (
                "scaledgd_lambda",
                dict(op, solver="scaledgd-lambda", init="nystrom", lam=0.01, max_iters=400),
            ),
        ]
    else:
        variants = [
            ("nystrom_pinv", dict(op, solver="scaledgd-pinv", init="nystrom", tol=1e-9, max_iters=400)),
            (
                "perturbed_pinv",
                dict(op, solver="scaledgd-pinv", init="perturbed", xi_n=1e-6, tol=1e-9, max_iters=400),
            ),
        ]
    out = []
    for label, params in variants:
        merged = dict(params)
        merged.update(overrides)
        out.append((label, ExperimentConfig(**merged).validate()))
    return out
