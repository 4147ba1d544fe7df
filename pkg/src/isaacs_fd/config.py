"""Run configuration: a YAML document validated before any work starts.

Top-level keys::

    mode: solve | rates | sandwich | check-decomposition | verify-barrier
    seed: 0
    problem: {...}      # domain, bounds, controls, coefficient family, boundary data
    scheme: {...}       # stencil, delta_hat, k1, delta1
    solver: {...}       # SolveConfig fields
    study: {...}        # mode-specific abscissae and sizes
    output: {dir: ...}

See ``configs/`` for one complete file per mode.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from pathlib import Path

import yaml

from .errors import ConfigError
from .families import make_family
from .grid import Box, Disk, Ellipse, RoundedBox, get_stencil
from .operators import PucciParams
from .problem import ControlSet, EllipticityBounds, IsaacsProblem, gamma_for_chi
from .solver import SolveConfig

MODES = ("solve", "rates", "sandwich", "check-decomposition", "verify-barrier")
TOP_KEYS = {"mode", "seed", "problem", "scheme", "solver", "study", "output", "name"}


@dataclass
class RunConfig:
    mode: str
    seed: int
    problem: dict
    scheme: dict
    solver: SolveConfig
    study: dict
    output: dict
    name: str = "run"
    raw: dict = field(default_factory=dict, repr=False)
    source: str = ""


def _require(d, key, where):
    if not isinstance(d, dict) or key not in d:
        raise ConfigError(f"missing field {where}.{key}")
    return d[key]


def _number(v, where, positive=False, integer=False):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{where} must be a number, got {v!r}")
    if integer and int(v) != v:
        raise ConfigError(f"{where} must be an integer, got {v!r}")
    if positive and not v > 0:
        raise ConfigError(f"{where} must be positive, got {v!r}")
    return int(v) if integer else float(v)


def _numbers(v, where, positive=True):
    if not isinstance(v, (list, tuple)) or not v:
        raise ConfigError(f"{where} must be a nonempty list")
    return [_number(x, f"{where}[{i}]", positive) for i, x in enumerate(v)]


def load_config(path) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file {str(path)!r} does not exist")
    try:
        raw = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {str(path)!r} is not valid YAML: {exc}") from None
    cfg = parse_config(raw)
    cfg.source = str(path)
    validate(cfg)
    return cfg


def parse_config(raw) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping")
    unknown = set(raw) - TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown top-level fields: {sorted(unknown)}")
    mode = _require(raw, "mode", "config")
    if mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}, got {mode!r}")
    seed = _number(raw.get("seed", 0), "seed", integer=True)
    solver_raw = raw.get("solver") or {}
    names = {f.name for f in fields(SolveConfig)}
    bad = set(solver_raw) - names
    if bad:
        raise ConfigError(f"unknown solver fields: {sorted(bad)}")
    ints = {"max_policy_iters", "max_pseudo_steps"}
    solver = SolveConfig(**{k: _number(v, f"solver.{k}", True, k in ints) for k, v in solver_raw.items()})
    return RunConfig(mode=mode, seed=seed, problem=raw.get("problem") or {}, scheme=raw.get("scheme") or {},
                     solver=solver, study=raw.get("study") or {}, output=raw.get("output") or {},
                     name=str(raw.get("name", "run")), raw=raw)


# -- problem construction ----------------------------------------------------

def build_domain(spec, where="problem.domain"):
    if not isinstance(spec, dict):
        raise ConfigError(f"{where} must be a mapping")
    kind = _require(spec, "kind", where)
    params = {k: v for k, v in spec.items() if k != "kind"}
    ctor = {"disk": Disk, "box": Box, "rounded_box": RoundedBox, "ellipse": Ellipse}.get(kind)
    if ctor is None:
        raise ConfigError(f"{where}.kind must be disk, box, rounded_box or ellipse, got {kind!r}")
    try:
        return ctor(**params)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


def _function(spec, where):
    from .benchmarks import exact_function

    if spec is None:
        spec = {"function": "zero"}
    if not isinstance(spec, dict):
        raise ConfigError(f"{where} must be a mapping")
    name = _require(spec, "function", where)
    try:
        return exact_function(name, **{k: v for k, v in spec.items() if k != "function"})
    except TypeError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def build_problem(cfg: RunConfig):
    """Return ``(problem, exact)``; ``exact`` is the manufactured solution or None."""
    from . import benchmarks
    from .harness import make_bellman_case, make_isaacs_saddle_case

    spec = cfg.problem
    if "benchmark" in spec:
        name = spec["benchmark"]
        params = spec.get("params") or {}
        if name in benchmarks.BENCHMARKS:
            case = benchmarks.BENCHMARKS[name](**params)
            return case.problem, case.exact
        if name in benchmarks.PROBLEMS:
            return benchmarks.PROBLEMS[name](**params), None
        raise ConfigError(f"problem.benchmark: unknown {name!r}; choose from "
                          f"{sorted(benchmarks.BENCHMARKS) + sorted(benchmarks.PROBLEMS)}")
    domain = build_domain(_require(spec, "domain", "problem"))
    bounds = EllipticityBounds(_number(_require(spec, "delta", "problem"), "problem.delta"),
                               _number(_require(spec, "k0", "problem"), "problem.k0"))
    chi = _number(spec.get("chi", 0.1), "problem.chi")
    tau = _number(spec.get("tau", 0.5), "problem.tau")
    controls = spec.get("controls") or {"A": [0], "B": [0]}
    A = ControlSet(_require(controls, "A", "problem.controls"))
    B = ControlSet(_require(controls, "B", "problem.controls"))
    coeff = dict(_require(spec, "coefficients", "problem"))
    family = coeff.pop("family", "constant")
    coeffs = make_family(family, A, B, gamma=gamma_for_chi(chi), tau=tau, **coeff)
    name = str(spec.get("name", family))
    man = spec.get("manufactured")
    if man is not None:
        exact = _function(man, "problem.manufactured")
        kind = _require(man, "family", "problem.manufactured")
        if kind == "bellman":
            case = make_bellman_case(exact, coeffs, domain, bounds, name)
        elif kind == "saddle":
            case = make_isaacs_saddle_case(exact, coeffs, domain, bounds, A, B, man.get("table"), name)
        else:
            raise ConfigError(f"problem.manufactured.family must be bellman or saddle, got {kind!r}")
        return case.problem, exact
    g = _function(spec.get("boundary"), "problem.boundary")
    return IsaacsProblem(domain, A, B, coeffs, g, bounds, name), None


def build_pucci(cfg: RunConfig, problem: IsaacsProblem) -> PucciParams:
    s = cfg.scheme
    default = PucciParams.default(problem.bounds)
    dh = s.get("delta_hat")
    k1 = s.get("k1")
    p = PucciParams(default.delta_hat if dh is None else _number(dh, "scheme.delta_hat"),
                    default.k1 if k1 is None else _number(k1, "scheme.k1"))
    return p.check(problem.bounds)


def validate(cfg: RunConfig):
    """Fail-fast pass: everything a run needs is constructed and range-checked here."""
    get_stencil(cfg.scheme.get("stencil", "default"))
    _number(cfg.scheme.get("delta1", 0.0), "scheme.delta1")
    st = cfg.study
    if cfg.mode in ("solve", "rates", "sandwich"):
        problem, exact = build_problem(cfg)
        problem.validate(seed=cfg.seed)
        build_pucci(cfg, problem)
    if cfg.mode == "solve":
        _number(_require(st, "h", "study"), "study.h", positive=True)
        if st.get("K") is not None:
            _number(st["K"], "study.K", positive=True)
            if st.get("side", "upper") not in ("upper", "lower"):
                raise ConfigError("study.side must be upper or lower")
    elif cfg.mode == "rates":
        hs = _numbers(_require(st, "h", "study"), "study.h")
        if any(b >= a for a, b in zip(hs, hs[1:])):
            raise ConfigError(f"study.h must be strictly decreasing, got {hs}")
        if exact is None:
            raise ConfigError("rates mode needs problem.manufactured or a manufactured benchmark")
    elif cfg.mode == "sandwich":
        _number(_require(st, "h", "study"), "study.h", positive=True)
        Ks = _numbers(_require(st, "K", "study"), "study.K")
        if Ks[0] < 1 or any(b <= a for a, b in zip(Ks, Ks[1:])):
            raise ConfigError(f"study.K must be increasing with K >= 1, got {Ks}")
        if st.get("boundary_h") is not None:
            _numbers(st["boundary_h"], "study.boundary_h")
    elif cfg.mode == "check-decomposition":
        _number(_require(st, "delta", "study"), "study.delta", positive=True)
        _number(st.get("count", 1000), "study.count", True, True)
        if st.get("sample", "random") not in ("random", "probes"):
            raise ConfigError("study.sample must be random or probes")
    elif cfg.mode == "verify-barrier":
        _number(_require(st, "delta", "study"), "study.delta", positive=True)
        _number(_require(st, "k1", "study"), "study.k1")
        _number(st.get("samples", 10_000), "study.samples", True, True)
        build_domain(st.get("domain", {"kind": "disk", "radius": 1.0}), "study.domain")
        for key in ("mu", "R"):
            if st.get(key) is not None:
                _number(st[key], f"study.{key}", positive=True)
    threads = st.get("threads", 1)
    _number(threads, "study.threads", True, True)
    return cfg

