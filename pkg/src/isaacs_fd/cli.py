"""Batch front-end: ``isaacs-fd [MODE] --config run.yaml [--out DIR]``.

Exit status 0 on success; 2 configuration error, 3 infeasible decomposition,
4 no convergence, 5 ordering violation, 6 invalid barrier.
"""

from __future__ import annotations

import argparse
import logging
import platform
import sys
import time
from importlib import metadata
from pathlib import Path

import numpy as np
import scipy

from . import harness
from .config import MODES, RunConfig, build_domain, build_problem, build_pucci, load_config
from .decomposition import (decompose_batch, decomposition_floor, extreme_probes,
                            random_elliptic)
from .errors import IsaacsError
from .grid import build_grid, get_stencil
from .io import write_csv, write_json
from .operators import Scheme
from .solver import solution_rows, solve_scheme

logger = logging.getLogger("isaacs_fd")


def versions():
    try:
        pkg = metadata.version("artifact")
    except metadata.PackageNotFoundError:
        pkg = "unknown"
    return {"package": pkg, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


class Run:
    def __init__(self, cfg: RunConfig, out: Path, threads: int):
        self.cfg = cfg
        self.out = out
        self.threads = threads
        self.timing = {}
        self.written = []

    def csv(self, name, header, rows):
        self.written.append(write_csv(self.out / name, header, rows))

    def json(self, name, obj):
        self.written.append(write_json(self.out / name, obj))

    def summary(self, extra):
        body = {"mode": self.cfg.mode, "name": self.cfg.name, "seed": self.cfg.seed,
                "config": self.cfg.raw, "versions": versions()}
        body.update(extra)
        self.json("summary.json", body)

    def _scheme(self, problem, h):
        st = get_stencil(self.cfg.scheme.get("stencil", "default"))
        grid = build_grid(problem.domain, st, h)
        return Scheme(problem, grid, build_pucci(self.cfg, problem), float(self.cfg.scheme.get("delta1", 0.0)))

    # -- modes ---------------------------------------------------------
    def solve(self):
        problem, _ = build_problem(self.cfg)
        st = self.cfg.study
        scheme = self._scheme(problem, float(st["h"]))
        K = st.get("K")
        side = st.get("side", "upper") if K is not None else None
        w, rep = solve_scheme(scheme, self.cfg.solver, side, K)
        self.timing["solve"] = rep.wall_time
        self.csv("solution.csv", ["i", "j", "x", "y", "value", "residual", "branch", "alpha", "beta"],
                 solution_rows(scheme, w, rep))
        self.json("report.json", rep.to_dict(with_time=False))
        self.summary({"n_points": scheme.grid.size, "n_interior": scheme.grid.n_interior,
                      "final_residual": rep.final_residual, "method_used": rep.method_used})

    def rates(self):
        problem, exact = build_problem(self.cfg)
        case = harness.ManufacturedCase(exact, problem, "bellman-single" if len(problem.pairs()) == 1
                                        else "isaacs-saddle")
        hs = [float(h) for h in self.cfg.study["h"]]
        t = time.perf_counter()
        rep = harness.run_grid_rate(case, hs, self.cfg.solver, self.cfg.scheme.get("stencil", "default"),
                                    self.threads)
        self.timing["rates"] = time.perf_counter() - t
        keys = ["h", "error", "n_interior", "iterations", "final_residual", "method_used"]
        self.csv("rates.csv", keys, ([d[k] for k in keys] for d in rep.details))
        self.summary({"study": rep.summary(), "construction_error": case.construction_error()})

    def sandwich(self):
        problem, _ = build_problem(self.cfg)
        st = self.cfg.study
        scheme = self._scheme(problem, float(st["h"]))
        Ks = [float(K) for K in st["K"]]
        t = time.perf_counter()
        rep = harness.run_sandwich(problem, scheme.grid, Ks, self.cfg.solver, scheme, self.threads,
                                   keep_solutions=True)
        self.timing["sandwich"] = time.perf_counter() - t
        sol = rep.solutions
        mono_u, mono_v = harness.monotonicity_in_K(sol["u"], sol["v"])
        keys = ["K", "gap", "ordering_violation", "sup_u_minus_w", "sup_w_minus_v", "iterations_u",
                "iterations_v", "residual_u", "residual_v", "method_u", "method_v", "p_active_u", "p_active_v"]
        self.csv("sandwich.csv", keys, ([d[k] for k in keys] for d in rep.details))
        gaps = rep.errors
        steps = [b / a - 1 if a > 0 else 0.0 for a, b in zip(gaps, gaps[1:])]
        extra = {"study": rep.summary(),
                 "ordering_violation": max(d["ordering_violation"] for d in rep.details),
                 "monotone_in_K_violation": {"u": mono_u, "v": mono_v},
                 "max_gap_increase": max(steps, default=0.0),
                 "boundary_constant": max(harness.boundary_constant(scheme.grid, problem.g, u, v)
                                          for u, v in zip(sol["u"], sol["v"])),
                 "caveat": "the reference w is the untruncated solution on the same grid, not the "
                           "continuum solution; the fitted exponent measures the discrete gap only"}
        if st.get("boundary_h"):
            t = time.perf_counter()
            extra["boundary_constant_by_h"] = boundary_constants(
                problem, [float(h) for h in st["boundary_h"]], Ks, self.cfg,
                st.get("boundary_K"))
            self.timing["boundary"] = time.perf_counter() - t
        self.summary(extra)

    def check_decomposition(self):
        st = self.cfg.study
        stencil = get_stencil(self.cfg.scheme.get("stencil", "default"))
        delta = float(st["delta"])
        rng = np.random.default_rng(self.cfg.seed)
        if st.get("sample", "random") == "probes":
            mats = extreme_probes(delta, int(st.get("count", 64)))
        else:
            mats = random_elliptic(int(st.get("count", 1000)), delta, rng)
        floor = decomposition_floor(delta, stencil) if stencil.dim == 2 else 0.0
        t = time.perf_counter()
        coeffs, floors = decompose_batch(mats, stencil, float(self.cfg.scheme.get("delta1", 0.0)),
                                         where=lambda k: f"sample {k}")
        self.timing["decompose"] = time.perf_counter() - t
        L = stencil.array.astype(float)
        resid = np.abs(np.einsum("nk,ki,kj->nij", coeffs, L, L) - mats).max(axis=(1, 2))
        header = ["sample"] + [f"a_{k}" for k in range(len(stencil))] + ["residual", "floor"]
        self.csv("decomposition.csv", header,
                 ((n, *coeffs[n], resid[n], floors[n]) for n in range(len(mats))))
        self.summary({"count": len(mats), "stencil": [list(v) for v in stencil.vectors],
                      "certified_floor": floor, "min_coefficient": float(floors.min()),
                      "max_residual": float(resid.max()),
                      "below_floor": int(np.sum(floors < floor - 1e-13))})

    def verify_barrier(self):
        st = self.cfg.study
        domain = build_domain(st.get("domain", {"kind": "disk", "radius": 1.0}), "study.domain")
        delta, k1 = float(st["delta"]), float(st["k1"])
        samples = int(st.get("samples", 10_000))
        if st.get("mu") is not None:
            R = float(st["R"]) if st.get("R") is not None else 2.0 * (1.0 + domain.max_norm())
            barrier = harness.Barrier(float(st["mu"]), R)
        else:
            barrier = harness.auto_tune_barrier(domain, delta, k1, samples, self.cfg.seed)
        slack = harness.verify_barrier(barrier, delta, k1, samples, domain, self.cfg.seed)
        self.summary({"mu": barrier.mu, "R": barrier.R, "max_slack": slack, "samples": samples})


def boundary_constants(problem, hs, Ks, cfg: RunConfig, boundary_K=None):
    """K-uniform fitted constant ``max_K max_x (|u_K - g| + |v_K - g|) / rho`` per ``h``."""
    from .solver import solve_truncated_pair

    Ks = Ks if boundary_K is None else [float(K) for K in boundary_K]
    st = get_stencil(cfg.scheme.get("stencil", "default"))
    out = []
    for h in hs:
        grid = build_grid(problem.domain, st, h)
        scheme = Scheme(problem, grid, build_pucci(cfg, problem))
        vals = []
        for K in Ks:
            u, v, _ = solve_truncated_pair(problem, grid, K, cfg.solver, scheme)
            vals.append(harness.boundary_constant(grid, problem.g, u, v))
        out.append({"h": h, "N_hat": max(vals), "by_K": dict(zip(map(str, Ks), vals))})
    return out


def build_parser():
    p = argparse.ArgumentParser(prog="isaacs-fd", description=__doc__.splitlines()[0])
    p.add_argument("mode", nargs="?", choices=MODES, help="override the mode named in the config")
    p.add_argument("--config", required=True, help="YAML run configuration")
    p.add_argument("--out", help="output directory (default: output.dir from the config, else ./out)")
    p.add_argument("--threads", type=int, default=None, help="concurrent solves within a study")
    p.add_argument("-v", "--verbose", action="count", default=0)
    return p


def run(config_path, out=None, threads=None, mode=None) -> int:
    try:
        cfg = load_config(config_path)
        if mode is not None and mode != cfg.mode:
            cfg.mode = mode
            from .config import validate
            validate(cfg)
        out_dir = Path(out if out is not None else cfg.output.get("dir", "out"))
        threads = threads if threads is not None else int(cfg.study.get("threads", 1))
        r = Run(cfg, out_dir, threads)
        t = time.perf_counter()
        getattr(r, cfg.mode.replace("-", "_"))()
        r.timing["total"] = time.perf_counter() - t
        write_json(out_dir / "timing.json", r.timing)
        for path in r.written:
            logger.info("wrote %s", path)
        return 0
    except IsaacsError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    if args.threads is not None and args.threads < 1:
        print("error: --threads must be at least 1", file=sys.stderr)
        return 2
    return run(args.config, args.out, args.threads, args.mode)


if __name__ == "__main__":
    sys.exit(main())
