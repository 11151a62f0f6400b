"""Command-line driver for reconstruction benchmarks.

Verbs
-----
run <config>
    Solve every (phantom, mode) cell of a run configuration and write one
    trace CSV per cell, ``summary.csv`` and a ``plot.py`` script.
compare <trace>...
    Iterations and fine-gradient evaluations needed to reach relative
    objective thresholds.
phantom <name> <size> <out.pgm>
    Write a test image.
matrix <config> <out.mtx>
    Write the fine-grid projection matrix of a configuration.
defaults
    Print the default configuration.

Configuration files are INI style.  ``--set section.key=value`` overrides a
file value and ``BOXMG_OUTPUT_DIR`` overrides the output directory.  Exit
status is 0 on success, 1 for configuration errors and 2 for internal
errors.
"""
import argparse
import configparser
import io as _stdio
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

from . import io
from .linesearch import WolfeParams
from .optimizer import MODES, SolverConfig, solve
from .tomography import (PHANTOMS, ScanGeometry, angles_for_undersampling, build_matrix,
                         make_phantom, synthesize)

log = logging.getLogger("boxmg")

OUTPUT_ENV = "BOXMG_OUTPUT_DIR"
THRESHOLDS = (0.5, 0.1, 0.01)

DEFAULTS = {
    "problem": {
        "phantoms": ", ".join(PHANTOMS),
        "size": "64",
        "undersampling": "0.02",
        "lam": "0.5",
        "rho": "0.5",
    },
    "solver": {
        "modes": "single_rg, two_level_rg, single_pg",
        "eta": "0.49",
        "eps_dist": "0.001",
        "max_iter": "50",
        "coarse_iters": "5",
        "init_value": "0.5",
        "gtol": "1e-08",
        "armijo_sigma": "0.0001",
        "armijo_beta": "0.6",
        "eps_clip": "1e-10",
        "record_time": "false",
    },
    "linesearch": {
        "delta": "0.1",
        "sigma": "0.9",
        "gamma": "0.66",
        "rho_expand": "5.0",
        "c_init": "1.0",
        "max_evals": "50",
    },
    "run": {
        "seed": "7",
        "workers": "1",
    },
    "output": {
        "dir": "runs",
    },
}


class ConfigError(ValueError):
    """Invalid or incomplete run configuration."""


@dataclass(frozen=True)
class RunConfig:
    phantoms: tuple
    size: int
    undersampling: float
    lam: float
    rho: float
    modes: tuple
    solver: SolverConfig
    output_dir: str
    seed: int
    workers: int = 1

    def problem_id(self, phantom):
        angles = angles_for_undersampling(self.undersampling, self.size)
        return f"{phantom}-{self.size}-a{angles}-lam{self.lam!r}-rho{self.rho!r}-seed{self.seed}"


def default_parser():
    cp = configparser.ConfigParser(interpolation=None)
    cp.read_dict(DEFAULTS)
    return cp


def default_config_text():
    buf = _stdio.StringIO()
    default_parser().write(buf)
    return buf.getvalue()


def load_parser(path=None, overrides=()):
    cp = default_parser()
    if path is not None:
        try:
            with open(path) as fh:
                cp.read_file(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
        except configparser.Error as exc:
            raise ConfigError(f"malformed config {path}: {exc}") from exc
    for item in overrides:
        key, sep, val = item.partition("=")
        section, dot, name = key.strip().partition(".")
        if not (sep and dot and name):
            raise ConfigError(f"override {item!r} must look like section.key=value")
        if not cp.has_section(section):
            raise ConfigError(f"override {item!r}: unknown section {section!r}")
        cp.set(section, name, val.strip())
    return cp


def _names(raw, field):
    items = tuple(s.strip() for s in raw.split(",") if s.strip())
    if not items:
        raise ConfigError(f"{field}: missing")
    return items


def _get(cp, section, name, conv):
    raw = cp.get(section, name)
    try:
        if conv is bool:
            return cp.getboolean(section, name)
        return conv(raw)
    except ValueError as exc:
        raise ConfigError(f"{section}.{name}: cannot parse {raw!r}") from exc


def parse_run_config(cp, output_dir=None):
    """Validate a parsed configuration and build a :class:`RunConfig`."""
    phantoms = _names(cp.get("problem", "phantoms"), "problem.phantoms")
    for name in phantoms:
        if name not in PHANTOMS:
            raise ConfigError(f"problem.phantoms: unknown phantom {name!r}")
    modes = _names(cp.get("solver", "modes"), "solver.modes")
    for m in modes:
        if m not in MODES:
            raise ConfigError(f"solver.modes: unknown mode {m!r}")
    size = _get(cp, "problem", "size", int)
    if size < 8 or size % 2:
        raise ConfigError("problem.size: must be even and >= 8")
    under = _get(cp, "problem", "undersampling", float)
    if not 0.0 < under <= 1.0:
        raise ConfigError("problem.undersampling: must lie in (0, 1]")
    lam = _get(cp, "problem", "lam", float)
    rho = _get(cp, "problem", "rho", float)
    if lam < 0 or rho <= 0:
        raise ConfigError("problem.lam must be >= 0 and problem.rho > 0")
    s = "solver"
    beta = _get(cp, s, "armijo_beta", float)
    try:
        wolfe = WolfeParams(
            delta=_get(cp, "linesearch", "delta", float),
            sigma=_get(cp, "linesearch", "sigma", float),
            gamma=_get(cp, "linesearch", "gamma", float),
            rho_expand=_get(cp, "linesearch", "rho_expand", float),
            c_init=_get(cp, "linesearch", "c_init", float),
            max_evals=_get(cp, "linesearch", "max_evals", int))
        solver = SolverConfig(
            mode=modes[0],
            eta=_get(cp, s, "eta", float),
            eps_dist=_get(cp, s, "eps_dist", float),
            max_iter=_get(cp, s, "max_iter", int),
            coarse_iters=_get(cp, s, "coarse_iters", int),
            init_value=_get(cp, s, "init_value", float),
            gtol=_get(cp, s, "gtol", float),
            armijo_sigma=_get(cp, s, "armijo_sigma", float),
            armijo_beta=beta,
            armijo_alpha0=1.0 / beta if beta > 0 else 1.0,
            eps_clip=_get(cp, s, "eps_clip", float),
            wolfe=wolfe,
            record_time=_get(cp, s, "record_time", bool))
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc
    workers = _get(cp, "run", "workers", int)
    if workers < 1:
        raise ConfigError("run.workers: must be >= 1")
    out = output_dir or os.environ.get(OUTPUT_ENV) or cp.get("output", "dir")
    return RunConfig(phantoms, size, under, lam, rho, modes, solver, out,
                     _get(cp, "run", "seed", int), workers)


def trace_path(out_dir, phantom, mode):
    return os.path.join(out_dir, f"{phantom}__{mode}.csv")


def run(rc):
    """Execute all cells of ``rc``; returns the summary rows."""
    os.makedirs(rc.output_dir, exist_ok=True)
    problems = {}
    for name in rc.phantoms:
        ph = make_phantom(name, rc.size, rc.seed)
        problems[name] = synthesize(ph, rc.undersampling, rc.lam, rc.rho)

    def cell(job):
        name, mode = job
        cfg = replace(rc.solver, mode=mode)
        tr = solve(problems[name], cfg)
        meta = {"problem": rc.problem_id(name), "mode": mode, "status": tr.status}
        io.write_trace(trace_path(rc.output_dir, name, mode), tr, meta)
        last = tr.records[-1]
        log.info("%s %s: f=%.6g after %d iterations (%s)", name, mode, last.f, last.iter, tr.status)
        return {"phantom": name, "mode": mode, "status": tr.status,
                "iterations": last.iter, "f_initial": tr.records[0].f, "f_final": last.f,
                "fine_grad_evals": last.fine_grad_evals,
                "coarse_attempts": tr.coarse_attempts, "coarse_accepted": tr.coarse_accepted}

    jobs = [(p, m) for p in rc.phantoms for m in rc.modes]
    if rc.workers > 1:
        with ThreadPoolExecutor(rc.workers) as pool:
            rows = list(pool.map(cell, jobs))
    else:
        rows = [cell(j) for j in jobs]
    _write_summary(os.path.join(rc.output_dir, "summary.csv"), rows)
    _write_plot_script(os.path.join(rc.output_dir, "plot.py"), rc)
    io._atomic_write(os.path.join(rc.output_dir, "config_used.ini"), _config_dump(rc).encode())
    return rows


SUMMARY_FIELDS = ("phantom", "mode", "status", "iterations", "f_initial", "f_final",
                  "fine_grad_evals", "coarse_attempts", "coarse_accepted")


def _write_summary(path, rows):
    lines = [",".join(SUMMARY_FIELDS)]
    for r in rows:
        lines.append(",".join(repr(r[k]) if isinstance(r[k], float) else str(r[k])
                              for k in SUMMARY_FIELDS))
    io._atomic_write(path, ("\n".join(lines) + "\n").encode())


def _config_dump(rc):
    cp = configparser.ConfigParser(interpolation=None)
    s, w = rc.solver, rc.solver.wolfe
    cp.read_dict({
        "problem": {"phantoms": ", ".join(rc.phantoms), "size": rc.size,
                    "undersampling": rc.undersampling, "lam": rc.lam, "rho": rc.rho},
        "solver": {"modes": ", ".join(rc.modes), "eta": s.eta, "eps_dist": s.eps_dist,
                   "max_iter": s.max_iter, "coarse_iters": s.coarse_iters,
                   "init_value": s.init_value, "gtol": s.gtol, "armijo_sigma": s.armijo_sigma,
                   "armijo_beta": s.armijo_beta, "eps_clip": s.eps_clip,
                   "record_time": str(s.record_time).lower()},
        "linesearch": {"delta": w.delta, "sigma": w.sigma, "gamma": w.gamma,
                       "rho_expand": w.rho_expand, "c_init": w.c_init, "max_evals": w.max_evals},
        "run": {"seed": rc.seed, "workers": rc.workers},
        "output": {"dir": rc.output_dir},
    })
    buf = _stdio.StringIO()
    cp.write(buf)
    return buf.getvalue()


PLOT_TEMPLATE = '''"""Relative objective vs. iteration for every phantom of this run.

Black dots mark iterations whose search direction came from the coarse grid.
Run from anywhere: python plot.py
"""
import csv
import glob
import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

HERE = os.path.dirname(os.path.abspath(__file__))
PHANTOMS = {phantoms!r}


def load(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(line for line in fh if not line.startswith("#")))
    return rows


for name in PHANTOMS:
    traces = {{}}
    for path in sorted(glob.glob(os.path.join(HERE, name + "__*.csv"))):
        mode = os.path.basename(path)[len(name) + 2:-4]
        traces[mode] = load(path)
    if not traces:
        continue
    f_best = min(float(r["f"]) for rows in traces.values() for r in rows)
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for mode, rows in traces.items():
        f0 = float(rows[0]["f"])
        scale = (f0 - f_best) or 1.0
        it = [int(r["iter"]) for r in rows]
        rel = [max((float(r["f"]) - f_best) / scale, 1e-16) for r in rows]
        ax.semilogy(it, rel, label=mode)
        dots = [(i, v) for i, v, r in zip(it, rel, rows) if r["level"] == "coarse"]
        if dots:
            ax.plot(*zip(*dots), "k.", ms=5)
    ax.set_xlabel("iteration")
    ax.set_ylabel("relative objective")
    ax.set_title(name)
    ax.legend()
    fig.tight_layout()
    fig.savefig(os.path.join(HERE, name + ".png"), dpi=120)
    plt.close(fig)
'''


def _write_plot_script(path, rc):
    io._atomic_write(path, PLOT_TEMPLATE.format(phantoms=rc.phantoms).encode())


def compare(paths):
    """Threshold table for several traces of the same problem.

    Returns a list of ``(label, {threshold: (iterations, evals) or None})``.
    Relative objective is ``(f_k - f_best) / (f_0 - f_best)`` with ``f_best``
    the smallest value over all traces.
    """
    if len(paths) < 2:
        raise ConfigError("compare needs at least two traces")
    loaded = []
    for p in paths:
        try:
            loaded.append((p, *io.read_trace(p)))
        except (OSError, KeyError, ValueError) as exc:
            raise ConfigError(f"cannot read trace {p}: {exc}") from exc
    ids = {meta.get("problem") for _, meta, _ in loaded}
    if len(ids) > 1:
        raise ConfigError("traces come from different problems: "
                          + ", ".join(sorted(str(i) for i in ids)))
    f_best = min(r["f"] for _, _, rows in loaded for r in rows)
    table = []
    for path, meta, rows in loaded:
        scale = rows[0]["f"] - f_best
        hits = {}
        for thr in THRESHOLDS:
            hits[thr] = None
            for r in rows:
                rel = (r["f"] - f_best) / scale if scale > 0 else 0.0
                if rel <= thr:
                    hits[thr] = (r["iter"], r["fine_grad_evals"])
                    break
        table.append((meta.get("mode", os.path.basename(path)), hits))
    return table


def format_table(table):
    head = ["trace"] + [f"iters@{t:g}" for t in THRESHOLDS] + [f"evals@{t:g}" for t in THRESHOLDS]
    lines = [",".join(head)]
    for label, hits in table:
        its = ["-" if hits[t] is None else str(hits[t][0]) for t in THRESHOLDS]
        evs = ["-" if hits[t] is None else str(hits[t][1]) for t in THRESHOLDS]
        lines.append(",".join([label] + its + evs))
    return "\n".join(lines)


def build_parser():
    ap = argparse.ArgumentParser(prog="boxmg", description=__doc__.split("\n")[0])
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("run", help="run a benchmark configuration")
    p.add_argument("config")
    p.add_argument("--out", help="output directory (beats the config and the environment)")
    p.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE")

    p = sub.add_parser("compare", help="tabulate threshold crossings of traces")
    p.add_argument("traces", nargs="+")

    p = sub.add_parser("phantom", help="write a phantom as binary PGM")
    p.add_argument("name")
    p.add_argument("size", type=int)
    p.add_argument("out")
    p.add_argument("--seed", type=int, default=7)

    p = sub.add_parser("matrix", help="write the projection matrix as Matrix Market")
    p.add_argument("config")
    p.add_argument("out")
    p.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE")

    sub.add_parser("defaults", help="print the default configuration")
    return ap


def _dispatch(args):
    if args.verb == "run":
        rc = parse_run_config(load_parser(args.config, args.set), args.out)
        rows = run(rc)
        stalled = sum(r["status"] == "stalled" for r in rows)
        print(f"wrote {len(rows)} traces to {rc.output_dir}"
              + (f" ({stalled} stalled)" if stalled else ""))
    elif args.verb == "compare":
        print(format_table(compare(args.traces)))
    elif args.verb == "phantom":
        if args.name not in PHANTOMS:
            raise ConfigError(f"name: unknown phantom {args.name!r}")
        if args.size < 8:
            raise ConfigError("size: must be >= 8")
        io.write_pgm(args.out, make_phantom(args.name, args.size, args.seed).image)
    elif args.verb == "matrix":
        rc = parse_run_config(load_parser(args.config, args.set))
        g = ScanGeometry((rc.size, rc.size), angles_for_undersampling(rc.undersampling, rc.size))
        io.write_matrix(args.out, build_matrix(g))
    elif args.verb == "defaults":
        sys.stdout.write(default_config_text())
    return 0


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code else 0
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return _dispatch(args)
    except ConfigError as exc:
        print(f"boxmg: error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:
        log.debug("internal error", exc_info=True)
        print(f"boxmg: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
