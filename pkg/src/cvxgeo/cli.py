"""Batch experiment runner.

Every toolkit operation is exposed as a subcommand producing a JSON report
(+inf is serialized as the string "inf" since JSON numbers cannot carry it)
and, where applicable, CSV artifacts.  Each subcommand has a config-file
equivalent: `--config file.json` loads the same ExperimentConfig that flag
parsing would build, so experiments are reproducible from checked-in
configs.  Reports are deterministic for a fixed (config, seed) up to the
wall-time field.

Exit codes: 0 success/PASS, 1 FAIL, 2 input error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, catalog, checks, dual, kappa, legendre, support

__all__ = ["ExperimentConfig", "RunReport", "run", "main"]


class InputError(ValueError):
    """Invalid label, config, or resolution; maps to exit code 2."""


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment: an operation, its function label, and parameters.

    Thread count is deliberately not part of the config: reports must be
    byte-identical for a fixed (config, seed) regardless of it.
    """

    op: str
    fn: str | None = None
    params: dict = field(default_factory=dict)
    out: str | None = None
    seed: int = 0

    def to_dict(self) -> dict:
        return asdict(self)

    @staticmethod
    def from_dict(data: dict) -> "ExperimentConfig":
        unknown = set(data) - {"op", "fn", "params", "out", "seed"}
        if unknown:
            raise InputError(f"unknown config keys: {sorted(unknown)}")
        if "op" not in data:
            raise InputError("config needs an 'op' entry")
        return ExperimentConfig(
            op=data["op"], fn=data.get("fn"), params=dict(data.get("params", {})),
            out=data.get("out"), seed=int(data.get("seed", 0)),
        )


@dataclass(frozen=True)
class RunReport:
    config: dict
    results: dict
    passed: bool | None
    wall_time_s: float
    version: str

    def to_dict(self) -> dict:
        return {
            "config": self.config, "results": self.results, "passed": self.passed,
            "wall_time_s": self.wall_time_s, "version": self.version,
        }


def _sanitize(obj):
    """Make a payload JSON-clean: non-finite floats become strings."""
    if isinstance(obj, dict):
        return {k: _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _sanitize(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        if math.isnan(x):
            return "nan"
        return x
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def _parse_point(text: str) -> np.ndarray:
    try:
        return np.asarray([float(v) for v in str(text).split(",")], dtype=float)
    except ValueError as exc:
        raise InputError(f"bad point {text!r}: {exc}") from None


def _load_function(label: str | None) -> catalog.ConvexFunction:
    if not label:
        raise InputError("an operation on a function needs --fn <label>")
    try:
        return catalog.from_label(label)
    except ValueError as exc:
        raise InputError(str(exc)) from None


# -- grid CSV ------------------------------------------------------------------


def write_grid_csv(g: legendre.GridFunction, path: str) -> None:
    """Header `x[,y],value`, one sample per row, `inf` literal allowed."""
    with open(path, "w", encoding="utf-8") as fh:
        if g.dim == 1:
            fh.write("x,value\n")
            for x, v in zip(g.axis_points(), g.values):
                fh.write(f"{x!r},{'inf' if math.isinf(v) else repr(float(v))}\n")
        else:
            fh.write("x,y,value\n")
            xs, ys = g.axis_points(0), g.axis_points(1)
            for i, x in enumerate(xs):
                for j, y in enumerate(ys):
                    v = g.values[i, j]
                    fh.write(f"{x!r},{y!r},{'inf' if math.isinf(v) else repr(float(v))}\n")


def read_grid_csv(path: str) -> legendre.GridFunction:
    rows = []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        dim = len(header) - 1
        if dim not in (1, 2) or header[-1] != "value":
            raise InputError(f"bad grid CSV header {header}")
        for line in fh:
            if line.strip():
                parts = line.strip().split(",")
                rows.append([math.inf if p == "inf" else float(p) for p in parts])
    data = np.asarray(rows)
    if dim == 1:
        xs = data[:, 0]
        axes = ((float(xs[0]), float(xs[-1]), xs.size),)
        return legendre.GridFunction(axes=axes, values=data[:, 1])
    xs = np.unique(data[:, 0])
    ys = np.unique(data[:, 1])
    vals = data[:, 2].reshape(xs.size, ys.size)
    axes = ((float(xs[0]), float(xs[-1]), xs.size), (float(ys[0]), float(ys[-1]), ys.size))
    return legendre.GridFunction(axes=axes, values=vals)


# -- operation runners -----------------------------------------------------------


def _run_kappa(cfg: ExperimentConfig) -> tuple[dict, bool | None]:
    f = _load_function(cfg.fn)
    p = cfg.params
    x0 = _parse_point(p.get("at", "0"))
    sched = kappa.EpsilonSchedule(
        eps0=float(p.get("eps0", 0.1)), ratio=float(p.get("ratio", 0.5)),
        count=int(p.get("count", 14)))
    dirs = kappa.directions_for_dim(f.dim, p.get("dirs") and int(p["dirs"]))
    est = kappa.estimate_kappa(f, x0, sched, dirs, tail_window=int(p.get("tail", 4)))
    return est.as_dict(), None


def _run_conjugate(cfg: ExperimentConfig) -> tuple[dict, bool | None]:
    p = cfg.params
    if p.get("grid"):
        g = read_grid_csv(p["grid"])
    else:
        f = _load_function(cfg.fn)
        if f.dim != 1:
            raise InputError("label-based conjugation is 1-d; use a grid CSV for 2-d")
        count = int(p.get("count", 1025))
        g = legendre.grid_from_function(f, f.domain.lo, f.domain.hi, count)
    if g.dim == 1:
        star = legendre.conjugate_grid_1d(g)
    else:
        star = legendre.conjugate_bruteforce(g, legendre._auto_slope_axes(g))
    payload = {"axes": [list(a) for a in star.axes]}
    if p.get("csv_out"):
        write_grid_csv(star, p["csv_out"])
        payload["csv_out"] = p["csv_out"]
    return payload, None


def _run_drop(cfg: ExperimentConfig) -> tuple[dict, bool | None]:
    f = _load_function(cfg.fn)
    p = cfg.params
    c = _parse_point(p.get("center", "0"))
    r = float(p.get("r", 1.0))
    try:
        res = support.drop_sphere(f, c, r, probe=int(p.get("probe", 513)))
    except ValueError as exc:
        raise InputError(str(exc)) from None
    return {"height": res.height, "contacts": res.contacts.tolist(),
            "multiple": res.multiple}, None


def _run_sweep(cfg: ExperimentConfig) -> tuple[dict, bool | None]:
    f = _load_function(cfg.fn)
    p = cfg.params
    r = float(p.get("r", 1.0))
    centers = int(p.get("centers", 129))
    box = f.probe_box
    center_axes = [np.linspace(lo, hi, centers) for lo, hi in zip(box.lo, box.hi)]
    res = support.sweep_support_contacts(f, r, center_axes, probe=int(p.get("probe", 513)))
    payload = {"count": int(res.contacts.shape[0])}
    if p.get("csv_out"):
        cols = [f"x{i+1}" for i in range(f.dim)] + [f"center{i+1}" for i in range(f.dim)]
        with open(p["csv_out"], "w", encoding="utf-8") as fh:
            fh.write(",".join(cols) + ",height\n")
            for x, c, h in zip(res.contacts, res.centers, res.heights):
                fh.write(",".join(repr(float(v)) for v in (*x, *c, h)) + "\n")
        payload["csv_out"] = p["csv_out"]
    return payload, None


def _run_density(cfg: ExperimentConfig) -> tuple[dict, bool | None]:
    f = _load_function(cfg.fn)
    p = cfg.params
    x0 = _parse_point(p.get("at", "0"))
    k = float(p.get("k", 2.0))
    dc = support.DensityConfig(
        lattice_count=p.get("lattice") and int(p["lattice"]),
        eps_count=p.get("eps_count") and int(p["eps_count"]),
        eps0=p.get("eps0") and float(p["eps0"]),
        seed=cfg.seed,
    )
    try:
        rep = support.verify_density_bounds(f, x0, k, dc)
    except support.ResolutionError as exc:
        raise InputError(str(exc)) from None
    payload = rep.as_dict()
    if p.get("report"):
        Path(p["report"]).write_text(
            json.dumps(_sanitize(payload), indent=2, sort_keys=True), encoding="utf-8")
        payload["report_path"] = p["report"]
    return payload, rep.passed if rep.applicable else None


def _run_qconv(cfg: ExperimentConfig) -> tuple[dict, bool | None]:
    f = _load_function(cfg.fn)
    p = cfg.params
    x0 = _parse_point(p.get("at", "0"))
    m = float(p.get("m", 1.0))
    eps = p.get("eps") and float(p["eps"])
    check = (dual.check_subquadratic_convexity if p.get("sub")
             else dual.check_quadratic_convexity)
    holds, wit = check(f, x0, m, eps=eps)
    payload = {"holds": holds, "sense": "sub-quadratic" if p.get("sub") else "quadratic",
               "modulus": m}
    if wit:
        payload["witness"] = {"slope": wit.slope.tolist(), "eps": wit.eps}
    return payload, holds


def _run_duality(cfg: ExperimentConfig) -> tuple[dict, bool | None]:
    f = _load_function(cfg.fn)
    p = cfg.params
    x0 = _parse_point(p.get("at", "0"))
    k = float(p.get("k", 2.0))
    fwd = dual.forward_dual_convexity(f, x0, k)
    cnv = dual.converse_kappa_bound(f, x0, k)
    payload = {"forward": fwd.as_dict(), "converse": cnv.as_dict()}
    verdicts = [r.passed for r in (fwd, cnv) if r.applicable]
    return payload, all(verdicts) if verdicts else None


def _run_dualradius(cfg: ExperimentConfig) -> tuple[dict, bool | None]:
    f = _load_function(cfg.fn)
    p = cfg.params
    x0 = _parse_point(p.get("at", "0"))
    r = float(p.get("r", 1.0))
    rep = dual.dual_osculating_bound(f, x0, r)
    return rep.as_dict(), rep.passed if rep.applicable else None


def _run_suite(cfg: ExperimentConfig, threads: int) -> tuple[dict, bool | None]:
    name = cfg.params.get("name") or cfg.fn
    try:
        res = checks.run_suite(name, seed=cfg.seed, threads=threads)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    return res, res["passed"]


_RUNNERS = {
    "kappa": _run_kappa,
    "conjugate": _run_conjugate,
    "drop": _run_drop,
    "sweep": _run_sweep,
    "density": _run_density,
    "qconv": _run_qconv,
    "duality": _run_duality,
    "dualradius": _run_dualradius,
    "suite": _run_suite,
}


def run(cfg: ExperimentConfig, threads: int = 1) -> RunReport:
    """Dispatch a config to its operation and wrap the outcome in a report."""
    if cfg.op not in _RUNNERS:
        raise InputError(f"unknown operation {cfg.op!r}")
    t0 = time.perf_counter()
    if cfg.op == "suite":
        results, passed = _run_suite(cfg, threads)
    else:
        results, passed = _RUNNERS[cfg.op](cfg)
    wall = time.perf_counter() - t0
    return RunReport(config=cfg.to_dict(), results=_sanitize(results),
                     passed=passed, wall_time_s=wall, version=__version__)


# -- argument parsing -------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="cvxgeo",
        description="Desk-scale experiments in second-order convex analysis.")
    ap.add_argument("--config", help="load an ExperimentConfig JSON instead of flags")
    ap.add_argument("--out", help="directory for the report JSON")
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--seed", type=int, default=0)
    sub = ap.add_subparsers(dest="op")

    def common(p):
        p.add_argument("--fn", help="catalog function label")

    p = sub.add_parser("kappa", help="curvature estimate at a point")
    common(p)
    p.add_argument("--at", default="0")
    p.add_argument("--eps0", type=float, default=0.1)
    p.add_argument("--ratio", type=float, default=0.5)
    p.add_argument("--count", type=int, default=14)
    p.add_argument("--dirs", type=int)
    p.add_argument("--tail", type=int, default=4)

    p = sub.add_parser("conjugate", help="discrete conjugate to CSV")
    common(p)
    p.add_argument("--grid", help="input grid CSV (alternative to --fn)")
    p.add_argument("--count", type=int, default=1025)
    p.add_argument("--csv-out", dest="csv_out")

    p = sub.add_parser("drop", help="lower a sphere onto the graph")
    common(p)
    p.add_argument("--center", default="0")
    p.add_argument("--r", type=float, default=1.0)
    p.add_argument("--probe", type=int, default=513)

    p = sub.add_parser("sweep", help="contact sweep over a center lattice")
    common(p)
    p.add_argument("--r", type=float, default=1.0)
    p.add_argument("--centers", type=int, default=129)
    p.add_argument("--probe", type=int, default=513)
    p.add_argument("--csv-out", dest="csv_out")

    p = sub.add_parser("density", help="two-route lower-density experiment")
    common(p)
    p.add_argument("--at", default="0")
    p.add_argument("--k", type=float, default=2.0)
    p.add_argument("--lattice", type=int)
    p.add_argument("--eps-count", dest="eps_count", type=int)
    p.add_argument("--eps0", type=float)
    p.add_argument("--report")

    p = sub.add_parser("qconv", help="quadratic/sub-quadratic convexity check")
    common(p)
    p.add_argument("--at", default="0")
    p.add_argument("--m", type=float, default=1.0)
    p.add_argument("--eps", type=float)
    p.add_argument("--sub", action="store_true")

    p = sub.add_parser("duality", help="conjugate-side curvature checks, both directions")
    common(p)
    p.add_argument("--at", default="0")
    p.add_argument("--k", type=float, default=2.0)

    p = sub.add_parser("dualradius", help="support-radius bound for the conjugate")
    common(p)
    p.add_argument("--at", default="0")
    p.add_argument("--r", type=float, default=1.0)

    p = sub.add_parser("suite", help="run a named check suite")
    p.add_argument("name", choices=["paper-checks", "invariants"])
    return ap


_PARAM_KEYS = {
    "kappa": ["at", "eps0", "ratio", "count", "dirs", "tail"],
    "conjugate": ["grid", "count", "csv_out"],
    "drop": ["center", "r", "probe"],
    "sweep": ["r", "centers", "probe", "csv_out"],
    "density": ["at", "k", "lattice", "eps_count", "eps0", "report"],
    "qconv": ["at", "m", "eps", "sub"],
    "duality": ["at", "k"],
    "dualradius": ["at", "r"],
    "suite": ["name"],
}


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    """Build the same ExperimentConfig that a config file would provide."""
    params = {}
    for key in _PARAM_KEYS.get(args.op, []):
        val = getattr(args, key, None)
        if val not in (None, False):
            params[key] = val
    return ExperimentConfig(op=args.op, fn=getattr(args, "fn", None), params=params,
                            out=args.out, seed=args.seed)


def main(argv: list[str] | None = None) -> int:
    ap = _build_parser()
    args = ap.parse_args(argv)
    try:
        if args.config:
            data = json.loads(Path(args.config).read_text(encoding="utf-8"))
            cfg = ExperimentConfig.from_dict(data)
        else:
            if not args.op:
                ap.print_help()
                return 2
            cfg = config_from_args(args)
        report = run(cfg, threads=args.threads)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    if cfg.op == "suite":
        for chk in report.results["checks"]:
            print(("PASS" if chk["passed"] else "FAIL"), chk["name"], "-", chk["detail"])
    payload = report.to_dict()
    payload_no_wall = {k: v for k, v in payload.items() if k != "wall_time_s"}
    print(json.dumps(_sanitize(payload_no_wall), indent=2, sort_keys=True))
    if cfg.out:
        out_dir = Path(cfg.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        path = out_dir / f"{cfg.op}-report.json"
        path.write_text(json.dumps(_sanitize(payload), indent=2, sort_keys=True),
                        encoding="utf-8")
    if report.passed is False:
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
