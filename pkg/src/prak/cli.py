"""Command-line front end: ``prak <verb> --config run.json``.

Exit status is 0 when every check passes, 1 on a residual failure and 2 on a
configuration or domain error. The JSON report goes to ``--out`` (stdout if
omitted); a short human summary is written to stderr.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import io
import json
import math
import sys
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from . import __version__
from .algebra import (AlgebraParamError, AlgebraParams, algebra_identity_report,
                      algebra_point_from_beta, build_algebra_point, with_corrupted_h)
from .crsys import CrVariant, UnevaluablePoint, residuals_at
from .exprfield import ALIAS_SETS, ExprError
from .geometry import (CURVATURE_NONZERO, CURVATURE_ZERO, CurveDomainError, MetricField,
                       SingularMetricError, StencilDomainError, VectorField4, classify_curvature,
                       null_geodesic_residual, riemann_at, trace_isotropic_curve)
from .linalg4 import ETA, MetricError, check_signature, invert_lower_triangular, triangular_factor
from .report import ordered_map
from .solutions import (CATALOG, DEFAULT_GRID, OBSTRUCTION_ENTRY, ObstructionFunction,
                        SolutionParamError, SolutionSpec, catalog_names, get_solution,
                        grid_points, spherical_obstruction_value)

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2

DEFAULT_TOLERANCES = {
    "residual": 1e-8,
    "decompose": 1e-12,
    "algebra": 1e-10,
    "symmetry": 1e-8,
    "transport": 1e-6,
    "isotropy": 1e-8,
    "curvature_zero": CURVATURE_ZERO,
    "curvature_nonzero": CURVATURE_NONZERO,
}
CURVE_STEPS = 100
CURVE_DTAU = 0.01
OBSTRUCTION_H = (1.5, 2.0, 3.0, 5.0)

# exceptions treated as configuration/domain errors (exit 2)
DOMAIN_ERRORS = (ExprError, MetricError, SingularMetricError, StencilDomainError,
                 CurveDomainError, SolutionParamError, AlgebraParamError, ZeroDivisionError)


class ConfigError(ValueError):
    pass


class PointError(ValueError):
    """A domain error at a specific grid point."""

    def __init__(self, point, exc: Exception):
        super().__init__(f"at point {list(map(float, point))}: {exc}")


# --------------------------------------------------------------------------
# Configuration
# --------------------------------------------------------------------------

@dataclass
class RunConfig:
    metric: MetricField
    field: VectorField4 | None
    u: VectorField4 | None
    variant: CrVariant | None
    grid: dict[str, tuple[float, float, int]]
    tolerances: dict[str, float]
    params: AlgebraParams
    aliases: str
    solution: SolutionSpec | None
    echo: dict[str, Any] = field(default_factory=dict)

    def points(self) -> list[np.ndarray]:
        return grid_points(self.grid)


def _axis_key(name: str, aliases: str) -> str:
    if name in ("x0", "x1", "x2", "x3"):
        return name
    table = ALIAS_SETS.get(aliases, {})
    if name in table:
        return f"x{table[name]}"
    raise ConfigError(f"unknown grid axis {name!r}")


def _parse_grid(raw: dict | None, aliases: str, base: dict) -> dict:
    grid = dict(base)
    for name, spec in (raw or {}).items():
        key = _axis_key(name, aliases)
        try:
            if isinstance(spec, dict):
                lo, hi, n = spec["min"], spec["max"], spec.get("count", 1)
            else:
                lo, hi, n = spec
            grid[key] = (float(lo), float(hi), int(n))
        except (KeyError, TypeError, ValueError):
            raise ConfigError(f"bad grid entry for {name!r}: {spec!r}") from None
        if grid[key][2] < 1:
            raise ConfigError(f"grid count for {name!r} must be >= 1")
    return grid


def parse_grid_override(text: str, aliases: str) -> tuple[str, tuple[float, float, int]]:
    """``axis=min:max:count`` (count defaults to 1)."""
    try:
        axis, rng = text.split("=", 1)
        parts = rng.split(":")
        lo, hi = float(parts[0]), float(parts[1])
        n = int(parts[2]) if len(parts) > 2 else 1
    except (ValueError, IndexError):
        raise ConfigError(f"bad --grid-override {text!r}; expected axis=min:max:count") from None
    if n < 1:
        raise ConfigError(f"grid count in {text!r} must be >= 1")
    return _axis_key(axis.strip(), aliases), (lo, hi, n)


def _vector(raw, aliases) -> VectorField4:
    if not isinstance(raw, list) or len(raw) != 4:
        raise ConfigError("a vector field needs a list of 4 expressions")
    return VectorField4([str(v) if not isinstance(v, (int, float)) else float(v) for v in raw],
                        aliases)


def build_config(raw: dict, grid_overrides: list[str] = (), tol: float | None = None,
                 solution: SolutionSpec | None = None) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    aliases = raw.get("aliases", "cylindrical")
    if aliases not in ALIAS_SETS:
        raise ConfigError(f"unknown alias set {aliases!r}; choose from {sorted(ALIAS_SETS)}")

    metric_raw = raw.get("metric")
    if solution is None and isinstance(metric_raw, str):
        if metric_raw not in CATALOG:
            raise ConfigError(f"unknown catalog entry {metric_raw!r}; "
                              f"available: {', '.join(catalog_names())}")
        solution = get_solution(metric_raw, **raw.get("catalog_params", {}))
    if solution is not None:
        metric = solution.metric
        base_grid = solution.grid
    elif isinstance(metric_raw, list) and len(metric_raw) == 10:
        metric = MetricField.from_upper([str(v) if not isinstance(v, (int, float)) else float(v)
                                         for v in metric_raw], aliases)
        base_grid = DEFAULT_GRID
    else:
        raise ConfigError("metric must be a catalog name or a list of 10 upper-triangle expressions")

    field_raw = raw.get("field")
    if field_raw is None:
        # an explicit null drops the catalog field (algebra-report then uses 'algebra.alpha')
        beta = solution.field if solution is not None and "field" not in raw else None
    elif isinstance(field_raw, str):
        if solution is None or field_raw != solution.name:
            beta = get_solution(field_raw, **raw.get("catalog_params", {})).field
        else:
            beta = solution.field
    else:
        beta = _vector(field_raw, aliases)
    u = _vector(raw["u"], aliases) if raw.get("u") is not None else None

    variant = raw.get("variant")
    if variant is None and solution is not None:
        variant = solution.target_system
    try:
        variant = CrVariant.parse(variant) if variant is not None else None
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    grid = _parse_grid(raw.get("grid"), aliases, base_grid)
    for text in grid_overrides:
        k, v = parse_grid_override(text, aliases)
        grid[k] = v

    tolerances = dict(DEFAULT_TOLERANCES)
    for k, v in (raw.get("tolerances") or {}).items():
        if k not in tolerances:
            raise ConfigError(f"unknown tolerance {k!r}")
        tolerances[k] = float(v)
    if tol is not None:
        tolerances["residual"] = float(tol)
    if not tolerances["residual"] > 0:
        raise ConfigError("tolerance 'residual' must be positive")
    if not tolerances["curvature_zero"] < tolerances["curvature_nonzero"]:
        raise ConfigError("curvature_zero must be below curvature_nonzero")

    alg = raw.get("algebra") or {}
    params = AlgebraParams(a=float(alg.get("a", 1.0)), c=float(alg.get("c", 1.0)),
                           alpha=tuple(alg.get("alpha", (1.0, 0.0, 0.0))))
    echo = {
        "metric": metric.upper_strings(),
        "field": beta.strings() if beta is not None else None,
        "u": u.strings() if u is not None else None,
        "variant": variant.value if variant is not None else None,
        "grid": {k: list(v) for k, v in sorted(grid.items())},
        "tolerances": tolerances,
        "algebra": {"a": params.a, "c": params.c, "alpha": list(params.alpha)},
        "aliases": aliases,
        "solution": solution.name if solution is not None else None,
        "solution_parameters": solution.parameters if solution is not None else None,
    }
    return RunConfig(metric=metric, field=beta, u=u, variant=variant, grid=grid,
                     tolerances=tolerances, params=params, aliases=aliases,
                     solution=solution, echo=echo)


def load_config(path: str | None) -> dict:
    if path is None:
        raise ConfigError("--config is required for this command")
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None


# --------------------------------------------------------------------------
# Report plumbing
# --------------------------------------------------------------------------

def _clean(obj):
    """JSON-safe copy: numpy scalars to floats, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


@dataclass
class Outcome:
    command: str
    rows: list[dict]
    summary: dict
    passed: bool
    unevaluable: list[dict] = field(default_factory=list)
    table_columns: list[str] = field(default_factory=list)

    def body(self, echo: dict) -> dict:
        return _clean({
            "meta": {"command": self.command, "version": __version__, "config": echo},
            "rows": self.rows,
            "unevaluable": self.unevaluable,
            "summary": self.summary,
            "passed": self.passed,
        })


def render_report(body: dict, timestamp: str | None = None) -> str:
    doc = json.loads(json.dumps(body))
    doc["meta"]["timestamp"] = timestamp or _dt.datetime.now(_dt.timezone.utc).isoformat()
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def render_table(outcome: Outcome) -> str:
    cols = outcome.table_columns
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x0", "x1", "x2", "x3", *cols])
    for row in outcome.rows:
        vals = row.get("residuals", {})
        w.writerow([f"{v:.17g}" for v in row["point"]]
                   + [f"{float(vals[c]):.17g}" if c in vals else "" for c in cols])
    return buf.getvalue()


def _sweep(cfg: RunConfig, fn: Callable[[np.ndarray], dict]) -> tuple[list[dict], list[dict]]:
    """Evaluate ``fn`` on the grid; guard trips become unevaluable entries."""
    def task(x):
        if cfg.solution is not None:
            try:
                cfg.solution.check_point(x)
            except SolutionParamError as exc:
                raise PointError(x, exc) from None
        try:
            return ("ok", fn(x))
        except UnevaluablePoint as exc:
            return ("skip", {"point": x.tolist(), "reason": str(exc)})
        except DOMAIN_ERRORS as exc:
            raise PointError(x, exc) from None

    results = ordered_map(task, cfg.points())
    rows = [r for kind, r in results if kind == "ok"]
    skipped = [r for kind, r in results if kind == "skip"]
    return rows, skipped


def _family(rid: str) -> str:
    return rid.split(".")[0]


def _max_by_family(rows: list[dict], key: str = "residuals") -> dict[str, float]:
    out: dict[str, float] = {}
    for row in rows:
        for rid, v in row.get(key, {}).items():
            fam = _family(rid)
            out[fam] = max(out.get(fam, 0.0), float(v))
    return out


# --------------------------------------------------------------------------
# Commands
# --------------------------------------------------------------------------

def cmd_decompose(cfg: RunConfig) -> Outcome:
    tol = cfg.tolerances["decompose"]

    def at(x):
        g = check_signature(cfg.metric.at(x))
        A = triangular_factor(g)
        B = invert_lower_triangular(A)
        scale = 1.0 + float(np.max(np.abs(g)))
        res = {
            "factor": float(np.max(np.abs(A @ ETA @ A.T - g))) / scale,
            "inverse": float(np.max(np.abs(B @ A - np.eye(4)))),
        }
        return {"point": x.tolist(), "A": A.tolist(), "B": B.tolist(), "residuals": res}

    rows, skipped = _sweep(cfg, at)
    worst = _max_by_family(rows)
    passed = all(v <= tol for v in worst.values())
    return Outcome("decompose", rows, {"max": worst, "tolerance": tol, "passed": passed},
                   passed, skipped, ["factor", "inverse"])


def cmd_algebra_report(cfg: RunConfig, corruption: float | None = None) -> Outcome:
    tol = cfg.tolerances["algebra"]

    def at(x):
        g = cfg.metric.at(x)
        if cfg.field is not None:
            pt = algebra_point_from_beta(g, cfg.field.at(x), cfg.params.a, cfg.params.c)
        else:
            pt = build_algebra_point(g, cfg.params)
        if corruption:
            pt = with_corrupted_h(pt, corruption)
        rep = algebra_identity_report(pt, trials=16, rng=np.random.default_rng(0), tol=tol)
        return {"point": x.tolist(), "residuals": rep.residuals, "failures": rep.failures,
                "kappa_rank": rep.extra["kappa_rank"]}

    rows, skipped = _sweep(cfg, at)
    worst: dict[str, float] = {}
    for row in rows:
        for k, v in row["residuals"].items():
            worst[k] = max(worst.get(k, 0.0), v)
    failing = sorted({k for row in rows for k in row["failures"]})
    passed = not failing
    cols = list(rows[0]["residuals"]) if rows else []
    return Outcome("algebra-report", rows,
                   {"max": worst, "failing": failing, "tolerance": tol, "passed": passed,
                    "corruption": corruption},
                   passed, skipped, cols)


def _residual_rows(cfg: RunConfig, variant: CrVariant) -> tuple[list[dict], list[dict]]:
    if cfg.field is None:
        raise ConfigError("this command needs a beta field ('field' in the config)")
    if variant.needs_beta_field and cfg.u is not None:
        raise ConfigError(f"{variant.value} tests the beta field itself; drop 'u' from the config")
    u = cfg.u

    def at(x):
        s = residuals_at(variant, cfg.metric, cfg.field, x, u=u,
                         a=cfg.params.a, c=cfg.params.c)
        return {"point": x.tolist(), "residuals": {**s.residuals, **s.constraints},
                "normalized": s.normalized, "constraints": s.constraints}

    return _sweep(cfg, at)


def _residual_summary(rows, tol) -> tuple[dict, bool]:
    norm = _max_by_family(rows, "normalized")
    raw = _max_by_family(rows, "residuals")
    cons = {k: max((r["constraints"][k] for r in rows), default=0.0) for k in ("eq20", "eq21")}
    checks = {f"system:{k}": v <= tol for k, v in norm.items()}
    checks.update({k: v <= tol for k, v in cons.items()})
    passed = bool(rows) and all(checks.values())
    return {"max_normalized": norm, "max_raw": raw, "constraints": cons,
            "checks": checks, "tolerance": tol, "passed": passed}, passed


def cmd_residuals(cfg: RunConfig) -> Outcome:
    if cfg.variant is None:
        raise ConfigError("config needs a 'variant'")
    rows, skipped = _residual_rows(cfg, cfg.variant)
    summary, passed = _residual_summary(rows, cfg.tolerances["residual"])
    summary["variant"] = cfg.variant.value
    summary["evaluated"] = len(rows)
    cols = list(rows[0]["residuals"]) if rows else []
    return Outcome("residuals", rows, summary, passed, skipped, cols)


def _curvature_rows(cfg: RunConfig) -> tuple[list[dict], list[dict]]:
    def at(x):
        R = riemann_at(cfg.metric, x)
        return {"point": x.tolist(),
                "residuals": {"max_abs": R.max_abs,
                              "antisymmetry": R.antisymmetry_residual(),
                              "bianchi": R.bianchi_residual()}}
    return _sweep(cfg, at)


def _curvature_summary(cfg: RunConfig, rows) -> dict:
    t = cfg.tolerances
    worst = _max_by_family(rows)
    m = worst.get("max_abs", 0.0)
    cls = classify_curvature(m, t["curvature_zero"], t["curvature_nonzero"])
    sym_ok = (worst.get("antisymmetry", 0.0) <= t["symmetry"]
              and worst.get("bianchi", 0.0) <= t["symmetry"])
    expected = cfg.solution.expected_curvature if cfg.solution is not None else None
    passed = bool(rows) and sym_ok and cls != "indeterminate" and (expected in (None, cls))
    return {"max_abs": m, "antisymmetry": worst.get("antisymmetry", 0.0),
            "bianchi": worst.get("bianchi", 0.0), "classification": cls,
            "expected": expected, "passed": passed}


def cmd_curvature(cfg: RunConfig) -> Outcome:
    rows, skipped = _curvature_rows(cfg)
    summary = _curvature_summary(cfg, rows)
    return Outcome("curvature", rows, summary, summary["passed"], skipped,
                   ["max_abs", "antisymmetry", "bianchi"])


def _obstruction_outcome(params: dict) -> Outcome:
    hs = params.get("H", OBSTRUCTION_H)
    hs = [float(h) for h in (hs if isinstance(hs, (list, tuple)) else [hs])]
    rows = []
    for H in hs:
        var = ObstructionFunction(H).variation()
        rows.append({"point": [H, 0.0, 0.0, 0.0], "H": H,
                     "residuals": {"variation": var,
                                   "F(pi/4)": spherical_obstruction_value(H, math.pi / 4),
                                   "F(pi/3)": spherical_obstruction_value(H, math.pi / 3)}})
    passed = all(r["residuals"]["variation"] > 0.01 for r in rows)
    return Outcome("verify-solution", rows,
                   {"solution": OBSTRUCTION_ENTRY, "min_variation": 0.01, "passed": passed},
                   passed, [], ["variation", "F(pi/4)", "F(pi/3)"])


def cmd_verify_solution(name: str, overrides: dict | None = None,
                        grid_overrides: list[str] = (), tol: float | None = None,
                        raw: dict | None = None) -> tuple[Outcome, dict]:
    overrides = dict(overrides or {})
    if name == OBSTRUCTION_ENTRY:
        return _obstruction_outcome(overrides), {"solution": name, "parameters": overrides}
    if name not in CATALOG:
        raise ConfigError(f"unknown catalog entry {name!r}; available: {', '.join(catalog_names())}")
    spec = get_solution(name, **overrides)
    cfg = build_config(dict(raw or {}), grid_overrides, tol, solution=spec)
    t = cfg.tolerances

    rows, skipped = _residual_rows(cfg, spec.target_system)

    def geo(x):
        return {"point": x.tolist(),
                "residuals": {"eq17": float(np.max(np.abs(
                    null_geodesic_residual(cfg.field, cfg.metric, x))))}}

    geo_rows, _ = _sweep(cfg, geo)
    by_point = {tuple(r["point"]): r for r in geo_rows}
    for r in rows:
        r["residuals"]["eq17"] = by_point[tuple(r["point"])]["residuals"]["eq17"]
        r["normalized"]["eq17"] = r["residuals"]["eq17"]
    summary, sys_ok = _residual_summary(rows, t["residual"])

    curv_rows, _ = _curvature_rows(cfg)
    curv = _curvature_summary(cfg, curv_rows)

    pts = cfg.points()
    x0 = pts[len(pts) // 2]
    try:
        trace = trace_isotropic_curve(cfg.field, cfg.metric, x0, CURVE_DTAU, CURVE_STEPS)
    except CurveDomainError as exc:
        raise PointError(x0, exc) from None
    curve = {"start": x0.tolist(), "steps": CURVE_STEPS, "dtau": CURVE_DTAU,
             "end": trace.points[-1].tolist(),
             "max_transport": trace.max_transport, "max_isotropy": trace.max_isotropy}
    curve["passed"] = (trace.max_transport <= t["transport"]
                       and trace.max_isotropy <= t["isotropy"])

    passed = sys_ok and curv["passed"] and curve["passed"]
    summary.update({"solution": name, "variant": spec.target_system.value,
                    "curvature": curv, "curve": curve, "evaluated": len(rows),
                    "passed": passed})
    cols = list(rows[0]["residuals"]) if rows else []
    return Outcome("verify-solution", rows, summary, passed, skipped, cols), cfg.echo


# --------------------------------------------------------------------------
# Entry point
# --------------------------------------------------------------------------

def _param_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="prak", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="verb", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON run configuration")
        sp.add_argument("--out", help="write the JSON report here (default: stdout)")
        sp.add_argument("--table", help="write per-point rows as CSV")
        sp.add_argument("--grid-override", action="append", default=[], metavar="AXIS=MIN:MAX:COUNT")
        sp.add_argument("--tol", type=float, help="residual tolerance")
        return sp

    common(sub.add_parser("decompose", help="triangular factor A and inverse B on the grid"))
    ar = common(sub.add_parser("algebra-report", help="algebra identities on the grid"))
    ar.add_argument("--inject-h-corruption", type=float, metavar="DELTA",
                    help="add DELTA to h_01 before checking (detector test)")
    common(sub.add_parser("residuals", help="residuals of the selected system"))
    vs = common(sub.add_parser("verify-solution", help="verify a catalog solution"))
    vs.add_argument("name", help=f"one of: {', '.join(catalog_names())}")
    vs.add_argument("overrides", nargs="*", metavar="KEY=VALUE",
                    help="catalog parameter overrides, e.g. W='3+s^2' p=2")
    common(sub.add_parser("curvature", help="Riemann tensor checks on the grid"))
    return p


def run(argv: list[str] | None = None, timestamp: str | None = None) -> tuple[int, str, str]:
    """Run the CLI; returns (exit code, report text, table text)."""
    args = _parser().parse_args(argv)
    try:
        if args.verb == "verify-solution":
            overrides = {}
            for item in args.overrides:
                if "=" not in item:
                    raise ConfigError(f"bad override {item!r}; expected KEY=VALUE")
                k, v = item.split("=", 1)
                overrides[k] = _param_value(v)
            raw = load_config(args.config) if args.config else {}
            outcome, echo = cmd_verify_solution(args.name, overrides, args.grid_override,
                                                args.tol, raw)
        else:
            cfg = build_config(load_config(args.config), args.grid_override, args.tol)
            echo = cfg.echo
            if args.verb == "decompose":
                outcome = cmd_decompose(cfg)
            elif args.verb == "algebra-report":
                outcome = cmd_algebra_report(cfg, args.inject_h_corruption)
                echo = {**echo, "inject_h_corruption": args.inject_h_corruption}
            elif args.verb == "residuals":
                outcome = cmd_residuals(cfg)
            else:
                outcome = cmd_curvature(cfg)
    except (ConfigError, PointError, KeyError, *DOMAIN_ERRORS) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else str(exc)
        body = {"meta": {"command": args.verb, "version": __version__},
                "error": f"{type(exc).__name__}: {msg}", "passed": False}
        return EXIT_CONFIG, render_report(body, timestamp), ""

    text = render_report(outcome.body(echo), timestamp)
    table = render_table(outcome)
    return (EXIT_OK if outcome.passed else EXIT_FAIL), text, table


def main(argv: list[str] | None = None) -> int:
    args_list = sys.argv[1:] if argv is None else argv
    code, text, table = run(args_list)
    ns, _ = _parser().parse_known_args(args_list)
    if getattr(ns, "out", None):
        with open(ns.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if getattr(ns, "table", None) and table:
        with open(ns.table, "w", encoding="utf-8") as fh:
            fh.write(table)
    status = {EXIT_OK: "PASS", EXIT_FAIL: "FAIL", EXIT_CONFIG: "ERROR"}[code]
    print(f"prak {ns.verb}: {status} (exit {code})", file=sys.stderr)
    if code == EXIT_CONFIG:
        print(json.loads(text).get("error", ""), file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
