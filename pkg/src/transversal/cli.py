"""Scenario-driven command line: ``transversal run scenarios.yaml``.

Scenario files are YAML. A file holds either a list of scenarios or a mapping
with a ``scenarios`` list::

    scenarios:
      - name: orthogonal_lines
        A: {type: affine, base: [0, 0], span: [[1, 0]]}
        B: {type: affine, base: [0, 0], span: [[0, 1]]}
        xbar: [0, 0]
        config: {samples_per_radius: 200, seed: 3}
        estimators: [str, tr, {name: itr_w, config: {samples_per_radius: 100}}]
        ap: {x0: [1, 0], max_iter: 500, stop_tol: 1e-12}
        checks: [P1, chain, rate_bounds]
        expected:
          str: {value: 0.7071, tolerance: 0.02, source: grid oracle}

Set literals: ``affine`` (base, span), ``polyhedron`` (normals, offsets; the
set {x : normals x <= offsets}), ``ball`` (center, radius), ``polytope``
(vertices) and ``union`` (pieces). Instead of A and B a scenario may give
``graph: {matrix: M, x: xbar}``, the graph of x -> M x paired with X x {M xbar},
or ``graph: {set: <affine>, x_dim: n, x: xbar, y: ybar}`` for a general affine graph.
"""

import argparse
import csv
import io
import logging
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields

import numpy as np
import yaml

from . import altproj, constants, regmap
from .projections import AffineSubspace, Ball, FiniteUnion, Polyhedron, Polytope

log = logging.getLogger("transversal")

CSV_COLUMNS = ["scenario", "quantity", "value", "bias", "expected", "tolerance", "pass", "margin", "runtime_ms"]


class ValidationError(ValueError):
    pass


# ---------------------------------------------------------------------------
# registries


def _pair_mapping(kind, variant):
    est = regmap.estimate_rg if kind == "rg" else regmap.estimate_srg

    def run(A, B, xbar, cfg, graph=None):
        if variant == "graph":
            if graph is None:
                raise ValidationError(f"{kind}_graph needs a graph scenario")
            return est(graph, cfg=cfg)
        M = regmap.PairProduct(A, B) if variant == "product" else regmap.Difference(A, B)
        return est(M, xbar, cfg)

    return run


def _pair_constant(fn):
    def run(A, B, xbar, cfg, graph=None):
        return fn(A, B, xbar, cfg)

    return run


ESTIMATORS = {
    "str": _pair_constant(constants.estimate_str),
    "str_prime": _pair_constant(constants.estimate_str_prime),
    "tr": _pair_constant(constants.estimate_tr),
    "tr_dual": _pair_constant(constants.estimate_tr_dual),
    "itr": _pair_constant(constants.estimate_itr),
    "itr_c": _pair_constant(constants.estimate_itr_c),
    "itr_w": _pair_constant(constants.estimate_itr_w),
    "str1": _pair_constant(constants.estimate_str1),
    "rg": _pair_mapping("rg", "product"),
    "srg": _pair_mapping("srg", "product"),
    "rg_diff": _pair_mapping("rg", "difference"),
    "srg_diff": _pair_mapping("srg", "difference"),
    "rg_graph": _pair_mapping("rg", "graph"),
    "srg_graph": _pair_mapping("srg", "graph"),
}

CHECKS = ("P1", "P2", "P2plus", "P3", "chain", "C00", "rate_bounds", "linear_monotone", "joining")

CONFIG_FIELDS = {f.name for f in fields(constants.EstimatorConfig)}


# ---------------------------------------------------------------------------
# scenarios


@dataclass
class Scenario:
    name: str
    xbar: tuple
    A: dict = None
    B: dict = None
    graph: dict = None
    config: dict = field(default_factory=dict)
    estimators: list = field(default_factory=list)
    ap: dict = None
    checks: list = field(default_factory=list)
    expected: dict = field(default_factory=dict)

    def sets(self):
        if self.graph is not None:
            return self.graph_pair().sets()
        return build_set(self.A), build_set(self.B)

    def graph_pair(self):
        if self.graph is None:
            return None
        g = self.graph
        if "matrix" in g:
            M = np.atleast_2d(np.asarray(g["matrix"], dtype=float))
            return regmap.GraphPair.linear(M, g.get("x"))
        gph = build_set(g["set"], "graph.set")
        if not isinstance(gph, AffineSubspace):
            raise ValueError("graph.set must be affine")
        return regmap.GraphPair(gph, int(g["x_dim"]), g["x"], g["y"])

    def cfg(self, overrides=None, seed_override=None):
        kw = dict(self.config)
        kw.update(overrides or {})
        if seed_override is not None:
            kw["seed"] = seed_override
        if "radii" in kw:
            kw["radii"] = tuple(kw["radii"])
        return constants.EstimatorConfig(**kw)

    def to_dict(self):
        d = {"name": self.name, "xbar": list(self.xbar)}
        for k in ("A", "B", "graph", "ap"):
            if getattr(self, k) is not None:
                d[k] = getattr(self, k)
        for k in ("config", "estimators", "checks", "expected"):
            if getattr(self, k):
                d[k] = getattr(self, k)
        return d


def _vec(v, where):
    try:
        return [float(t) for t in np.atleast_1d(np.asarray(v, dtype=float)).tolist()]
    except (TypeError, ValueError):
        raise ValidationError(f"{where}: expected a list of numbers")


def build_set(lit, where="set"):
    if not isinstance(lit, dict) or "type" not in lit:
        raise ValidationError(f"{where}: set literal needs a 'type'")
    kind = lit["type"]
    try:
        if kind == "affine":
            return AffineSubspace.from_spanning(lit["base"], lit.get("span", []))
        if kind == "polyhedron":
            return Polyhedron(lit["normals"], lit["offsets"])
        if kind == "ball":
            return Ball(lit["center"], lit["radius"])
        if kind == "polytope":
            return Polytope(lit["vertices"])
        if kind == "union":
            return FiniteUnion([build_set(p, f"{where}.pieces[{i}]") for i, p in enumerate(lit["pieces"])])
    except KeyError as e:
        raise ValidationError(f"{where}.{e.args[0]}: missing field")
    except ValidationError:
        raise
    except (TypeError, ValueError) as e:
        raise ValidationError(f"{where}: {e}")
    raise ValidationError(f"{where}.type: unknown set type {kind!r}")


def _validate(raw, i):
    where = f"scenarios[{i}]"
    if not isinstance(raw, dict):
        raise ValidationError(f"{where}: expected a mapping")
    known = {f.name for f in fields(Scenario)}
    extra = set(raw) - known
    if extra:
        raise ValidationError(f"{where}.{sorted(extra)[0]}: unknown field")
    if "name" not in raw:
        raise ValidationError(f"{where}.name: missing field")
    where = f"scenarios[{i}] ({raw['name']})"
    if "graph" in raw:
        if "A" in raw or "B" in raw:
            raise ValidationError(f"{where}.graph: give either graph or A and B")
        g = raw["graph"]
        if not isinstance(g, dict):
            raise ValidationError(f"{where}.graph: expected a mapping")
        if "matrix" not in g:
            for k in ("set", "x_dim", "x", "y"):
                if k not in g:
                    raise ValidationError(f"{where}.graph.{k}: missing field (or give graph.matrix)")
    else:
        for k in ("A", "B"):
            if k not in raw:
                raise ValidationError(f"{where}.{k}: missing field")
    s = Scenario(
        name=str(raw["name"]),
        xbar=tuple(_vec(raw.get("xbar", []), f"{where}.xbar")),
        A=raw.get("A"),
        B=raw.get("B"),
        graph=raw.get("graph"),
        config=dict(raw.get("config") or {}),
        estimators=list(raw.get("estimators") or []),
        ap=raw.get("ap"),
        checks=list(raw.get("checks") or []),
        expected=dict(raw.get("expected") or {}),
    )
    bad = set(s.config) - CONFIG_FIELDS
    if bad:
        raise ValidationError(f"{where}.config.{sorted(bad)[0]}: unknown config field")
    try:
        s.cfg()
    except (TypeError, ValueError) as e:
        raise ValidationError(f"{where}.config: {e}")
    for j, e in enumerate(s.estimators):
        name = e["name"] if isinstance(e, dict) else e
        if name not in ESTIMATORS:
            raise ValidationError(f"{where}.estimators[{j}]: unknown estimator {name!r}")
        if isinstance(e, dict):
            bad = set(e.get("config") or {}) - CONFIG_FIELDS
            if bad:
                raise ValidationError(f"{where}.estimators[{j}].config.{sorted(bad)[0]}: unknown config field")
    for j, c in enumerate(s.checks):
        if c not in CHECKS:
            raise ValidationError(f"{where}.checks[{j}]: unknown check {c!r}")
    for q, e in s.expected.items():
        if not isinstance(e, dict) or "value" not in e:
            raise ValidationError(f"{where}.expected.{q}.value: missing field")
    if s.graph is not None:
        try:
            gp = s.graph_pair()
        except (TypeError, ValueError) as e:
            raise ValidationError(f"{where}.graph: {e}")
        if not s.xbar:
            s.xbar = tuple(gp.point.tolist())
    A = s.graph_pair().sets()[0] if s.graph is not None else build_set(s.A, f"{where}.A")
    B = s.graph_pair().sets()[1] if s.graph is not None else build_set(s.B, f"{where}.B")
    if len(s.xbar) != A.dim or len(s.xbar) != B.dim:
        raise ValidationError(f"{where}.xbar: dimension {len(s.xbar)} does not match the sets")
    if not (A.contains(np.array(s.xbar)) and B.contains(np.array(s.xbar))):
        raise ValidationError(f"{where}.xbar: not in A ∩ B")
    if s.ap is not None and "x0" not in s.ap:
        raise ValidationError(f"{where}.ap.x0: missing field")
    return s


def load_scenarios(path):
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        loc = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ValidationError(f"{path}: YAML parse error{loc}: {getattr(e, 'problem', e)}")
    if data is None:
        return []
    if isinstance(data, dict):
        data = data.get("scenarios") or []
    if not isinstance(data, list):
        raise ValidationError(f"{path}: expected a list of scenarios")
    return [_validate(raw, i) for i, raw in enumerate(data)]


def dump_scenarios(scenarios, path=None):
    text = yaml.safe_dump({"scenarios": [s.to_dict() for s in scenarios]}, sort_keys=False)
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text


# ---------------------------------------------------------------------------
# running


@dataclass
class Row:
    scenario: str
    quantity: str
    value: object = ""
    bias: str = ""
    expected: object = ""
    tolerance: object = ""
    passed: bool = True
    margin: object = ""
    runtime_ms: float = 0.0


@dataclass
class Report:
    rows: list = field(default_factory=list)
    traces: dict = field(default_factory=dict)

    @property
    def n_failed(self):
        return sum(not r.passed for r in self.rows)

    @property
    def passed(self):
        return self.n_failed == 0

    def summary(self):
        return f"{len(self.rows)} rows, {len(self.rows) - self.n_failed} passed, {self.n_failed} failed"


def _ms(t0, timing):
    return round((time.perf_counter() - t0) * 1000, 1) if timing else 0


def _expect(row, expected):
    e = expected.get(row.quantity)
    if e is None:
        return row
    row.expected, row.tolerance = e["value"], e.get("tolerance", 0.0)
    if isinstance(row.expected, str) or isinstance(row.value, str):
        row.passed = str(row.value) == str(row.expected)
    else:
        row.margin = float(row.tolerance) - abs(float(row.value) - float(row.expected))
        row.passed = row.margin >= 0
    return row


class _Context:
    """Estimates computed so far for one scenario, filled on demand."""

    def __init__(self, s, seed_override):
        self.s, self.seed_override = s, seed_override
        self.A, self.B = s.sets()
        self.xbar = np.array(s.xbar, dtype=float)
        self.graph = s.graph_pair()
        self.cfg = s.cfg(seed_override=seed_override)
        self.values, self.trace, self.overrides = {}, None, {}
        for e in s.estimators:
            if isinstance(e, dict):
                self.overrides[e["name"]] = e.get("config") or {}

    @property
    def convex(self):
        return self.A.is_convex and self.B.is_convex

    def estimate(self, name):
        if name not in self.values:
            cfg = self.s.cfg(self.overrides.get(name), self.seed_override)
            self.values[name] = ESTIMATORS[name](self.A, self.B, self.xbar, cfg, graph=self.graph)
        return self.values[name]

    def value(self, name):
        return self.estimate(name).value

    def run_ap(self):
        if self.trace is None:
            ap = self.s.ap
            if ap is None:
                raise ValidationError(f"{self.s.name}: rate checks need an 'ap' block")
            self.trace = altproj.run_ap(self.A, self.B, ap["x0"], int(ap.get("max_iter", 1000)),
                                        float(ap.get("stop_tol", 1e-12)))
        return self.trace

    def rate(self):
        """AP rate: fitted on the tail, or the worst one-step ratio for short traces."""
        t = self.run_ap()
        try:
            return altproj.fit_rate(t).c
        except altproj.InsufficientData:
            return altproj.one_step_rate(t)

    def nonconvex_rate(self):
        """Smallest c certified by the linear-monotone or joining conditions, else None."""
        t = self.run_ap()
        cands = []
        c = altproj.one_step_rate(t)
        if c < 1 and altproj.check_linear_monotone(t, c):
            cands.append(c)
        c = altproj.joining_rate(t)
        if c < 1 and altproj.check_joining_conditions(t, c):
            cands.append(c)
        return min(cands) if cands else None


def _run_check(ctx, name):
    slack = ctx.cfg.slack
    if name == "P1":
        return constants.check_P1_sandwich(ctx.value("str"), ctx.value("str_prime"), slack)
    if name == "P2":
        return regmap.check_P2(ctx.A, ctx.B, ctx.xbar, ctx.cfg, {"tr": ctx.value("tr"), "str": ctx.value("str")})
    if name == "P2plus":
        return regmap.check_P2plus(ctx.A, ctx.B, ctx.xbar, ctx.cfg, {"tr": ctx.value("tr"), "str": ctx.value("str")})
    if name == "P3":
        if ctx.graph is None:
            raise ValidationError("P3 needs a graph scenario")
        return regmap.check_P3(ctx.graph, ctx.cfg)
    if name == "chain":
        itr_c = ctx.value("itr_c") if ctx.convex else None
        return constants.check_chain(ctx.value("itr"), ctx.value("itr_w"), itr_c, ctx.value("str"),
                                     ctx.value("str1"), slack, convex=ctx.convex)
    if name == "C00":
        return constants.check_C00(ctx.A, ctx.B, ctx.xbar, ctx.cfg)
    if name == "rate_bounds":
        if ctx.convex:
            return altproj.verify_rate_bounds(ctx.value("str"), ctx.rate(), True, slack)
        c = ctx.nonconvex_rate()
        return altproj.verify_rate_bounds(ctx.value("str"), 1.0 if c is None else c, False, slack,
                                          conditions_ok=c is not None)
    if name == "linear_monotone":
        return altproj.check_linear_monotone(ctx.run_ap(), ctx.rate() + slack)
    if name == "joining":
        return altproj.check_joining_conditions(ctx.run_ap(), altproj.joining_rate(ctx.run_ap()) + slack)
    raise ValidationError(f"unknown check {name!r}")


def _check_row(s, name, out, t0, timing):
    if isinstance(out, constants.C00Verdict):
        return _expect(Row(s.name, name, out.status, runtime_ms=_ms(t0, timing)), s.expected)
    if isinstance(out, bool):
        return Row(s.name, name, "ok" if out else "violated", passed=out, runtime_ms=_ms(t0, timing))
    row = Row(s.name, name, "", passed=out.passed, runtime_ms=_ms(t0, timing))
    if out.links:
        row.margin = out.margin
    row.value = "; ".join(out.violated) if out.violated else ("skipped" if not out.links else "ok")
    return row


def run_scenario(s, seed_override=None, timing=False):
    """All rows of one scenario; failures become rows instead of exceptions."""
    rows, trace = [], None
    try:
        ctx = _Context(s, seed_override)
    except Exception as e:  # noqa: BLE001 - a broken scenario must not abort the battery
        return [Row(s.name, "error", f"{type(e).__name__}: {e}", passed=False)], None
    for e in s.estimators:
        name = e["name"] if isinstance(e, dict) else e
        t0 = time.perf_counter()
        try:
            est = ctx.estimate(name)
            rows.append(_expect(Row(s.name, name, est.value, getattr(est, "bias", ""),
                                    runtime_ms=_ms(t0, timing)), s.expected))
        except Exception as err:  # noqa: BLE001
            rows.append(Row(s.name, name, f"{type(err).__name__}: {err}", passed=False))
    if s.ap is not None:
        t0 = time.perf_counter()
        try:
            rows.append(_expect(Row(s.name, "ap_rate", ctx.rate(), "fit", runtime_ms=_ms(t0, timing)), s.expected))
            trace = ctx.trace
        except Exception as err:  # noqa: BLE001
            rows.append(Row(s.name, "ap_rate", f"{type(err).__name__}: {err}", passed=False))
    for name in s.checks:
        t0 = time.perf_counter()
        try:
            rows.append(_check_row(s, name, _run_check(ctx, name), t0, timing))
        except Exception as err:  # noqa: BLE001
            rows.append(Row(s.name, name, f"{type(err).__name__}: {err}", passed=False))
    return rows, trace


def _worker(args):
    return run_scenario(*args)


def run_battery(scenarios, parallelism=1, seed_override=None, timing=False):
    jobs = [(s, seed_override, timing) for s in scenarios]
    if parallelism > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            results = list(pool.map(_worker, jobs))
    else:
        results = [_worker(j) for j in jobs]
    report = Report()
    for s, (rows, trace) in zip(scenarios, results):
        report.rows.extend(rows)
        if trace is not None:
            report.traces[s.name] = trace
    return report


# ---------------------------------------------------------------------------
# output


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(round(v, 10))
    return str(v)


def _cells(r):
    return [_fmt(x) for x in (r.scenario, r.quantity, r.value, r.bias, r.expected, r.tolerance,
                              r.passed, r.margin, r.runtime_ms)]


def format_report(report, fmt="csv"):
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        w.writerows(_cells(r) for r in report.rows)
        return buf.getvalue()
    if fmt == "markdown":
        esc = lambda c: c.replace("|", "\\|")
        lines = ["| " + " | ".join(CSV_COLUMNS) + " |", "|" + "---|" * len(CSV_COLUMNS)]
        lines += ["| " + " | ".join(esc(c) for c in _cells(r)) + " |" for r in report.rows]
        lines += ["", report.summary()]
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown format {fmt!r}")


def emit_report(report, fmt="csv", path=None):
    text = format_report(report, fmt)
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text


def write_trace(trace, path):
    steps = trace.step_norms
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        n = trace.x_seq[0].size
        w.writerow(["k"] + [f"x{j}" for j in range(n)] + ["d_int", "step_norm"])
        for k, x in enumerate(trace.x_seq):
            step = steps[2 * k] + steps[2 * k + 1] if 2 * k + 1 < len(steps) else ""
            w.writerow([k] + [_fmt(float(t)) for t in x] + [_fmt(float(trace.d_int[k])), _fmt(step)])


# ---------------------------------------------------------------------------
# entry point


def _parser():
    p = argparse.ArgumentParser(prog="transversal", description=__doc__.splitlines()[0])
    p.add_argument("--list-estimators", action="store_true", help="print estimator and check names")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="cmd")
    r = sub.add_parser("run", help="run a scenario battery")
    r.add_argument("file")
    r.add_argument("--out", help="output directory (default: stdout)")
    r.add_argument("--format", choices=["csv", "markdown"], default="csv")
    r.add_argument("--parallel", type=int, default=1)
    r.add_argument("--seed-override", type=int)
    r.add_argument("--dump-traces", action="store_true", help="write per-iterate AP traces")
    r.add_argument("--timing", action="store_true", help="record runtimes (breaks byte-identical output)")
    return p


def main(argv=None):
    p = _parser()
    args = p.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.list_estimators:
        print("estimators: " + " ".join(ESTIMATORS))
        print("checks: " + " ".join(CHECKS))
        return 0
    if args.cmd != "run":
        p.print_usage(sys.stderr)
        return 2
    try:
        scenarios = load_scenarios(args.file)
    except (OSError, ValidationError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    if args.parallel < 1:
        print("error: --parallel must be positive", file=sys.stderr)
        return 2
    report = run_battery(scenarios, args.parallel, args.seed_override, args.timing)
    ext = "csv" if args.format == "csv" else "md"
    try:
        if args.out:
            os.makedirs(args.out, exist_ok=True)
            emit_report(report, args.format, os.path.join(args.out, f"report.{ext}"))
            if args.dump_traces:
                for name, tr in report.traces.items():
                    write_trace(tr, os.path.join(args.out, f"trace_{name}.csv"))
        else:
            if args.dump_traces:
                log.warning("--dump-traces needs --out; traces not written")
            emit_report(report, args.format)
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    print(report.summary(), file=sys.stderr)
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
