"""Command-line interface, CSV ingestion, scenario files and reports.

Subcommands::

    robust-ecf test DATA.csv        run the test on long-format data
    robust-ecf bandwidth DATA.csv   cross-validation curves per group
    robust-ecf power-surface DATA.csv --h1 ... --h2 ...
    robust-ecf simulate SCENARIO.json
    robust-ecf contiguous SCENARIO.json
    robust-ecf to-long FILE [FILE ...]

Exit status is 0 on success, 2 for invalid input or configuration and 3
when a numerical step breaks down.
"""

import argparse
import ast
import csv
from dataclasses import asdict, dataclass, field, replace
import io
import itertools
import json
import math
import operator
from pathlib import Path
import sys

import numpy as np

from . import __version__
from .bandwidth import BandwidthSpec, cv_curve, default_grid
from .ecf_test import INDICATOR
from .errors import (
    ConfigError,
    InsufficientData,
    NumericalError,
    ParseError,
    SchemaError,
    TooFewGroups,
    ValidationError,
)
from .pipeline import TestOptions, compare_curves
from .robust_core import RhoFunction, diff_median_scale
from .simulation import (
    BOTH,
    DEFAULT_SIGMAS,
    MIXTURE_NOTE,
    MODELS,
    ContaminationSpec,
    ContiguousSpec,
    ScenarioConfig,
    run_contiguous,
    run_level_power,
)
from .smoothing import CLASSICAL, ROBUST, Sample

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NUMERIC = 3

MIN_ROWS_PER_GROUP = 20

SQUARED_NORM_NOTE = (
    "the statistic is T = sum_j (n_j/n) ||phi_j - phi_0j||_w^2, the squared "
    "weighted L2 distance, which is the form whose n T limit is a weighted chi-square"
)
SCALE_NOTE = (
    "the A matrix uses the error characteristic function estimated from the "
    "weight-normalised ECF of the residuals"
)
FIDELITY_NOTES = (SQUARED_NORM_NOTE, MIXTURE_NOTE, SCALE_NOTE)


def fmt(v):
    """17 significant digits, enough to round-trip any double."""
    return format(float(v), ".17g")


# --------------------------------------------------------------------- data

@dataclass
class Dataset:
    """Long-format records, groups in order of first appearance."""

    groups: list
    group: np.ndarray
    x: np.ndarray
    y: np.ndarray

    def samples(self):
        return [Sample(self.x[self.group == g], self.y[self.group == g], g) for g in self.groups]

    def counts(self):
        return {g: int(np.sum(self.group == g)) for g in self.groups}

    def check_testable(self, min_rows=MIN_ROWS_PER_GROUP):
        if len(self.groups) < 2:
            raise TooFewGroups(f"need at least 2 groups, found {len(self.groups)}")
        small = {g: c for g, c in self.counts().items() if c < min_rows}
        if small:
            raise InsufficientData(f"groups with fewer than {min_rows} rows: {small}")


def ingest_csv(path, group_col="group", x_col="x", y_col="y"):
    """Read a long-format CSV with a header row.

    Line numbers in errors count the header as line 1.
    """
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty file, expected a header row", 1) from None
        header = [h.strip() for h in header]
        missing = [c for c in (group_col, x_col, y_col) if c not in header]
        if missing:
            raise SchemaError(f"missing column(s) {missing}; header is {header}")
        gi, xi, yi = (header.index(c) for c in (group_col, x_col, y_col))
        groups, gs, xs, ys = {}, [], [], []
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ParseError(f"expected {len(header)} fields, got {len(row)}", line)
            vals = []
            for name, i in ((x_col, xi), (y_col, yi)):
                try:
                    v = float(row[i])
                except ValueError:
                    raise ParseError(f"{name} value {row[i]!r} is not a number", line) from None
                if not math.isfinite(v):
                    raise ParseError(f"{name} value {row[i]!r} is not finite", line)
                vals.append(v)
            g = row[gi].strip()
            if not g:
                raise ParseError("empty group label", line)
            groups.setdefault(g, None)
            gs.append(g)
            xs.append(vals[0])
            ys.append(vals[1])
    if len(groups) < 2:
        raise TooFewGroups(f"need at least 2 groups, found {len(groups)}")
    return Dataset(list(groups), np.array(gs, dtype=object), np.array(xs), np.array(ys))


def write_long_csv(fh, groups, xs, ys):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["group", "x", "y"])
    for g, x, y in zip(groups, xs, ys):
        w.writerow([g, fmt(x), fmt(y)])


def to_long(paths, x_col="x", y_col="y"):
    """Convert wide or multi-file input to long-format rows.

    One path: a wide file whose columns come in pairs ``x_<g>``, ``y_<g>``
    (blank cells allowed for unequal group sizes).  Several paths: each
    file holds one group with ``x_col`` and ``y_col`` columns and is
    labelled by its file stem.
    """
    rows = []
    if len(paths) == 1:
        with open(paths[0], newline="") as fh:
            reader = csv.DictReader(fh)
            cols = reader.fieldnames or []
            labels = [c[2:] for c in cols if c.startswith("x_")]
            if not labels or any(f"y_{g}" not in cols for g in labels):
                raise SchemaError("wide input needs paired x_<group> and y_<group> columns")
            for rec in reader:
                for g in labels:
                    xv, yv = rec[f"x_{g}"].strip(), rec[f"y_{g}"].strip()
                    if xv or yv:
                        rows.append((g, xv, yv, reader.line_num))
    else:
        for p in paths:
            with open(p, newline="") as fh:
                reader = csv.DictReader(fh)
                if not {x_col, y_col} <= set(reader.fieldnames or []):
                    raise SchemaError(f"{p}: needs columns {x_col!r} and {y_col!r}")
                for rec in reader:
                    rows.append((Path(p).stem, rec[x_col], rec[y_col], reader.line_num))
    out = []
    for g, xv, yv, line in rows:
        try:
            out.append((g, float(xv), float(yv)))
        except ValueError:
            raise ParseError(f"group {g}: non-numeric value", line) from None
    return out


# ------------------------------------------------------------------ reports

@dataclass
class PopulationDiagnostics:
    label: str
    n: int
    sigma_hat: float
    scale_method: str
    bandwidth: float
    omega: float
    flagged: int
    nonconverged: int
    norm_sq: float
    nu: float
    tau: float
    efficiency_ratio: float


@dataclass
class RunReport:
    method: str
    T: float
    nT: float
    p_value: float
    gammas: list
    A_diag: list
    Sigma: list
    null_quantiles: dict
    populations: list
    config: dict
    notes: list = field(default_factory=lambda: list(FIDELITY_NOTES))
    version: str = __version__

    @classmethod
    def from_result(cls, result, config):
        null = result.null
        d = null.diagnostics
        pops = []
        for j, f in enumerate(result.fits):
            pops.append(PopulationDiagnostics(
                f.sample.label, int(f.sample.n), float(f.sigma_hat.sigma), f.sigma_hat.method,
                float(result.bandwidths[j]), float(d["omega"][j]), int(f.flagged.sum()),
                int(f.n_nonconverged), float(result.per_population_norms[j]),
                float(d["nu"][j]), float(d["tau"][j]), float(d["e"][j]),
            ))
        return cls(
            result.method, float(result.T), float(result.nT), float(result.p_value),
            [float(g) for g in null.gammas], [float(a) for a in np.diag(null.A_hat)],
            [[float(v) for v in row] for row in null.Sigma_hat],
            {str(q): null.quantile(q) for q in (0.9, 0.95, 0.99)},
            pops, dict(config),
        )

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["populations"] = [PopulationDiagnostics(**p) for p in d["populations"]]
        return cls(**d)

    def to_json(self):
        # json writes floats with repr, the shortest exact round-trip form
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, allow_nan=True)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    def pretty(self):
        lines = [
            f"method: {self.method}",
            f"T = {self.T:.6g}   nT = {self.nT:.6g}   p-value = {self.p_value:.4g}",
            "gammas: " + ", ".join(f"{g:.4g}" for g in self.gammas),
            f"{'group':>10} {'n':>6} {'sigma':>9} {'h':>9} {'omega':>7} {'flag':>5} {'norm2':>10}",
        ]
        for p in self.populations:
            lines.append(f"{p.label:>10} {p.n:>6} {p.sigma_hat:>9.4g} {p.bandwidth:>9.4g} "
                         f"{p.omega:>7.3f} {p.flagged:>5} {p.norm_sq:>10.4g}")
        lines += ["notes:"] + [f"  - {n}" for n in self.notes]
        return "\n".join(lines)


# ---------------------------------------------------------- scenario files

SCHEMA_VERSION = 1

_SCENARIO_KEYS = {
    "schema_version", "models", "regressions", "contaminations", "sizes", "sigmas",
    "alpha", "replications", "seed", "bandwidth", "test", "n_draws",
    "weight_quantiles", "delta_grid", "contamination_rate", "outlier_means", "outlier_sd",
}

_FUNCS = {"sin": np.sin, "cos": np.cos, "exp": np.exp, "log": np.log,
          "sqrt": np.sqrt, "abs": np.abs, "tanh": np.tanh}
_CONSTS = {"pi": math.pi, "e": math.e}
_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}
_UNOPS = {ast.USub: operator.neg, ast.UAdd: operator.pos}


def parse_expression(text, field_name="regressions"):
    """Compile an arithmetic expression in ``x`` into a vectorised callable.

    Only numbers, ``x``, ``pi``, ``e``, + - * / ** and a few elementwise
    functions are accepted.
    """
    try:
        tree = ast.parse(text, mode="eval")
    except SyntaxError as exc:
        raise ConfigError(f"cannot parse {text!r}: {exc.msg}", field_name) from None

    def check(node):
        if isinstance(node, ast.Expression):
            return check(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return
        if isinstance(node, ast.Name) and (node.id == "x" or node.id in _CONSTS):
            return
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            check(node.left)
            check(node.right)
            return
        if isinstance(node, ast.UnaryOp) and type(node.op) in _UNOPS:
            check(node.operand)
            return
        if (isinstance(node, ast.Call) and isinstance(node.func, ast.Name)
                and node.func.id in _FUNCS and len(node.args) == 1 and not node.keywords):
            check(node.args[0])
            return
        raise ConfigError(f"unsupported element {ast.dump(node)[:40]} in {text!r}", field_name)

    check(tree)

    def ev(node, x):
        if isinstance(node, ast.Expression):
            return ev(node.body, x)
        if isinstance(node, ast.Constant):
            return node.value + 0.0 * x
        if isinstance(node, ast.Name):
            return x if node.id == "x" else _CONSTS[node.id] + 0.0 * x
        if isinstance(node, ast.BinOp):
            return _BINOPS[type(node.op)](ev(node.left, x), ev(node.right, x))
        if isinstance(node, ast.UnaryOp):
            return _UNOPS[type(node.op)](ev(node.operand, x))
        return _FUNCS[node.func.id](ev(node.args[0], x))

    def f(x):
        return ev(tree, np.asarray(x, dtype=float))

    f.expression = text
    return f


def _as_list(v):
    return v if isinstance(v, list) else [v]


def _bandwidth_from(value, field_name="bandwidth"):
    if value == "cv" or value is None:
        return BandwidthSpec.cv()
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        try:
            return BandwidthSpec.fixed(value)
        except ValidationError as exc:
            raise ConfigError(str(exc), field_name) from None
    raise ConfigError("expected 'cv' or a positive number", field_name)


@dataclass
class ScenarioFile:
    """Parsed scenario file: the cartesian product of its list-valued axes."""

    scenarios: list
    delta_grid: tuple
    raw: dict


def load_scenario(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read scenario file: {exc}") from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", exc.lineno) from None
    return parse_scenario(raw)


def parse_scenario(raw):
    if not isinstance(raw, dict):
        raise ConfigError("scenario file must hold a single object")
    unknown = sorted(set(raw) - _SCENARIO_KEYS)
    if unknown:
        raise ConfigError(f"unknown key(s) {unknown}", unknown[0])
    if raw.get("schema_version") != SCHEMA_VERSION:
        raise ConfigError(f"expected {SCHEMA_VERSION}, got {raw.get('schema_version')!r}",
                          "schema_version")
    if "models" in raw and "regressions" in raw:
        raise ConfigError("give either models or regressions, not both", "regressions")

    curves_list = [None]
    models = _as_list(raw.get("models", "M1"))
    if "regressions" in raw:
        regs = raw["regressions"]
        if not isinstance(regs, list) or len(regs) < 2:
            raise ConfigError("need one expression per population", "regressions")
        curves_list = [tuple(parse_expression(str(r), f"regressions[{i}]")
                             for i, r in enumerate(regs))]
        models = ["custom"]
    for i, m in enumerate(models):
        if m != "custom" and m not in MODELS:
            raise ConfigError(f"unknown model {m!r}", f"models[{i}]")

    conts = []
    for i, c in enumerate(_as_list(raw.get("contaminations", "C0"))):
        try:
            spec = ContaminationSpec.named(c) if c != "custom" else ContaminationSpec(
                "custom", float(raw.get("contamination_rate", 0.0)),
                tuple(raw.get("outlier_means", ())), float(raw.get("outlier_sd", 0.1)))
        except ConfigError as exc:
            raise ConfigError(str(exc), f"contaminations[{i}]") from None
        conts.append(spec)

    sizes = raw.get("sizes", [100, 100])
    sizes_list = sizes if sizes and isinstance(sizes[0], list) else [sizes]
    k_curves = len(curves_list[0]) if curves_list[0] is not None else 2
    for i, s in enumerate(sizes_list):
        if len(s) != k_curves or not all(isinstance(v, int) for v in s):
            raise ConfigError(f"need {k_curves} integer sizes", f"sizes[{i}]")

    sigmas = tuple(float(v) for v in raw.get("sigmas", DEFAULT_SIGMAS))
    wq = tuple(float(v) for v in raw.get("weight_quantiles", (0.05, 0.95)))
    if len(wq) != 2:
        raise ConfigError("expected [lo, hi]", "weight_quantiles")
    alpha = float(raw.get("alpha", 0.05))
    if not 0 < alpha < 1:
        raise ConfigError("alpha must be in (0, 1)", "alpha")
    delta = tuple(float(v) for v in raw.get("delta_grid", (0.0, 2.0, 4.0, 6.0, 8.0)))
    try:
        ContiguousSpec(delta)
    except ConfigError as exc:
        raise ConfigError(str(exc), "delta_grid") from None

    scenarios = []
    for model, cont, sz, curves in itertools.product(models, conts, sizes_list, curves_list):
        scenarios.append(ScenarioConfig(
            model=model, contamination=cont, sizes=tuple(sz), sigmas=sigmas,
            alpha=alpha, replications=int(raw.get("replications", 1000)),
            seed=int(raw.get("seed", 0)), bandwidth=_bandwidth_from(raw.get("bandwidth", "cv")),
            test=raw.get("test", BOTH), n_draws=int(raw.get("n_draws", 10_000)),
            weight_quantiles=wq, curves=curves,
        ))
    return ScenarioFile(scenarios, delta, raw)


TABLE_COLUMNS = ("contamination", "model", "sizes", "test", "delta", "frequency",
                 "failed", "replications", "outside_band")


def table_csv(table):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TABLE_COLUMNS)
    for r in table.rows:
        w.writerow([r.contamination, r.model, "x".join(str(n) for n in r.sizes), r.test,
                    "" if r.delta is None else fmt(r.delta), fmt(r.frequency),
                    r.failed, r.replications, int(r.outside_band)])
    return buf.getvalue()


def table_text(table):
    lo, hi = table.band
    lines = [f"alpha = {table.alpha}, level band [{lo:.4f}, {hi:.4f}] (* = outside)",
             f"{'cont':>5} {'model':>6} {'sizes':>9} {'test':>10} {'delta':>6} {'freq':>7}"]
    for r in table.rows:
        star = "*" if r.outside_band else " "
        d = "" if r.delta is None else f"{r.delta:g}"
        lines.append(f"{r.contamination:>5} {r.model:>6} {'x'.join(map(str, r.sizes)):>9} "
                     f"{r.test:>10} {d:>6} {r.frequency:>6.3f}{star}")
    lines += ["notes:"] + [f"  - {n}" for n in table.notes]
    return "\n".join(lines)


# ------------------------------------------------------------------ commands

def _quantiles(text):
    try:
        lo, hi = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("expected lo,hi") from None
    return lo, hi


def _bandwidth_arg(text):
    if text == "cv":
        return "cv"
    try:
        h = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError("expected 'cv' or a positive number") from None
    if not h > 0:
        raise argparse.ArgumentTypeError("bandwidth must be positive")
    return h


def _grid_arg(text):
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError("expected comma-separated numbers") from None


def _methods(method):
    return (CLASSICAL, ROBUST) if method == BOTH else (method,)


def _options(args):
    bw = BandwidthSpec.cv() if args.bandwidth == "cv" else BandwidthSpec.fixed(args.bandwidth)
    return TestOptions(bandwidth=bw, weight_quantiles=args.weight_quantiles,
                       n_draws=args.draws, seed=args.seed)


def _config_echo(args, method):
    return {"method": method, "seed": args.seed, "draws": args.draws,
            "bandwidth": args.bandwidth, "weight_quantiles": list(args.weight_quantiles),
            "weight_kind": INDICATOR, "integration_weight": "normal", "rho": "tukey 4.685",
            "input": str(args.data)}


def _out_dir(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load(args):
    ds = ingest_csv(args.data, args.group_col, args.x_col, args.y_col)
    ds.check_testable()
    return ds


def cmd_test(args):
    ds = _load(args)
    samples = ds.samples()
    opts = _options(args)
    reports = []
    for m in _methods(args.method):
        res = compare_curves(samples, m, opts)
        reports.append(RunReport.from_result(res, _config_echo(args, m)))
    out = _out_dir(args)
    payload = {"reports": [r.to_dict() for r in reports]}
    (out / "report.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    print("\n\n".join(r.pretty() for r in reports))
    return reports


def cmd_bandwidth(args):
    ds = _load(args)
    out = _out_dir(args)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["group", "method", "h", "criterion", "eligible", "selected"])
    for m in _methods(args.method):
        for s in ds.samples():
            grid = default_grid(s.x) if args.grid is None else np.asarray(args.grid)
            sig = diff_median_scale(s) if m == ROBUST else None
            vals, ok = cv_curve(s, grid, m, RhoFunction.tukey(), sig)
            if not ok.any():
                best = -1
            else:
                best = int(np.argmin(vals))
            for i, (h, v, e) in enumerate(zip(grid, vals, ok)):
                w.writerow([s.label, m, fmt(h), fmt(v), int(e), int(i == best)])
            msg = f"{s.label} {m}: h = {grid[best]:.6g}" if best >= 0 else \
                f"{s.label} {m}: no eligible bandwidth"
            print(msg)
    (out / "bandwidth.csv").write_text(buf.getvalue())


def power_surface(samples, method, grid1, grid2, options):
    """p-value for every pair of fixed bandwidths (rows: grid1, columns: grid2)."""
    if len(samples) != 2:
        raise ValidationError("power surface needs exactly two groups")
    P = np.empty((len(grid1), len(grid2)))
    for a, h1 in enumerate(grid1):
        for b, h2 in enumerate(grid2):
            o = replace(options, bandwidth=[BandwidthSpec.fixed(h1), BandwidthSpec.fixed(h2)])
            P[a, b] = compare_curves(samples, method, o).p_value
    return P


def surface_csv(P, grid1, grid2):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["h1\\h2"] + [fmt(h) for h in grid2])
    for h, row in zip(grid1, P):
        w.writerow([fmt(h)] + [fmt(v) for v in row])
    return buf.getvalue()


def cmd_power_surface(args):
    ds = _load(args)
    method = ROBUST if args.method == BOTH else args.method
    P = power_surface(ds.samples(), method, args.h1, args.h2, _options(args))
    out = _out_dir(args)
    (out / "surface.csv").write_text(surface_csv(P, args.h1, args.h2))
    print(surface_csv(P, args.h1, args.h2), end="")
    return P


def _override(sc, args):
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.alpha is not None:
        changes["alpha"] = args.alpha
    if args.replications is not None:
        changes["replications"] = args.replications
    if args.method is not None:
        changes["test"] = args.method
    if args.bandwidth is not None:
        changes["bandwidth"] = _bandwidth_from(args.bandwidth)
    return replace(sc, **changes) if changes else sc


def _run_table(args, contiguous):
    sf = load_scenario(args.scenario)
    table = None
    for sc in sf.scenarios:
        sc = _override(sc, args)
        if contiguous:
            t = run_contiguous(sc, ContiguousSpec(sf.delta_grid), n_jobs=args.jobs)
        else:
            t = run_level_power(sc, n_jobs=args.jobs)
        table = t if table is None else table.extend(t)
    out = _out_dir(args)
    (out / "table.csv").write_text(table_csv(table))
    print(table_text(table))
    return table


def cmd_simulate(args):
    return _run_table(args, contiguous=False)


def cmd_contiguous(args):
    return _run_table(args, contiguous=True)


def cmd_to_long(args):
    rows = to_long(args.files, args.x_col, args.y_col)
    target = open(args.output, "w", newline="") if args.output else sys.stdout
    try:
        write_long_csv(target, *zip(*rows))
    finally:
        if args.output:
            target.close()


def build_parser():
    p = argparse.ArgumentParser(prog="robust-ecf", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def data_cmd(name, func, helptext):
        s = sub.add_parser(name, help=helptext)
        s.add_argument("data", help="long-format CSV with group, x, y columns")
        s.add_argument("--group-col", default="group")
        s.add_argument("--x-col", default="x")
        s.add_argument("--y-col", default="y")
        s.add_argument("--method", choices=(CLASSICAL, ROBUST, BOTH), default=ROBUST)
        s.add_argument("--seed", type=int, default=0)
        s.add_argument("--draws", type=int, default=10_000)
        s.add_argument("--weight-quantiles", type=_quantiles, default=(0.05, 0.95))
        s.add_argument("--bandwidth", type=_bandwidth_arg, default="cv")
        s.add_argument("--out", default=".")
        s.set_defaults(func=func)
        return s

    data_cmd("test", cmd_test, "run the test")
    b = data_cmd("bandwidth", cmd_bandwidth, "cross-validation curves")
    b.add_argument("--grid", type=_grid_arg, default=None)
    ps = data_cmd("power-surface", cmd_power_surface, "p-values over a bandwidth grid")
    ps.add_argument("--h1", type=_grid_arg, required=True)
    ps.add_argument("--h2", type=_grid_arg, required=True)

    for name, func in (("simulate", cmd_simulate), ("contiguous", cmd_contiguous)):
        s = sub.add_parser(name, help=f"{name} study from a scenario file")
        s.add_argument("scenario")
        s.add_argument("--method", choices=(CLASSICAL, ROBUST, BOTH), default=None)
        s.add_argument("--seed", type=int, default=None)
        s.add_argument("--alpha", type=float, default=None)
        s.add_argument("--replications", type=int, default=None)
        s.add_argument("--bandwidth", type=_bandwidth_arg, default=None)
        s.add_argument("--jobs", type=int, default=1)
        s.add_argument("--out", default=".")
        s.set_defaults(func=func)

    t = sub.add_parser("to-long", help="convert wide or per-group files to long format")
    t.add_argument("files", nargs="+")
    t.add_argument("--x-col", default="x")
    t.add_argument("--y-col", default="y")
    t.add_argument("-o", "--output", default=None)
    t.set_defaults(func=cmd_to_long)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (NumericalError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
