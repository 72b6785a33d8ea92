"""Scenario definitions: JSON documents describing a submersion, bundle and checks."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .direct_image import HermitianBundle, Section, levi_civita_bundle
from .expr_core import ComplexExpr, Expr, ParseError, ZERO, parse
from .fiber_quad import AxisSpec, FiberChart
from .geometry import Metric, VectorField
from .submersion import Submersion
from .trivialization import BundleTrivialization


class ConfigError(ValueError):
    """Invalid scenario document; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class ScenarioNotFound(LookupError):
    pass


@dataclass
class CoareaSpec:
    f: Expr
    base_box: list
    chart: FiberChart | None = None
    region: tuple | None = None
    expected: float | None = None


@dataclass
class Scenario:
    """A fully parsed and validated scenario."""

    name: str
    m: int
    k: int
    metric: Metric
    submersion: Submersion
    chart: FiberChart
    bundle: HermitianBundle
    sections: list
    test_functions: list
    base_fields: list
    lambda_grid: list
    quad_order: int = 16
    tolerances: dict = field(default_factory=dict)
    trivialization: BundleTrivialization | None = None
    coarea: CoareaSpec | None = None
    expected: dict = field(default_factory=dict)
    negative_control: bool = False
    support_factor: Expr | None = None
    transition_gauge: float | None = None
    levi_civita: bool = False
    seed: int = 0
    source: dict = field(default_factory=dict, repr=False)


# parsing helpers ----------------------------------------------------------------

class _Ctx:
    def __init__(self, doc):
        self.doc = doc

    @staticmethod
    def require(d, key, path):
        if not isinstance(d, dict):
            raise ConfigError(path, "expected an object")
        if key not in d:
            raise ConfigError(f"{path}.{key}" if path else key, "missing required field")
        return d[key]


def _expr(src, path, x=0, l=0, t=0) -> Expr:
    if isinstance(src, (int, float)) and not isinstance(src, bool):
        src = repr(float(src))
    if not isinstance(src, str):
        raise ConfigError(path, "expected an expression string")
    try:
        return parse(src, ambient_dim=x, base_dim=l, fiber_dim=t)
    except ParseError as e:
        raise ConfigError(path, str(e)) from None


def _cexpr(src, path, **dims) -> ComplexExpr:
    if isinstance(src, dict):
        unknown = set(src) - {"re", "im"}
        if unknown:
            raise ConfigError(path, f"unknown keys {sorted(unknown)}")
        re = _expr(src.get("re", "0"), f"{path}.re", **dims)
        im = _expr(src.get("im", "0"), f"{path}.im", **dims)
        return ComplexExpr(re, im)
    return ComplexExpr(_expr(src, path, **dims), ZERO)


def _int(v, path, lo=None):
    if not isinstance(v, int) or isinstance(v, bool):
        raise ConfigError(path, "expected an integer")
    if lo is not None and v < lo:
        raise ConfigError(path, f"must be at least {lo}")
    return v


def _number(v, path):
    if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(v):
        raise ConfigError(path, "expected a finite number")
    return float(v)


def _list(v, path, n=None):
    if not isinstance(v, list):
        raise ConfigError(path, "expected an array")
    if n is not None and len(v) != n:
        raise ConfigError(path, f"expected {n} entries, found {len(v)}")
    return v


def _metric(spec, dim, kind, path) -> Metric:
    dims = {"x": dim} if kind == "x" else {"l": dim}
    if spec == "euclidean":
        return Metric.euclidean(dim, kind)
    if isinstance(spec, dict) and "conformal" in spec:
        return Metric.conformal(_expr(spec["conformal"], f"{path}.conformal", **dims), dim, kind)
    rows = _list(spec, path, dim)
    entries = [[_expr(e, f"{path}[{i}][{j}]", **dims) for j, e in enumerate(_list(r, f"{path}[{i}]", dim))]
               for i, r in enumerate(rows)]
    try:
        return Metric(entries, kind)
    except ValueError as e:
        raise ConfigError(path, str(e)) from None


def _axes(spec, path, n=None):
    out = []
    for i, ax in enumerate(_list(spec, path, n)):
        p = f"{path}[{i}]"
        if not isinstance(ax, dict):
            raise ConfigError(p, "expected {\"interval\": [a, b]} or {\"periodic\": true}")
        if "interval" in ax:
            a, b = _list(ax["interval"], f"{p}.interval", 2)
            a, b = _number(a, f"{p}.interval[0]"), _number(b, f"{p}.interval[1]")
            if not b > a:
                raise ConfigError(f"{p}.interval", "must satisfy a < b")
            out.append(AxisSpec.interval(a, b))
        elif ax.get("periodic") is True:
            out.append(AxisSpec.periodic(_number(ax.get("start", 0.0), f"{p}.start")))
        else:
            raise ConfigError(p, "expected {\"interval\": [a, b]} or {\"periodic\": true}")
    return out


def _chart(spec, m, k, path) -> FiberChart:
    mp = _list(_Ctx.require(spec, "map", path), f"{path}.map", m)
    domain = _axes(_Ctx.require(spec, "domain", path), f"{path}.domain", m - k)
    exprs = [_expr(e, f"{path}.map[{i}]", l=k, t=m - k) for i, e in enumerate(mp)]
    return FiberChart(exprs, domain)


def _section(spec, rank, m, path) -> Section:
    comps = _list(spec, path, rank)
    return Section(tuple(_cexpr(c, f"{path}[{a}]", x=m) for a, c in enumerate(comps)))


def _lam(v, k, path):
    if isinstance(v, list):
        _list(v, path, k)
        return [_number(a, f"{path}[{i}]") for i, a in enumerate(v)]
    if k != 1:
        raise ConfigError(path, f"expected a base point with {k} coordinates")
    return [_number(v, path)]


_KNOWN = {
    "name", "ambient_dim", "base_dim", "metric", "base_metric", "rho", "fiber_chart", "bundle",
    "trivialization", "sections", "test_functions", "base_fields", "lambda_grid", "quad_order",
    "tolerances", "coarea", "expected", "negative_control", "support_factor", "transition_gauge",
    "seed", "description",
}


def build_scenario(doc: dict) -> Scenario:
    """Validate a scenario document and parse every expression eagerly.

    Raises
    ------
    ConfigError
        With the dotted path of the offending field.
    """
    if not isinstance(doc, dict):
        raise ConfigError("", "scenario document must be a JSON object")
    unknown = set(doc) - _KNOWN
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown top-level field")
    req = _Ctx.require
    name = req(doc, "name", "")
    if not isinstance(name, str) or not name:
        raise ConfigError("name", "expected a non-empty string")
    m = _int(req(doc, "ambient_dim", ""), "ambient_dim", 2)
    k = _int(req(doc, "base_dim", ""), "base_dim", 1)
    if k >= m:
        raise ConfigError("base_dim", "must be smaller than ambient_dim")
    g = _metric(req(doc, "metric", ""), m, "x", "metric")
    zeta = _metric(doc.get("base_metric", "euclidean"), k, "l", "base_metric")
    rho = [_expr(e, f"rho[{i}]", x=m) for i, e in enumerate(_list(req(doc, "rho", ""), "rho", k))]
    S = Submersion(rho, g, zeta)
    chart = _chart(req(doc, "fiber_chart", ""), m, k, "fiber_chart")

    bspec = doc.get("bundle", {"rank": 1})
    if not isinstance(bspec, dict):
        raise ConfigError("bundle", "expected an object")
    levi = bool(bspec.get("levi_civita", False))
    if levi:
        try:
            bundle = levi_civita_bundle(g)
        except ValueError as e:
            raise ConfigError("bundle.levi_civita", str(e)) from None
    else:
        rank = _int(req(bspec, "rank", "bundle"), "bundle.rank", 1)
        conn = bspec.get("connection")
        if conn is None:
            bundle = HermitianBundle.flat(rank, m)
        else:
            mats = []
            for i, mat in enumerate(_list(conn, "bundle.connection", m)):
                p = f"bundle.connection[{i}]"
                rows = _list(mat, p, rank)
                mats.append([[_cexpr(e, f"{p}[{a}][{b}]", x=m) for b, e in enumerate(_list(r, f"{p}[{a}]", rank))]
                             for a, r in enumerate(rows)])
            bundle = HermitianBundle(rank, mats)

    sections = [_section(s, bundle.rank, m, f"sections[{i}]")
                for i, s in enumerate(_list(doc.get("sections", []), "sections"))]
    tests = [_expr(e, f"test_functions[{i}]", x=m)
             for i, e in enumerate(_list(doc.get("test_functions", []), "test_functions"))]
    if "base_fields" in doc:
        fields = []
        for i, f in enumerate(_list(doc["base_fields"], "base_fields")):
            comps = [_expr(e, f"base_fields[{i}][{a}]", l=k) for a, e in enumerate(_list(f, f"base_fields[{i}]", k))]
            fields.append(VectorField(tuple(comps), "l"))
    else:
        fields = [VectorField.coordinate(a, k, "l") for a in range(k)]
    grid = [_lam(v, k, f"lambda_grid[{i}]") for i, v in enumerate(_list(req(doc, "lambda_grid", ""), "lambda_grid"))]
    if not grid:
        raise ConfigError("lambda_grid", "must contain at least one base point")
    quad = _int(doc.get("quad_order", 16), "quad_order", 2)
    tols = doc.get("tolerances", {})
    if not isinstance(tols, dict):
        raise ConfigError("tolerances", "expected an object")
    tols = {key: _number(v, f"tolerances.{key}") for key, v in tols.items()}

    triv = None
    if "trivialization" in doc:
        tspec = doc["trivialization"]
        if not isinstance(tspec, dict):
            raise ConfigError("trivialization", "expected an object")
        if "phi_inverse" in tspec:
            mp = _list(tspec["phi_inverse"], "trivialization.phi_inverse", m)
            exprs = [_expr(e, f"trivialization.phi_inverse[{i}]", l=k, t=m - k) for i, e in enumerate(mp)]
            tchart = FiberChart(exprs, chart.domain)
        else:
            tchart = chart
        vol = _expr(tspec.get("k_volume", "1"), "trivialization.k_volume", t=m - k)
        triv = BundleTrivialization(tchart, vol)

    coarea = None
    if "coarea" in doc:
        c = doc["coarea"]
        f = _expr(req(c, "f", "coarea"), "coarea.f", x=m)
        box = [[_number(a, f"coarea.base_box[{i}][0]"), _number(b, f"coarea.base_box[{i}][1]")]
               for i, (a, b) in enumerate(_list(req(c, "base_box", "coarea"), "coarea.base_box", k))]
        cchart = _chart(c["fiber_chart"], m, k, "coarea.fiber_chart") if "fiber_chart" in c else None
        region = None
        if "region" in c:
            r = c["region"]
            mp = _list(req(r, "map", "coarea.region"), "coarea.region.map", m)
            region = ([_expr(e, f"coarea.region.map[{i}]", t=m) for i, e in enumerate(mp)],
                      _axes(req(r, "domain", "coarea.region"), "coarea.region.domain", m))
        expected = _number(c["expected"], "coarea.expected") if "expected" in c else None
        coarea = CoareaSpec(f, box, cchart, region, expected)

    support = _expr(doc["support_factor"], "support_factor", x=m) if "support_factor" in doc else None
    gauge = _number(doc["transition_gauge"], "transition_gauge") if "transition_gauge" in doc else None
    expected = doc.get("expected", {})
    if not isinstance(expected, dict):
        raise ConfigError("expected", "expected an object")
    return Scenario(
        name=name, m=m, k=k, metric=g, submersion=S, chart=chart, bundle=bundle,
        sections=sections, test_functions=tests, base_fields=fields, lambda_grid=grid,
        quad_order=quad, tolerances=tols, trivialization=triv, coarea=coarea,
        expected=expected, negative_control=bool(doc.get("negative_control", False)),
        support_factor=support, transition_gauge=gauge, levi_civita=levi,
        seed=_int(doc.get("seed", 0), "seed", 0), source=doc,
    )


def load_scenario(path) -> Scenario:
    """Read and validate a scenario file (UTF-8 JSON)."""
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError("", f"cannot read {p}: {e.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError("", f"invalid JSON at line {e.lineno} column {e.colno}: {e.msg}") from None
    return build_scenario(doc)


BUILTIN_NAMES = (
    "sphere2", "sphere3", "linear_projection", "conformal_sphere",
    "rank2_bundle", "two_component", "levi_civita_flatish", "twisted_rank2",
)


def builtin_document(name: str) -> dict:
    if name not in BUILTIN_NAMES:
        raise ScenarioNotFound(f"scenario not found: {name}")
    text = resources.files("rdi.scenarios").joinpath(f"{name}.json").read_text(encoding="utf-8")
    return json.loads(text)


def get_scenario(name: str) -> Scenario:
    return build_scenario(builtin_document(name))
