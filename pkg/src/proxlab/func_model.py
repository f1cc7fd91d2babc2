"""Function representations, sampling and the descriptor format.

Extended-real convention: values live in ]-inf, +inf]; +inf is encoded as
the IEEE infinity (never a large finite float) and -inf is rejected at
every construction site.  With that convention ordinary float arithmetic
already implements the required rules (+inf + r = +inf, min(+inf, r) = r,
total comparisons).
"""

import math
from dataclasses import dataclass, field

import numpy as np
import yaml

from .errors import (
    AllInfinite,
    DegreeTooHigh,
    NotProxBounded,
    ParseError,
    UnknownBuiltin,
)

_INF = math.inf

# Maximum polynomial degree for piecewise pieces; covers every fixture
# while keeping exact root-based solvers available.
MAX_DEGREE = 4


def parse_ext(value):
    """Parse an extended real from YAML scalars ('inf' literal allowed)."""
    if isinstance(value, str):
        if value.strip().lower() in ("inf", "+inf", ".inf"):
            return _INF
        raise ParseError(f"expected a number or 'inf', got {value!r}")
    v = float(value)
    if v == -_INF or math.isnan(v):
        raise ParseError(f"value {value!r} is outside ]-inf, +inf]")
    return v


def format_ext(value):
    """Shortest round-trip text for an extended real ('inf' for +infinity)."""
    return "inf" if value == _INF else repr(float(value))


# ---------------------------------------------------------------------------
# grids
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GridSpec:
    """Uniform 1-D or 2-D grid: per-axis closed interval and node count."""

    dim: int
    lower: tuple
    upper: tuple
    points_per_axis: tuple

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError("grids are limited to dim 1 or 2")
        for name in ("lower", "upper", "points_per_axis"):
            vals = getattr(self, name)
            if len(vals) != self.dim:
                raise ValueError(f"{name} must have {self.dim} entries")
        for lo, up in zip(self.lower, self.upper):
            if not lo < up:
                raise ValueError("lower < upper required per axis")
        for n in self.points_per_axis:
            if int(n) != n or n < 3:
                raise ValueError("points_per_axis entries must be integers >= 3")

    @classmethod
    def make(cls, lower, upper, points):
        """Build from scalars (1-D) or sequences (2-D)."""
        if np.isscalar(lower):
            lower, upper, points = (lower,), (upper,), (points,)
        lower = tuple(float(v) for v in lower)
        upper = tuple(float(v) for v in upper)
        points = tuple(int(v) for v in points)
        return cls(len(lower), lower, upper, points)

    @property
    def steps(self):
        return tuple((u - l) / (n - 1) for l, u, n
                     in zip(self.lower, self.upper, self.points_per_axis))

    def axis_nodes(self, axis):
        """Node coordinates lower + i*h; the canonical formula everywhere."""
        h = self.steps[axis]
        return self.lower[axis] + np.arange(self.points_per_axis[axis]) * h

    def shape(self):
        return self.points_per_axis

    @property
    def size(self):
        return int(np.prod(self.points_per_axis))

    def node(self, index):
        """Coordinates of a (multi-)index; float in 1-D, tuple in 2-D."""
        if self.dim == 1:
            return float(self.axis_nodes(0)[index if np.isscalar(index) else index[0]])
        i, j = index
        return (float(self.axis_nodes(0)[i]), float(self.axis_nodes(1)[j]))

    def index_of(self, x, tol=1e-9):
        """Multi-index of the node nearest to x; None when off-grid."""
        coords = (x,) if self.dim == 1 and np.isscalar(x) else tuple(x)
        if len(coords) != self.dim:
            raise ValueError("point dimension does not match the grid")
        idx = []
        for axis, c in enumerate(coords):
            h = self.steps[axis]
            t = (c - self.lower[axis]) / h
            k = int(round(t))
            if k < 0 or k >= self.points_per_axis[axis] or abs(t - k) > tol:
                return None
            idx.append(k)
        return tuple(idx)

    def meshgrid(self):
        if self.dim == 1:
            return (self.axis_nodes(0),)
        return np.meshgrid(self.axis_nodes(0), self.axis_nodes(1), indexing="ij")


def _check_values(values):
    if np.isneginf(values).any():
        raise ValueError("-inf is not representable in a grid function")
    if np.isnan(values).any():
        raise ValueError("NaN is not representable in a grid function")
    if not np.isfinite(values).any():
        raise AllInfinite("grid function has no finite value")


@dataclass(frozen=True)
class GridFunction:
    """Extended-real values sampled on a uniform grid.

    ``threshold`` records the prox-boundedness bound the transforms
    validate against; ``threshold_is_heuristic`` marks bounds that were
    estimated from samples rather than derived exactly.
    """

    spec: GridSpec
    values: np.ndarray
    label: str = ""
    threshold: float = _INF
    threshold_is_heuristic: bool = False

    def __post_init__(self):
        arr = np.ascontiguousarray(self.values, dtype=np.float64)
        if arr.shape != self.spec.shape():
            raise ValueError(f"values shape {arr.shape} does not match grid "
                             f"{self.spec.shape()}")
        _check_values(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)
        if not self.threshold > 0:
            raise ValueError("threshold must be positive")

    def with_values(self, values, label=None, threshold=None, heuristic=None):
        return GridFunction(
            self.spec,
            np.asarray(values, dtype=np.float64),
            self.label if label is None else label,
            self.threshold if threshold is None else threshold,
            self.threshold_is_heuristic if heuristic is None else heuristic,
        )

    def value_at(self, index):
        return float(self.values[index])

    def finite_mask(self):
        return np.isfinite(self.values)

    def negated(self, label=None, threshold=None):
        """-f; only defined when f is finite everywhere (envelopes are)."""
        if not np.isfinite(self.values).all():
            raise ValueError("cannot negate a grid function with +inf values")
        return GridFunction(self.spec, -self.values,
                            label or f"-({self.label})",
                            _INF if threshold is None else threshold)


# ---------------------------------------------------------------------------
# concrete function payloads
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QuadraticFunction:
    """q_A(x) = 0.5 <x, Ax> for a symmetric matrix A (symmetrized on input)."""

    A: tuple

    def __post_init__(self):
        arr = np.asarray(self.A, dtype=np.float64)
        if arr.ndim == 0:
            arr = arr.reshape(1, 1)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError("A must be a square matrix")
        arr = 0.5 * (arr + arr.T)
        object.__setattr__(self, "A", tuple(tuple(float(v) for v in row) for row in arr))

    @property
    def matrix(self):
        return np.asarray(self.A, dtype=np.float64)

    @property
    def dim(self):
        return len(self.A)

    def __call__(self, x):
        xv = np.atleast_1d(np.asarray(x, dtype=np.float64))
        return 0.5 * float(xv @ self.matrix @ xv)


def _poly_coeffs(coeffs):
    if coeffs is None:
        return None
    out = tuple(float(c) for c in coeffs)
    if len(out) == 0:
        out = (0.0,)
    if len(out) > MAX_DEGREE + 1:
        raise DegreeTooHigh(len(out) - 1)
    return out


def polyval(coeffs, x):
    """Horner evaluation with ascending coefficients; shared by the scalar
    and the vectorized path so sampled values reproduce bit-exactly."""
    return np.polynomial.polynomial.polyval(x, np.asarray(coeffs, dtype=np.float64))


@dataclass(frozen=True)
class Piecewise1D:
    """Piecewise polynomial on the line, lsc by convention at breakpoints.

    ``pieces[i]`` covers (breakpoints[i], breakpoints[i+1]); the tails cover
    the two unbounded sides.  A ``None`` piece means +inf there.  At a
    breakpoint the value is the min of the two adjacent pieces, which keeps
    sampled functions lower semicontinuous even when the formulas disagree.
    """

    breakpoints: tuple
    pieces: tuple
    left_tail: tuple = (0.0,)
    right_tail: tuple = (0.0,)

    def __post_init__(self):
        bps = tuple(float(b) for b in self.breakpoints)
        if len(bps) < 1:
            raise ValueError("at least one breakpoint required")
        if any(b2 <= b1 for b1, b2 in zip(bps, bps[1:])):
            raise ValueError("breakpoints must be strictly increasing")
        pieces = tuple(_poly_coeffs(p) for p in self.pieces)
        if len(pieces) != len(bps) - 1:
            raise ValueError("need exactly len(breakpoints)-1 interior pieces")
        object.__setattr__(self, "breakpoints", bps)
        object.__setattr__(self, "pieces", pieces)
        object.__setattr__(self, "left_tail", _poly_coeffs(self.left_tail))
        object.__setattr__(self, "right_tail", _poly_coeffs(self.right_tail))

    def piece_at(self, region):
        """Piece coefficients for region index -1 (left tail), 0..k-2
        (interior), k-1 (right tail)."""
        if region < 0:
            return self.left_tail
        if region >= len(self.pieces):
            return self.right_tail
        return self.pieces[region]

    def regions(self):
        """(lo, hi, coeffs) triples including unbounded tails."""
        out = [(-_INF, self.breakpoints[0], self.left_tail)]
        for i, piece in enumerate(self.pieces):
            out.append((self.breakpoints[i], self.breakpoints[i + 1], piece))
        out.append((self.breakpoints[-1], _INF, self.right_tail))
        return out

    def __call__(self, x):
        x = float(x)
        bps = self.breakpoints
        for i, b in enumerate(bps):
            if x == b:
                left = self.piece_at(i - 1)
                right = self.piece_at(i)
                lv = _INF if left is None else float(polyval(left, x))
                rv = _INF if right is None else float(polyval(right, x))
                return min(lv, rv)
        if x < bps[0]:
            coeffs = self.left_tail
        elif x > bps[-1]:
            coeffs = self.right_tail
        else:
            i = int(np.searchsorted(bps, x)) - 1
            coeffs = self.pieces[i]
        return _INF if coeffs is None else float(polyval(coeffs, x))


@dataclass(frozen=True)
class IndicatorPoint:
    """0 at one point, +inf elsewhere."""

    point: tuple

    def __post_init__(self):
        pt = (self.point,) if np.isscalar(self.point) else tuple(self.point)
        object.__setattr__(self, "point", tuple(float(v) for v in pt))

    def __call__(self, x):
        coords = (x,) if np.isscalar(x) else tuple(x)
        if len(coords) != len(self.point):
            raise ValueError("point dimension mismatch")
        scale = 1.0 + max(abs(p) for p in self.point)
        if all(abs(c - p) <= 1e-12 * scale for c, p in zip(coords, self.point)):
            return 0.0
        return _INF


@dataclass(frozen=True)
class SampleArray:
    """Raw samples on their own grid (opaque black-box data)."""

    spec: GridSpec
    values: tuple

    def __post_init__(self):
        flat = tuple(parse_ext(v) for v in self.values)
        if len(flat) != self.spec.size:
            raise ValueError("values length must equal the grid size")
        object.__setattr__(self, "values", flat)

    def array(self):
        return np.asarray(self.values, dtype=np.float64).reshape(self.spec.shape())


@dataclass(frozen=True)
class Builtin:
    """Reference to a named fixture with its parameters."""

    name: str
    params: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "params",
                           tuple(sorted((str(k), v) for k, v in dict(self.params).items())))

    def param_dict(self):
        return dict(self.params)


@dataclass(frozen=True)
class FunctionDescriptor:
    """Declarative description of a function plus a declared
    prox-boundedness threshold (a number, inf, or 'auto').

    Parseable kinds are quadratic | piecewise1d | samples | builtin; the
    extra internal kind 'indicator' is the resolution target of the
    indicator_point builtin.
    """

    kind: str
    payload: object
    declared_threshold: object = "auto"

    _KINDS = ("quadratic", "piecewise1d", "samples", "builtin", "indicator")

    def __post_init__(self):
        if self.kind not in self._KINDS:
            raise ValueError(f"unknown descriptor kind {self.kind!r}")
        if self.declared_threshold != "auto":
            thr = parse_ext(self.declared_threshold)
            if not thr > 0:
                raise ValueError("declared_threshold must be positive")
            object.__setattr__(self, "declared_threshold", thr)

    def resolve(self):
        """Concrete descriptor with builtin references expanded."""
        if self.kind != "builtin":
            return self
        return resolve_builtin(self.payload.name, self.payload.param_dict(),
                               self.declared_threshold)


# ---------------------------------------------------------------------------
# builtin fixture registry
# ---------------------------------------------------------------------------

def _fk_descriptor(eps):
    eps = float(eps)
    if eps <= 0:
        raise ValueError("fk requires eps > 0")
    c = 1.0 + eps
    pw = Piecewise1D((-1.0, 1.0), ((c, 0.0, -c),), (0.0,), (0.0,))
    return FunctionDescriptor("piecewise1d", pw, _INF)


def _section10_g():
    pw = Piecewise1D(
        (-1.0, 0.0, 1.0),
        ((1.0, -1.0, -2.0), (1.0, 1.0, -2.0)),
        (0.0,),
        (0.0,),
    )
    return FunctionDescriptor("piecewise1d", pw, _INF)


def _double_well():
    pw = Piecewise1D((0.0,), (), (1.0, 2.0, 1.0), (1.0, -2.0, 1.0))
    return FunctionDescriptor("piecewise1d", pw, _INF)


def resolve_builtin(name, params=None, declared_threshold="auto"):
    params = dict(params or {})
    if name == "fk":
        desc = _fk_descriptor(params.pop("eps", 0.5))
    elif name == "section10_g":
        desc = _section10_g()
    elif name == "neg_half_sq":
        desc = FunctionDescriptor("quadratic", QuadraticFunction(((-1.0,),)), 1.0)
    elif name == "indicator_point":
        desc = FunctionDescriptor("indicator",
                                  IndicatorPoint(params.pop("point", 0.0)), _INF)
    elif name == "double_well":
        desc = _double_well()
    else:
        raise UnknownBuiltin(name)
    if params:
        raise ParseError(f"unexpected parameters for builtin {name!r}: "
                         f"{sorted(params)}")
    if declared_threshold != "auto":
        desc = FunctionDescriptor(desc.kind, desc.payload, declared_threshold)
    return desc


BUILTIN_NAMES = ("fk", "section10_g", "neg_half_sq", "indicator_point", "double_well")


def builtin_descriptor(name, **params):
    """Convenience constructor for a builtin reference descriptor."""
    return FunctionDescriptor("builtin", Builtin(name, tuple(params.items())))


# ---------------------------------------------------------------------------
# evaluation and sampling
# ---------------------------------------------------------------------------

def evaluate(descriptor, x):
    """Pointwise value of the described function (total on descriptors).

    For Piecewise1D at a breakpoint this returns the min of the adjacent
    pieces (the lsc convention).
    """
    desc = descriptor.resolve()
    if desc.kind == "quadratic":
        return desc.payload(x)
    if desc.kind == "piecewise1d":
        if not np.isscalar(x):
            x = tuple(x)
            if len(x) != 1:
                raise ValueError("piecewise1d functions are one-dimensional")
            x = x[0]
        return desc.payload(float(x))
    if desc.kind == "indicator":
        return desc.payload(x)
    if desc.kind == "samples":
        idx = desc.payload.spec.index_of(x)
        if idx is None:
            raise ValueError("samples functions evaluate at their own grid "
                             "nodes only")
        return float(desc.payload.array()[idx])
    raise AssertionError("unreachable")


def sample_to_grid(descriptor, spec, label=None):
    """Evaluate a descriptor at every node of ``spec``.

    Sampling calls the same scalar evaluator used by :func:`evaluate`, so
    stored values reproduce pointwise evaluation bit-exactly.
    """
    desc = descriptor.resolve()
    if desc.kind == "piecewise1d" and spec.dim != 1:
        raise ValueError("piecewise1d functions are one-dimensional")
    values = np.empty(spec.shape(), dtype=np.float64)
    if spec.dim == 1:
        xs = spec.axis_nodes(0)
        for i, x in enumerate(xs):
            values[i] = evaluate(desc, float(x))
    else:
        xs, ys = spec.axis_nodes(0), spec.axis_nodes(1)
        for i, x in enumerate(xs):
            for j, y in enumerate(ys):
                values[i, j] = evaluate(desc, (float(x), float(y)))
    threshold, heuristic = _threshold_with_flag(desc)
    if label is None:
        label = _default_label(descriptor)
    return GridFunction(spec, values, label, threshold, heuristic)


def _default_label(descriptor):
    if descriptor.kind == "builtin":
        params = descriptor.payload.param_dict()
        inner = ", ".join(f"{k}={v}" for k, v in params.items())
        return f"{descriptor.payload.name}({inner})"
    return descriptor.kind


# ---------------------------------------------------------------------------
# prox-boundedness thresholds
# ---------------------------------------------------------------------------

def _poly_degree(coeffs):
    deg = 0
    for i, c in enumerate(coeffs):
        if c != 0.0:
            deg = i
    return deg


def _tail_threshold(coeffs, side):
    """Threshold contribution of one unbounded polynomial tail.

    side = -1 for the left tail (x -> -inf), +1 for the right.
    """
    if coeffs is None:
        return _INF
    deg = _poly_degree(coeffs)
    lead = coeffs[deg]
    if deg <= 1:
        return _INF
    if deg == 2:
        return _INF if lead >= 0.0 else 1.0 / (-2.0 * lead)
    limit_sign = lead if side > 0 else lead * ((-1.0) ** deg)
    if limit_sign > 0:
        return _INF
    raise NotProxBounded(
        f"tail of degree {deg} decreases faster than every quadratic")


def _samples_threshold(sample, declared):
    if declared != "auto":
        return float(declared), False
    spec = sample.spec
    arr = sample.array()
    if spec.dim == 1:
        scans = [(arr[None, :], spec.steps[0])]
    else:
        scans = [(arr.T, spec.steps[0]), (arr, spec.steps[1])]
    worst = 0.0
    for a, h in scans:
        n = a.shape[-1]
        window = max(4, n // 10)
        quot = (a[:, 2:] - 2.0 * a[:, 1:-1] + a[:, :-2]) / (h * h)
        quot = np.where(np.isfinite(quot), quot, _INF)
        tails = np.concatenate([quot[:, :window], quot[:, -window:]], axis=1)
        finite = tails[np.isfinite(tails)]
        if finite.size:
            worst = min(worst, float(finite.min()))
    return (_INF if worst >= 0.0 else 1.0 / (-worst)), True


def _threshold_with_flag(desc):
    desc = desc.resolve()
    if desc.kind == "quadratic":
        evals = np.linalg.eigvalsh(desc.payload.matrix)
        lam_min = float(evals[0])
        return (_INF if lam_min >= 0.0 else 1.0 / (-lam_min)), False
    if desc.kind == "piecewise1d":
        pw = desc.payload
        left = _tail_threshold(pw.left_tail, -1)
        right = _tail_threshold(pw.right_tail, +1)
        return min(left, right), False
    if desc.kind == "indicator":
        return _INF, False
    if desc.kind == "samples":
        return _samples_threshold(desc.payload, desc.declared_threshold)
    raise AssertionError("unreachable")


def prox_threshold(descriptor):
    """Prox-boundedness threshold of the described function.

    Exact for quadratics (eigenvalue formula) and piecewise polynomials;
    for raw samples returns the declared threshold or a conservative
    estimate from the most negative second-difference quotient along the
    tails of the sampling box (a heuristic, flagged as such on sampled
    grid functions).
    """
    thr, _ = _threshold_with_flag(descriptor.resolve())
    return thr


# ---------------------------------------------------------------------------
# descriptor text format
# ---------------------------------------------------------------------------

def parse_descriptor(text):
    """Parse the structured-text function description format.

    The format is a YAML mapping with a ``kind`` field; ``#`` comments and
    UTF-8 are inherited from YAML.  See the README for the schema.
    """
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        if mark is not None:
            raise ParseError(str(getattr(exc, "problem", exc)),
                             mark.line + 1, mark.column + 1) from exc
        raise ParseError(str(exc)) from exc
    if not isinstance(doc, dict):
        raise ParseError("descriptor must be a mapping with a 'kind' field")
    doc = dict(doc)
    kind = doc.pop("kind", None)
    declared = doc.pop("declared_threshold", "auto")
    if declared != "auto":
        declared = parse_ext(declared)
    try:
        if kind == "quadratic":
            payload = QuadraticFunction(_require(doc, "A"))
        elif kind == "piecewise1d":
            tails = doc.pop("tails", {}) or {}
            payload = Piecewise1D(
                tuple(_require(doc, "breakpoints")),
                tuple(_parse_piece(p) for p in doc.pop("pieces", [])),
                _parse_piece(tails.get("left", (0.0,))),
                _parse_piece(tails.get("right", (0.0,))),
            )
        elif kind == "samples":
            grid = _require(doc, "grid")
            spec = GridSpec.make(grid["lower"], grid["upper"], grid["points"])
            payload = SampleArray(spec, tuple(_require(doc, "values")))
        elif kind == "builtin":
            name = _require(doc, "name")
            if name not in BUILTIN_NAMES:
                raise UnknownBuiltin(name)
            payload = Builtin(name, tuple(doc.items()))
            doc = {}
        else:
            raise ParseError(f"unknown descriptor kind {kind!r}")
    except KeyError as exc:
        raise ParseError(f"missing field {exc.args[0]!r}") from exc
    if doc:
        raise ParseError(f"unexpected fields: {sorted(doc)}")
    desc = FunctionDescriptor(kind, payload, declared)
    if kind == "builtin":
        desc.resolve()  # validates builtin parameters eagerly
    return desc


def _require(doc, key):
    if key not in doc:
        raise ParseError(f"missing field {key!r}")
    return doc.pop(key)


def _parse_piece(p):
    if p is None or (isinstance(p, str) and p.strip().lower() == "inf"):
        return None
    return tuple(float(c) for c in p)


def serialize_descriptor(descriptor):
    """Inverse of :func:`parse_descriptor` up to descriptor equality."""
    desc = descriptor
    doc = {"kind": desc.kind}
    if desc.kind == "quadratic":
        doc["A"] = [list(row) for row in desc.payload.A]
    elif desc.kind == "piecewise1d":
        pw = desc.payload
        doc["breakpoints"] = list(pw.breakpoints)
        doc["pieces"] = [_piece_doc(p) for p in pw.pieces]
        doc["tails"] = {"left": _piece_doc(pw.left_tail),
                        "right": _piece_doc(pw.right_tail)}
    elif desc.kind == "samples":
        sample = desc.payload
        doc["grid"] = {
            "lower": list(sample.spec.lower),
            "upper": list(sample.spec.upper),
            "points": list(sample.spec.points_per_axis),
        }
        doc["values"] = ["inf" if v == _INF else v for v in sample.values]
    elif desc.kind == "builtin":
        doc["name"] = desc.payload.name
        doc.update(desc.payload.param_dict())
    else:
        raise ValueError("indicator descriptors serialize via their builtin form")
    if desc.declared_threshold != "auto":
        doc["declared_threshold"] = ("inf" if desc.declared_threshold == _INF
                                     else float(desc.declared_threshold))
    return yaml.safe_dump(doc, sort_keys=False, default_flow_style=None)


def _piece_doc(coeffs):
    return "inf" if coeffs is None else list(coeffs)
