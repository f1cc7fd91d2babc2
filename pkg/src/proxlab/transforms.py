"""Regularization kernels on grid functions.

All envelope-type operations use full-scan semantics: the discrete
minimum ranges over every grid node, so grid results are themselves the
brute-force oracle for the closed-form routes.  Boundary effects (the
continuum infimum escaping the sampling box) are detected and reported as
flags rather than silently absorbed.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import (
    AllInfinite,
    GridMismatch,
    LambdaAboveThreshold,
    ParameterOrder,
    SetValuedProx,
)
from .func_model import GridFunction, GridSpec, Piecewise1D, polyval

_INF = math.inf

# Envelope discretization error is (curvature + 1/lam) * h^2 / 8 per axis;
# this constant absorbs the curvature of all shipped fixtures with margin
# (calibrated against the quadratic closed forms in the test suite).
GRID_ERROR_CONSTANT = 0.5


def grid_error(spec, lam):
    """Calibrated bound on |discrete - true| for one envelope at ``lam``."""
    h = max(spec.steps)
    return GRID_ERROR_CONSTANT * spec.dim * (1.0 + 1.0 / lam) * h * h


def cluster_tolerance(spec, lam):
    """Objective tolerance for argmin clustering: max(1e-9, h^2/lam).

    Grid argmin locations are h-accurate while envelope values are
    h^2-accurate, so h^2/lam matches the envelope accuracy scale.
    """
    h = max(spec.steps)
    return max(1e-9, h * h / lam)


def squared_norm_grid(spec):
    """||x||^2 at every node (canonical node coordinates)."""
    if spec.dim == 1:
        x = spec.axis_nodes(0)
        return x * x
    x, y = spec.meshgrid()
    return x * x + y * y


def add_quadratic(f, coeff, label=None, threshold=None, heuristic=None):
    """Grid function f + coeff * ||x||^2."""
    vals = f.values + squared_norm_grid(f.spec) * coeff
    return f.with_values(vals, label=label or f"{f.label}+{coeff}*|x|^2",
                         threshold=threshold, heuristic=heuristic)


def _require_same_grid(f, g):
    if f.spec != g.spec:
        raise GridMismatch("grid functions live on different grids")


def _check_lambda(f, lam, name="lam"):
    if not lam > 0:
        raise LambdaAboveThreshold(f"{name} must be positive, got {lam}")
    if not lam < f.threshold:
        raise LambdaAboveThreshold(
            f"{name}={lam} is not strictly below the recorded prox threshold "
            f"{f.threshold} of {f.label or 'the input'}")


# ---------------------------------------------------------------------------
# set-valued results
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo <= self.hi:
            raise ValueError("interval requires lo <= hi")

    @property
    def width(self):
        return self.hi - self.lo

    def contains(self, x, tol=0.0):
        return self.lo - tol <= x <= self.hi + tol


@dataclass(frozen=True)
class MinimizerSet:
    """Clustered argmin of a grid objective.

    ``points`` are cluster representatives (parabolic-fit vertices on
    smooth pieces, raw nodes at kinks); ``clusters`` keep the extent of the
    qualifying nodes, so in 1-D the convexified set is exactly
    [min lo, max hi].
    """

    points: tuple
    clusters: tuple
    attained_value: float
    tolerance: float

    def __post_init__(self):
        if self.attained_value < _INF and len(self.points) == 0:
            raise ValueError("minimizer set must be nonempty when the "
                             "attained value is finite")

    @property
    def dim(self):
        return 1 if not self.points or np.isscalar(self.points[0]) else 2

    def hull_interval(self):
        """Convex hull of the qualifying nodes (1-D)."""
        if self.dim != 1:
            raise ValueError("hull_interval is one-dimensional")
        return Interval(min(c[0] for c in self.clusters),
                        max(c[1] for c in self.clusters))

    def single_point(self, spacing, factor=4.0):
        """The cluster representative when the set is a single narrow
        cluster (grid-level single-valuedness); None otherwise."""
        if len(self.clusters) != 1:
            return None
        hull = self.hull_interval()
        if hull.width > factor * spacing:
            return None
        return self.points[0]


@dataclass(frozen=True)
class ProximalityCheck:
    """Outcome of a grid convexity test for f + ||.||^2/(2 lam)."""

    ok: bool
    max_violation: float
    tolerance: float
    witness: object = None

    def __bool__(self):
        return self.ok


@dataclass(frozen=True)
class ProbeResult:
    """Lipschitz probe of a proximal mapping."""

    kappa: float
    consistent: bool
    reason: str = ""


# ---------------------------------------------------------------------------
# Moreau envelope and proximal mapping
# ---------------------------------------------------------------------------

def _raw_envelope(values, spec, lam):
    return kernels.envelope_nd(values, spec.steps, lam)


def _interior_masked(values, spec):
    masked = np.array(values, dtype=np.float64)
    if spec.dim == 1:
        masked[0] = _INF
        masked[-1] = _INF
    else:
        masked[0, :] = _INF
        masked[-1, :] = _INF
        masked[:, 0] = _INF
        masked[:, -1] = _INF
    return masked


def _envelope_boundary_flags(values, spec, lam, env):
    """True where the discrete argmin lives only on the outermost nodes,
    i.e. where the continuum infimum may continue below outside the box."""
    masked = _interior_masked(values, spec)
    if not np.isfinite(masked).any():
        return np.ones(spec.shape(), dtype=bool)
    env_interior = _raw_envelope(masked, spec, lam)
    return env < env_interior


def moreau_envelope(f, lam, with_flags=False):
    """Discrete Moreau envelope: min over all grid nodes w of
    f(w) + ||w - x||^2/(2 lam) at every node x.

    Requires 0 < lam strictly below the recorded prox threshold of f.
    With ``with_flags=True`` also returns the boundary-affected mask.
    """
    _check_lambda(f, lam)
    env = _raw_envelope(f.values, f.spec, lam)
    thr = f.threshold - lam if f.threshold < _INF else _INF
    out = GridFunction(f.spec, env, f"e_{lam}({f.label})", thr,
                       f.threshold_is_heuristic)
    if not with_flags:
        return out
    flags = _envelope_boundary_flags(f.values, f.spec, lam, env)
    return out, flags


def _point_objective(f, lam, x):
    """Objective f(w) + ||w - x||^2/(2 lam) over all nodes w.

    When x coincides with a grid node the cost is formed from index
    differences, matching the envelope kernel arithmetic exactly.
    """
    spec = f.spec
    inv2lam = 1.0 / (2.0 * lam)
    idx = spec.index_of(x, tol=1e-12)
    if spec.dim == 1:
        if idx is not None:
            d = (np.arange(spec.points_per_axis[0]) - idx[0]).astype(np.float64) \
                * spec.steps[0]
        else:
            d = spec.axis_nodes(0) - float(x)
        return f.values + d * d * inv2lam
    coords = tuple(x)
    if idx is not None:
        dx = (np.arange(spec.points_per_axis[0]) - idx[0]).astype(np.float64) \
            * spec.steps[0]
        dy = (np.arange(spec.points_per_axis[1]) - idx[1]).astype(np.float64) \
            * spec.steps[1]
    else:
        dx = spec.axis_nodes(0) - coords[0]
        dy = spec.axis_nodes(1) - coords[1]
    return f.values + (dx * dx)[:, None] * inv2lam + (dy * dy)[None, :] * inv2lam


def _parabolic_vertex(xs, objective, i):
    """Refined minimizer around the best node of a cluster; falls back to
    the raw node at kinks or when the fit leaves the cell.

    Kink detection compares the central second difference against its two
    neighbors: on a smooth piece all three are ~F''h^2, while a kink
    spikes the central one to O(h) regardless of grid alignment.
    """
    n = objective.shape[0]
    if i == 0 or i == n - 1:
        return float(xs[i])
    om, oo, op = objective[i - 1], objective[i], objective[i + 1]
    if not (np.isfinite(om) and np.isfinite(op)):
        return float(xs[i])
    denom = om + op - 2.0 * oo
    if denom <= 0.0:
        return float(xs[i])
    neighbors = []
    if i >= 2 and np.isfinite(objective[i - 2]):
        neighbors.append(objective[i - 2] + oo - 2.0 * om)
    if i + 2 < n and np.isfinite(objective[i + 2]):
        neighbors.append(objective[i + 2] + oo - 2.0 * op)
    if not neighbors or denom > 3.0 * max(max(neighbors), 1e-300):
        return float(xs[i])
    h = xs[1] - xs[0]
    off = 0.5 * (om - op) / denom * h
    # exact half-cell offsets occur at objective ties between neighbors
    if abs(off) > 0.75 * h:
        return float(xs[i])
    return float(xs[i] + off)


def _cluster_1d(objective, spec, tol):
    xs = spec.axis_nodes(0)
    m = float(np.min(objective))
    if not np.isfinite(m):
        raise AllInfinite("objective has no finite value")
    qual = np.flatnonzero(objective <= m + tol)
    clusters = []
    points = []
    start = prev = qual[0]
    for i in list(qual[1:]) + [None]:
        if i is not None and i == prev + 1:
            prev = i
            continue
        lo, hi = start, prev
        clusters.append((float(xs[lo]), float(xs[hi])))
        best = lo if lo == hi else lo + int(np.argmin(objective[lo:hi + 1]))
        points.append(_parabolic_vertex(xs, objective, best))
        if i is not None:
            start = prev = i
    return points, clusters, m


def _cluster_2d(objective, spec, tol):
    from scipy import ndimage

    m = float(np.min(objective))
    if not np.isfinite(m):
        raise AllInfinite("objective has no finite value")
    qual = objective <= m + tol
    labels, count = ndimage.label(qual)
    pairs = []
    for k in range(1, count + 1):
        ii, jj = np.nonzero(labels == k)
        members = tuple(sorted(spec.node((i, j)) for i, j in zip(ii, jj)))
        best = int(np.argmin(objective[ii, jj]))
        rep = spec.node((int(ii[best]), int(jj[best])))
        pairs.append((rep, members))
    pairs.sort()
    return [p for p, _ in pairs], [c for _, c in pairs], m


def prox_map(f, lam, x, cluster_tol=None):
    """Set-valued proximal mapping at ``x``: all grid nodes within the
    clustering tolerance of the discrete minimum, merged into connected
    clusters."""
    _check_lambda(f, lam)
    objective = _point_objective(f, lam, x)
    tol = cluster_tolerance(f.spec, lam) if cluster_tol is None else cluster_tol
    if f.spec.dim == 1:
        points, clusters, m = _cluster_1d(objective, f.spec, tol)
    else:
        points, clusters, m = _cluster_2d(objective, f.spec, tol)
    return MinimizerSet(tuple(points), tuple(clusters), m, tol)


def argmin_set(f, cluster_tol=1e-9):
    """Clustered argmin of a grid function itself (no quadratic term)."""
    if f.spec.dim == 1:
        points, clusters, m = _cluster_1d(f.values, f.spec, cluster_tol)
    else:
        points, clusters, m = _cluster_2d(f.values, f.spec, cluster_tol)
    return MinimizerSet(tuple(points), tuple(clusters), m, cluster_tol)


# ---------------------------------------------------------------------------
# proximal hull and Lasry-Lions envelope
# ---------------------------------------------------------------------------

def proximal_hull(f, lam, with_flags=False):
    """Proximal hull -e_lam(-e_lam f); the largest lam-proximal minorant.

    Exact grid identities (up to roundoff): h <= f, e_lam(h) = e_lam(f),
    h idempotent.  With ``with_flags=True`` also returns the mask of nodes
    whose reconstruction stage only reached the box edge (there the
    continuum hull may lie above the discrete one).
    """
    _check_lambda(f, lam)
    env = _raw_envelope(f.values, f.spec, lam)
    neg_env = -env
    hull = -_raw_envelope(neg_env, f.spec, lam)
    thr = max(lam, f.threshold - lam) if f.threshold < _INF else _INF
    out = GridFunction(f.spec, hull, f"h_{lam}({f.label})", thr,
                       f.threshold_is_heuristic)
    if not with_flags:
        return out
    flags = _envelope_boundary_flags(neg_env, f.spec, lam, -hull)
    return out, flags


def lasry_lions(f, lam, mu):
    """Double envelope -e_mu(-e_lam f) for 0 < mu < lam < threshold."""
    if not 0 < mu < lam:
        raise ParameterOrder(f"need 0 < mu < lam, got mu={mu}, lam={lam}")
    _check_lambda(f, lam)
    env = _raw_envelope(f.values, f.spec, lam)
    out = -_raw_envelope(-env, f.spec, mu)
    base = f.threshold - lam if f.threshold < _INF else _INF
    thr = max(mu, base + mu) if base < _INF else _INF
    return GridFunction(f.spec, out, f"e_{lam},{mu}({f.label})", thr,
                        f.threshold_is_heuristic)


# ---------------------------------------------------------------------------
# discrete conjugation and convex hulls
# ---------------------------------------------------------------------------

def default_dual_spec(f, padding=0.1):
    """Dual grid covering the adjacent-difference-quotient slope range of
    f, padded by 10% per side, with the primal node counts."""
    spec = f.spec
    lowers, uppers = [], []
    for axis in range(spec.dim):
        h = spec.steps[axis]
        arr = f.values if spec.dim == 1 else np.moveaxis(f.values, axis, -1)
        quot = (arr[..., 1:] - arr[..., :-1]) / h
        finite = quot[np.isfinite(quot)]
        if finite.size == 0:
            lo, hi = -1.0, 1.0
        else:
            lo, hi = float(finite.min()), float(finite.max())
            if lo == hi:
                lo, hi = lo - 1.0, hi + 1.0
        pad = padding * (hi - lo)
        lowers.append(lo - pad)
        uppers.append(hi + pad)
    return GridSpec(spec.dim, tuple(lowers), tuple(uppers),
                    spec.points_per_axis)


def discrete_conjugate(f, dual_spec=None, fast=False):
    """Discrete Legendre-Fenchel transform: f*(s) = max over grid nodes x
    of <s, x> - f(x), evaluated at the dual grid nodes.

    ``fast=True`` switches to the monotone linear-time scan in 1-D; its
    output is checked against the naive scan semantics to 1e-12 by the
    test suite and falls back to naive in 2-D.
    """
    if dual_spec is None:
        dual_spec = default_dual_spec(f)
    if dual_spec.dim != f.spec.dim:
        raise GridMismatch("dual grid dimension must match the primal grid")
    if f.spec.dim == 1:
        out = _conjugate_1d(f.values, f.spec.axis_nodes(0),
                            dual_spec.axis_nodes(0), fast)
    else:
        out = _conjugate_2d(f.values, f.spec, dual_spec)
    return GridFunction(dual_spec, out, f"({f.label})*", _INF, False)


def _conjugate_1d(vals, xs, ss, fast):
    finite = np.isfinite(vals)
    xf, vf = xs[finite], vals[finite]
    if not fast:
        out = np.empty(ss.shape[0])
        for k, s in enumerate(ss):
            out[k] = np.max(s * xf - vf)
        return out
    # linear-time path: the conjugate only sees the lower convex hull, and
    # on the hull vertex subsequence the argmax is nondecreasing in s
    # (grid-spec dual nodes are ascending, which the sweep relies on)
    verts = _lower_hull_vertices(xf, vf)
    xv, vv = xf[verts], vf[verts]
    out = np.empty(ss.shape[0])
    j = 0
    n = xv.shape[0]
    for k, s in enumerate(ss):
        best = s * xv[j] - vv[j]
        while j + 1 < n:
            cand = s * xv[j + 1] - vv[j + 1]
            if cand >= best:
                best = cand
                j += 1
            else:
                break
        out[k] = best
    return out


def _lower_hull_vertices(xs, vals):
    """Indices of the lower convex hull vertices (tie-slope predicate)."""
    active = []
    for i in range(xs.shape[0]):
        while len(active) >= 2:
            a, b = active[-2], active[-1]
            tie_ab = (vals[b] - vals[a]) / (xs[b] - xs[a])
            tie_bi = (vals[i] - vals[b]) / (xs[i] - xs[b])
            if tie_bi <= tie_ab:
                active.pop()
            else:
                break
        active.append(i)
    return np.asarray(active, dtype=int)


def _conjugate_2d(vals, spec, dual_spec):
    finite = np.isfinite(vals)
    x, y = spec.meshgrid()
    xf, yf, vf = x[finite], y[finite], vals[finite]
    sx = dual_spec.axis_nodes(0)
    sy = dual_spec.axis_nodes(1)
    out = np.empty(dual_spec.shape())
    for i, s1 in enumerate(sx):
        base = s1 * xf - vf
        for j, s2 in enumerate(sy):
            out[i, j] = np.max(base + s2 * yf)
    return out


def lower_convex_envelope_1d(xs, vals):
    """Monotone-chain lower convex envelope of the finite nodes (oracle
    route); +inf outside the finite span, +inf nodes skipped."""
    finite = np.isfinite(vals)
    out = np.full(vals.shape, _INF)
    idx = np.flatnonzero(finite)
    if idx.size == 0:
        raise AllInfinite("no finite node")
    if idx.size == 1:
        out[idx[0]] = vals[idx[0]]
        return out
    hull = []  # indices of lower-hull vertices, cross-product predicate
    for i in idx:
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            cross = (xs[b] - xs[a]) * (vals[i] - vals[a]) \
                - (xs[i] - xs[a]) * (vals[b] - vals[a])
            if cross <= 0.0:
                hull.pop()
            else:
                break
        hull.append(i)
    vx = xs[hull]
    vy = vals[hull]
    span = (xs >= xs[idx[0]]) & (xs <= xs[idx[-1]])
    out[span] = np.interp(xs[span], vx, vy)
    np.minimum(out, vals, out=out)
    return out


def _hull_1d_conjugate(xs, vals):
    """Production route: double discrete conjugation carried out exactly on
    the piecewise-linear conjugate (active-line envelope in slope space)."""
    finite = np.isfinite(vals)
    idx = np.flatnonzero(finite)
    out = np.full(vals.shape, _INF)
    if idx.size == 0:
        raise AllInfinite("no finite node")
    if idx.size == 1:
        out[idx[0]] = vals[idx[0]]
        return out

    def tie_slope(a, b):
        # slope where conjugate lines of nodes a and b intersect
        return (vals[b] - vals[a]) / (xs[b] - xs[a])

    active = []
    for i in idx:
        # line i (slope x_i, intercept -f_i) evicts the previous active
        # line when it takes over at or before the previous tie slope
        while len(active) >= 2 and tie_slope(active[-1], i) <= \
                tie_slope(active[-2], active[-1]):
            active.pop()
        active.append(i)
    vx = xs[active]
    vy = vals[active]
    span = (xs >= xs[idx[0]]) & (xs <= xs[idx[-1]])
    out[span] = np.interp(xs[span], vx, vy)
    np.minimum(out, vals, out=out)
    return out


def _hull_2d(values, spec):
    from scipy.spatial import ConvexHull, QhullError

    x, y = spec.meshgrid()
    finite = np.isfinite(values)
    xf, yf, vf = x[finite], y[finite], values[finite]
    out = np.full(values.shape, _INF)
    if xf.size == 0:
        raise AllInfinite("no finite node")
    if xf.size <= 2:
        out[finite] = vf
        return out
    # degenerate supports: all finite nodes on one grid line
    if np.unique(xf).size == 1:
        i = int(np.flatnonzero(finite.any(axis=1))[0])
        out[i, :] = lower_convex_envelope_1d(spec.axis_nodes(1), values[i, :])
        return out
    if np.unique(yf).size == 1:
        j = int(np.flatnonzero(finite.any(axis=0))[0])
        out[:, j] = lower_convex_envelope_1d(spec.axis_nodes(0), values[:, j])
        return out
    pts = np.column_stack([xf, yf, vf])
    try:
        hull = ConvexHull(pts)
    except QhullError:
        # coplanar values: the function is affine on its domain already
        coef, *_ = np.linalg.lstsq(
            np.column_stack([xf, yf, np.ones_like(xf)]), vf, rcond=None)
        fit = pts[:, 0] * coef[0] + pts[:, 1] * coef[1] + coef[2]
        if np.max(np.abs(fit - vf)) <= 1e-9 * (1.0 + np.max(np.abs(vf))):
            out[finite] = vf
            return out
        raise
    lower = hull.equations[hull.equations[:, 2] < -1e-12]
    # each lower facet plane a*x + b*y + c*v + d = 0 supports the epigraph:
    # v >= -(a*x + b*y + d)/c, and the envelope is the max of these planes.
    xg, yg = x[..., None], y[..., None]
    planes = -(lower[:, 0] * xg + lower[:, 1] * yg + lower[:, 3]) / lower[:, 2]
    env = planes.max(axis=-1)
    # restrict to the convex hull of the finite domain
    dom = ConvexHull(np.column_stack([xf, yf]))
    eq = dom.equations
    inside = np.ones(values.shape, dtype=bool)
    for a, b, d in eq:
        inside &= a * x + b * y + d <= 1e-9
    out[inside] = env[inside]
    np.minimum(out, values, out=out)
    return out


def convex_hull_grid(f):
    """Closed convex hull of the sampled function, restricted to the box.

    Production path is double discrete conjugation (evaluated exactly via
    the piecewise-linear conjugate in 1-D, lower hull facets in 2-D);
    output is <= f, convex along every grid line, and idempotent.
    """
    if f.spec.dim == 1:
        vals = _hull_1d_conjugate(f.spec.axis_nodes(0), f.values)
    else:
        vals = _hull_2d(f.values, f.spec)
    return GridFunction(f.spec, vals, f"conv({f.label})", _INF, False)


# ---------------------------------------------------------------------------
# infimal convolution
# ---------------------------------------------------------------------------

def _difference_offsets(spec):
    offs = []
    for axis in range(spec.dim):
        r = -spec.lower[axis] / spec.steps[axis]
        k = round(r)
        if abs(r - k) > 1e-9:
            raise GridMismatch(
                "inf-convolution requires the grid origin to be an integer "
                "number of spacings from the lower bound (x - w must land "
                "on grid nodes)")
        offs.append(int(k))
    return offs


def _minconv_values(fv, gv, spec):
    offs = _difference_offsets(spec)
    if spec.dim == 1:
        return kernels.minconv_1d(fv, gv, offs[0])
    n0, n1 = spec.shape()
    out = np.full((n0, n1), _INF)
    for j0 in range(n0):
        for j1 in range(n1):
            g = gv[j0, j1]
            if not np.isfinite(g):
                continue
            s0, s1 = offs[0] - j0, offs[1] - j1
            lo0, hi0 = max(0, -s0), min(n0, n0 - s0)
            lo1, hi1 = max(0, -s1), min(n1, n1 - s1)
            if lo0 >= hi0 or lo1 >= hi1:
                continue
            seg = fv[lo0 + s0:hi0 + s0, lo1 + s1:hi1 + s1] + g
            np.minimum(out[lo0:hi0, lo1:hi1], seg, out=out[lo0:hi0, lo1:hi1])
    return out


def inf_convolution(f, g, with_flags=False):
    """Discrete epi-sum (f □ g)(x) = min over w of f(x-w) + g(w), with w
    restricted so that x - w stays on the grid.

    With ``with_flags=True`` also returns (boundary_affected, attained):
    boundary flags mark nodes whose minimum is attained only where the
    truncated window touches a grid edge; ``attained`` marks nodes with a
    finite exact minimizer (exactness witness).
    """
    _require_same_grid(f, g)
    out = _minconv_values(f.values, g.values, f.spec)
    thr = min(f.threshold, g.threshold)
    gf = GridFunction(f.spec, out, f"({f.label})box({g.label})", thr, True)
    if not with_flags:
        return gf
    f_int = _interior_masked(f.values, f.spec)
    g_int = _interior_masked(g.values, g.spec)
    if np.isfinite(f_int).any() and np.isfinite(g_int).any():
        interior = _minconv_values(f_int, g_int, f.spec)
        flags = out < interior
    else:
        flags = np.ones(f.spec.shape(), dtype=bool)
    attained = np.isfinite(out)
    return gf, flags, attained


# ---------------------------------------------------------------------------
# lambda-proximality
# ---------------------------------------------------------------------------

def _line_violations(g):
    """Convexity violations 2*g0 - g- - g+ along the last axis, with
    extended-real conventions (isolated +inf inside the domain violates)."""
    gm, g0, gp = g[..., :-2], g[..., 1:-1], g[..., 2:]
    with np.errstate(invalid="ignore"):
        raw = 2.0 * g0 - gm - gp
    bad_spike = np.isinf(g0) & np.isfinite(gm) & np.isfinite(gp)
    raw = np.where(np.isnan(raw), -_INF, raw)
    return np.where(bad_spike, _INF, raw)


def _scan_directions(g, dim):
    """(lines, direction, locate) triples covering grid lines and, in 2-D,
    both diagonals; ``locate(line, pos)`` maps back to a grid index."""
    if dim == 1:
        return [(g[None, :], "axis0", lambda l, k: (k,))]
    n0, n1 = g.shape
    scans = [
        (np.ascontiguousarray(g.T), "axis0", lambda l, k: (k, l)),
        (np.ascontiguousarray(g), "axis1", lambda l, k: (l, k)),
    ]
    for sign, name in ((1, "diag+"), (-1, "diag-")):
        lines = []
        starts = []
        for off in range(-n0 + 1, n1):
            i0 = max(0, -off)
            j0 = i0 + off
            length = min(n0 - i0, n1 - j0)
            if length < 3:
                continue
            ii = i0 + np.arange(length)
            jj = j0 + np.arange(length)
            if sign < 0:
                jj = n1 - 1 - jj
            lines.append((g[ii, jj], (int(ii[0]), int(jj[0]), sign)))
        if not lines:
            continue
        maxlen = max(d.shape[0] for d, _ in lines)
        arr = np.full((len(lines), maxlen), _INF)
        for i, (d, _) in enumerate(lines):
            arr[i, :d.shape[0]] = d
        starts = [s for _, s in lines]

        def locate(l, k, starts=starts):
            i0, j0, sg = starts[l]
            return (i0 + k, j0 + sg * k)

        scans.append((arr, name, locate))
    return scans


def _second_difference_check(values, spec, tolerance):
    worst = -_INF
    witness = None
    for lines, direction, locate in _scan_directions(values, spec.dim):
        if lines.shape[-1] < 3:
            continue
        viol = _line_violations(lines)
        if viol.size == 0:
            continue
        vmax = float(np.max(viol))
        if vmax > worst:
            worst = vmax
            l, k = np.unravel_index(int(np.argmax(viol)), viol.shape)
            witness = (spec.node(locate(int(l), int(k) + 1)), direction)
    ok = worst <= tolerance
    return ProximalityCheck(ok, worst, tolerance, None if ok else witness)


def is_lambda_proximal(f, lam, tol=None):
    """Grid test of lambda-proximality: f + ||.||^2/(2 lam) must have
    nonnegative second differences along every grid line and, in 2-D,
    midpoint convexity along both diagonals.  Returns a check object with
    a violation witness when false."""
    if not lam > 0:
        raise ValueError("lam must be positive")
    g = f.values + squared_norm_grid(f.spec) * (1.0 / (2.0 * lam))
    finite = f.values[np.isfinite(f.values)]
    scale = 1.0 + (float(np.max(np.abs(finite))) if finite.size else 0.0)
    tolerance = 1e-9 * scale if tol is None else tol
    return _second_difference_check(g, f.spec, tolerance)


def grid_convexity(f, tol=None):
    """Convexity of the sampled values along grid lines (and diagonals in
    2-D); the lam -> infinity limit of :func:`is_lambda_proximal`."""
    finite = f.values[np.isfinite(f.values)]
    scale = 1.0 + (float(np.max(np.abs(finite))) if finite.size else 0.0)
    tolerance = 1e-9 * scale if tol is None else tol
    return _second_difference_check(np.asarray(f.values), f.spec, tolerance)


# ---------------------------------------------------------------------------
# resolvent of mu * limiting subdifferential (1-D piecewise polynomials)
# ---------------------------------------------------------------------------

def _derivative(coeffs):
    return tuple(c * (i + 1) for i, c in enumerate(coeffs[1:])) or (0.0,)


def resolvent_1d(f, mu, x, tol=1e-9):
    """All w with x in w + mu * dL f(w) for a piecewise polynomial f.

    Piece interiors are solved exactly (polynomial roots of
    w + mu f'(w) = x); at breakpoints the limiting subdifferential is the
    interval [d-, d+] for upward kinks and the two-point set {d-, d+} for
    downward kinks.  Restricted to value-continuous (locally Lipschitz)
    fixtures; +inf tails are not supported.
    """
    if not isinstance(f, Piecewise1D):
        raise TypeError("resolvent_1d expects a Piecewise1D function")
    if not mu > 0:
        raise ValueError("mu must be positive")
    solutions = []
    for lo, hi, coeffs in f.regions():
        if coeffs is None:
            raise ValueError("resolvent_1d requires finite polynomial pieces")
        d = _derivative(coeffs)
        # w + mu f'(w) - x = 0
        poly = [mu * c for c in d]
        poly[0] -= float(x)
        if len(poly) < 2:
            poly = poly + [0.0]
        poly[1] += 1.0
        roots = np.polynomial.polynomial.polyroots(poly)
        for r in roots:
            if abs(r.imag) > 1e-9 * (1.0 + abs(r)):
                continue
            w = float(r.real)
            if lo - tol < w < hi + tol and lo < w < hi:
                solutions.append(w)
    scale = 1.0 + abs(float(x))
    for i, b in enumerate(f.breakpoints):
        left = f.piece_at(i - 1)
        right = f.piece_at(i)
        lv = polyval(left, b)
        rv = polyval(right, b)
        if abs(lv - rv) > 1e-9 * (1.0 + abs(lv) + abs(rv)):
            raise ValueError("resolvent_1d requires value continuity at "
                             "breakpoints")
        dm = float(polyval(_derivative(left), b))
        dp = float(polyval(_derivative(right), b))
        s = (float(x) - b) / mu
        if dm <= dp:
            if dm - tol * scale <= s <= dp + tol * scale:
                solutions.append(b)
        else:
            # downward kink: limiting subdifferential is the pair {d-, d+}
            if abs(s - dm) <= tol * scale or abs(s - dp) <= tol * scale:
                solutions.append(b)
    solutions.sort()
    deduped = []
    for w in solutions:
        if not deduped or abs(w - deduped[-1]) > 1e-9 * (1.0 + abs(w)):
            deduped.append(w)
    return MinimizerSet(tuple(deduped), tuple((w, w) for w in deduped),
                        0.0, tol)


# ---------------------------------------------------------------------------
# Clarke subdifferential of the envelope; Lipschitz probe
# ---------------------------------------------------------------------------

def clarke_subdiff_envelope(f, mu, x):
    """(x - conv Prox_mu f(x)) / mu: an order-reversed interval in 1-D, the
    transformed prox cluster points in 2-D."""
    prox = prox_map(f, mu, x)
    if f.spec.dim == 1:
        hull = prox.hull_interval()
        return Interval((float(x) - hull.hi) / mu, (float(x) - hull.lo) / mu)
    coords = tuple(x)
    return tuple(sorted(((coords[0] - p[0]) / mu, (coords[1] - p[1]) / mu)
                        for p in prox.points))


def prox_lipschitz_probe(f, mu, strict=False):
    """Estimate the Lipschitz constant of a single-valued prox selection
    and cross-check it with the shifted-convexity characterization
    (f + (kappa-1)/(2 mu kappa) ||.||^2 convex at kappa slightly inflated).
    """
    _check_lambda(f, mu, "mu")
    spec = f.spec
    h = max(spec.steps)
    # a single-valued prox shows as one cluster whose width shrinks with h
    # (~ h*sqrt(kappa)); genuinely flat argmin stretches stay O(box size)
    box = max(u - l for l, u in zip(spec.lower, spec.upper))
    width_cap = max(8.0 * h, 0.02 * box)

    def _set_valued_reason(prox, x):
        if len(prox.clusters) != 1:
            return f"prox is set-valued at x={x}: {len(prox.clusters)} clusters"
        if spec.dim == 1:
            width = prox.hull_interval().width
        else:
            width = float(np.ptp(np.asarray(prox.clusters[0]), axis=0).max())
        if width > width_cap:
            return f"prox is set-valued at x={x}: flat argmin of width {width:.3g}"
        return None

    if spec.dim == 1:
        selections = []
        for i in range(spec.points_per_axis[0]):
            x = spec.node((i,))
            prox = prox_map(f, mu, x)
            reason = _set_valued_reason(prox, x)
            if reason is not None:
                if strict:
                    raise SetValuedProx(reason)
                return ProbeResult(math.nan, False, reason)
            selections.append(prox.points[0])
        sel = np.asarray(selections)
        kappa = float(np.max(np.abs(np.diff(sel))) / spec.steps[0])
    else:
        nodes = [(i, j) for i in range(spec.points_per_axis[0])
                 for j in range(spec.points_per_axis[1])]
        grid_sel = {}
        for idx in nodes:
            x = spec.node(idx)
            prox = prox_map(f, mu, x)
            reason = _set_valued_reason(prox, x)
            if reason is not None:
                if strict:
                    raise SetValuedProx(reason)
                return ProbeResult(math.nan, False, reason)
            grid_sel[idx] = np.asarray(prox.points[0])
        kappa = 0.0
        for (i, j), p in grid_sel.items():
            for ni, nj, step in ((i + 1, j, spec.steps[0]),
                                 (i, j + 1, spec.steps[1])):
                q = grid_sel.get((ni, nj))
                if q is not None:
                    kappa = max(kappa, float(np.linalg.norm(p - q)) / step)
    kappa = max(kappa, 1e-12)
    k_test = kappa * (1.0 + 1e-6)
    coeff = (k_test - 1.0) / (2.0 * mu * k_test)
    shifted = f.with_values(f.values + squared_norm_grid(spec) * coeff,
                            threshold=_INF)
    check = grid_convexity(shifted)
    return ProbeResult(kappa, bool(check.ok),
                       "" if check.ok else f"shifted convexity violated by "
                       f"{check.max_violation:.3e}")
