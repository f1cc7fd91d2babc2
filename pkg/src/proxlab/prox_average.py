"""The proximal average of two prox-bounded grid functions.

Two independent routes are provided: the defining double-envelope formula
(applied to the convex combination of negated envelopes) and the
epi-sum of convexified quadratically shifted functions.  Both produce the
same function up to discretization error; the diagnostics module compares
them as one of the paper-identity checks.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import transforms
from .errors import (
    AlphaEndpoint,
    GridMismatch,
    HeuristicThreshold,
    MuAboveThreshold,
)
from .func_model import GridFunction
from .kernels import envelope_nd
from .transforms import (
    convex_hull_grid,
    inf_convolution,
    prox_map,
    squared_norm_grid,
)

_INF = math.inf


@dataclass(frozen=True)
class AverageParams:
    """alpha in [0, 1], 0 < mu strictly below the joint threshold
    lambda_bar = min of the two inputs' recorded thresholds."""

    alpha: float
    mu: float
    threshold_bar: float = _INF

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if not self.mu > 0:
            raise MuAboveThreshold(f"mu must be positive, got {self.mu}")
        if not self.mu < self.threshold_bar:
            raise MuAboveThreshold(
                f"mu={self.mu} is not strictly below lambda_bar="
                f"{self.threshold_bar}")

    @classmethod
    def for_pair(cls, f, g, alpha, mu, force=False):
        """Derive lambda_bar from the pair; refuses heuristic thresholds
        unless ``force`` is set."""
        if f.spec != g.spec:
            raise GridMismatch("averaged functions must share a grid")
        if (f.threshold_is_heuristic or g.threshold_is_heuristic) and not force:
            raise HeuristicThreshold(
                "a recorded threshold is only a heuristic estimate; pass "
                "force=True (or --force) to proceed")
        return cls(alpha, mu, min(f.threshold, g.threshold))


@dataclass(frozen=True)
class AverageResult:
    """Proximal average on the grid with per-node exactness flags.

    ``exactness_flags`` marks nodes whose value may be distorted by the
    sampling box (the discrete argmin escaped to the boundary at some
    stage); diagnostics exclude flagged nodes from identity checks.
    """

    phi: GridFunction
    route: str
    exactness_flags: np.ndarray

    def __post_init__(self):
        flags = np.ascontiguousarray(self.exactness_flags, dtype=bool)
        flags.setflags(write=False)
        object.__setattr__(self, "exactness_flags", flags)


def combine_envelopes(alpha, env_f, env_g):
    """alpha*e_f + (1-alpha)*e_g with exact endpoint handling, so the
    alpha = 0/1 averages reduce bitwise to the single-function hull."""
    if alpha == 0.0:
        return np.array(env_g, dtype=np.float64)
    if alpha == 1.0:
        return np.array(env_f, dtype=np.float64)
    return alpha * env_f + (1.0 - alpha) * env_g


def ext_combination(alpha, fv, gv):
    """alpha*f + (1-alpha)*g on extended reals (0 * inf treated as 0)."""
    if alpha == 0.0:
        return np.array(gv, dtype=np.float64)
    if alpha == 1.0:
        return np.array(fv, dtype=np.float64)
    out = alpha * fv + (1.0 - alpha) * gv
    return np.where(np.isinf(fv) | np.isinf(gv), _INF, out)


def _flags_pullback(inner_flags, outer_objective_argmin_flags):
    return inner_flags | outer_objective_argmin_flags


def proximal_average(f, g, p, force=False):
    """Definition route: -e_mu(-alpha e_mu f - (1-alpha) e_mu g).

    The result is mu-proximal on the grid by construction (asserted) and
    carries boundary-exactness flags pulled back through both envelope
    stages.
    """
    params = _validated(f, g, p, force)
    mu = params.mu
    env_f, flags_f = transforms.moreau_envelope(f, mu, with_flags=True)
    env_g, flags_g = transforms.moreau_envelope(g, mu, with_flags=True)
    combo = combine_envelopes(params.alpha, env_f.values, env_g.values)
    neg = -combo
    phi_vals = -envelope_nd(neg, f.spec.steps, mu)
    outer_flags = transforms._envelope_boundary_flags(neg, f.spec, mu,
                                                      -phi_vals)
    inner = _flags_pullback(flags_f, flags_g) if 0 < params.alpha < 1 else (
        flags_f if params.alpha == 1.0 else flags_g)
    flags = outer_flags | inner
    label = f"phi[a={params.alpha},mu={mu}]({f.label},{g.label})"
    phi = GridFunction(f.spec, phi_vals, label, params.threshold_bar,
                       f.threshold_is_heuristic or g.threshold_is_heuristic)
    check = transforms.is_lambda_proximal(phi, mu)
    if not check.ok:
        raise AssertionError(
            f"proximal average lost mu-proximality on the grid "
            f"(violation {check.max_violation:.3e} at {check.witness})")
    return AverageResult(phi, "definition", flags)


def _validated(f, g, p, force):
    if isinstance(p, AverageParams):
        if f.spec != g.spec:
            raise GridMismatch("averaged functions must share a grid")
        return p
    alpha, mu = p
    return AverageParams.for_pair(f, g, alpha, mu, force=force)


def _epi_scaled(hull_vals, spec, beta):
    """beta * u(x / beta) resampled on the grid; linear interpolation is
    safe because u is convex at this stage.  Arguments x/beta outside the
    box give +inf (matching the scaled domain beta * dom u)."""
    if spec.dim == 1:
        xs = spec.axis_nodes(0)
        target = xs / beta
        finite = np.isfinite(hull_vals)
        idx = np.flatnonzero(finite)
        lo, hi = xs[idx[0]], xs[idx[-1]]
        interp = np.interp(target, xs[idx], hull_vals[idx])
        out = np.where((target >= lo) & (target <= hi), beta * interp, _INF)
        return out
    xs, ys = spec.axis_nodes(0), spec.axis_nodes(1)
    tx, ty = xs / beta, ys / beta
    out = np.full(spec.shape(), _INF)
    inside_x = (tx >= xs[0]) & (tx <= xs[-1])
    inside_y = (ty >= ys[0]) & (ty <= ys[-1])
    ix = np.clip(np.searchsorted(xs, tx[inside_x]) - 1, 0, len(xs) - 2)
    iy = np.clip(np.searchsorted(ys, ty[inside_y]) - 1, 0, len(ys) - 2)
    wx = (tx[inside_x] - xs[ix]) / (xs[1] - xs[0])
    wy = (ty[inside_y] - ys[iy]) / (ys[1] - ys[0])
    vals = hull_vals
    v00 = vals[np.ix_(ix, iy)]
    v10 = vals[np.ix_(ix + 1, iy)]
    v01 = vals[np.ix_(ix, iy + 1)]
    v11 = vals[np.ix_(ix + 1, iy + 1)]
    wxg = wx[:, None]
    wyg = wy[None, :]
    interp = ((1 - wxg) * (1 - wyg) * v00 + wxg * (1 - wyg) * v10
              + (1 - wxg) * wyg * v01 + wxg * wyg * v11)
    block = np.full((len(tx), len(ty)), _INF)
    block[np.ix_(inside_x, inside_y)] = beta * interp
    out[:, :] = block
    return out


class _PLFunction:
    """Piecewise-linear convex function from hull values on grid nodes."""

    def __init__(self, xs, vals):
        idx = np.flatnonzero(np.isfinite(vals))
        if idx.size == 0:
            raise ValueError("hull has no finite node")
        self.xs = xs
        self.vals = vals
        self.lo_i, self.hi_i = int(idx[0]), int(idx[-1])
        self.lo, self.hi = float(xs[self.lo_i]), float(xs[self.hi_i])
        self.span_x = xs[self.lo_i:self.hi_i + 1]
        self.span_v = vals[self.lo_i:self.hi_i + 1]

    def __call__(self, u):
        """Exact values on the span (linear interpolation is exact for a
        piecewise-linear function with grid-node kinks), +inf outside."""
        u = np.asarray(u, dtype=np.float64)
        if self.lo_i == self.hi_i:
            near = np.abs(u - self.lo) <= 1e-12 * (1.0 + abs(self.lo))
            return np.where(near, self.span_v[0], _INF)
        out = np.interp(u, self.span_x, self.span_v)
        eps = 1e-12 * (1.0 + abs(self.lo) + abs(self.hi))
        return np.where((u >= self.lo - eps) & (u <= self.hi + eps), out, _INF)


def _exact_epi_sum_1d(conv_f, conv_g, alpha, spec):
    """min over all real w of alpha*F((x-w)/alpha) + (1-alpha)*G(w/(1-alpha))
    at every node x, for piecewise-linear convex F, G.

    The objective is convex piecewise-linear in w, so the minimum sits at
    an image of a grid kink of F or G or at a window endpoint; scanning
    those candidates is exact.  Exactness in w is what makes the epi-sum
    route inherit mu-monotonicity without discretization slack.
    """
    xs = spec.axis_nodes(0)
    a, b = alpha, 1.0 - alpha
    F = _PLFunction(xs, conv_f)
    G = _PLFunction(xs, conv_g)
    n = xs.shape[0]
    out = np.full(n, _INF)
    flags = np.zeros(n, dtype=bool)
    # candidate w from F kinks: w = x - a*xs[k];  from G kinks: w = b*xs[m]
    ks = np.arange(F.lo_i, F.hi_i + 1)
    ms = np.arange(G.lo_i, G.hi_i + 1)
    f_nodes = xs[ks]
    g_nodes = xs[ms]
    f_vals = conv_f[ks]
    g_vals = conv_g[ms]
    box_edges = []
    if F.lo_i == 0:
        box_edges.append(("F", F.lo))
    if F.hi_i == n - 1:
        box_edges.append(("F", F.hi))
    if G.lo_i == 0:
        box_edges.append(("G", G.lo))
    if G.hi_i == n - 1:
        box_edges.append(("G", G.hi))
    h = spec.steps[0]
    for i, x in enumerate(xs):
        w_lo = max(x - a * F.hi, b * G.lo)
        w_hi = min(x - a * F.lo, b * G.hi)
        if w_lo > w_hi + 1e-12 * (1.0 + abs(w_lo)):
            continue  # x outside dom(phi + q/2mu): leave +inf, unflagged
        cand_w = np.concatenate([
            x - a * f_nodes,
            b * g_nodes,
            np.array([w_lo, w_hi]),
        ])
        cand_w = cand_w[(cand_w >= w_lo - 1e-12) & (cand_w <= w_hi + 1e-12)]
        np.clip(cand_w, w_lo, w_hi, out=cand_w)
        u_f = (x - cand_w) / a
        u_g = cand_w / b
        vals = a * F(u_f) + b * G(u_g)
        j = int(np.argmin(vals))
        out[i] = vals[j]
        uf, ug = float(u_f[j]), float(u_g[j])
        for side, edge in box_edges:
            u = uf if side == "F" else ug
            if abs(u - edge) <= 0.5 * h:
                flags[i] = True
    return out, flags


def proximal_average_infconv(f, g, p, force=False):
    """Epi-sum route: convexify f + q/(2 mu) and g + q/(2 mu), epi-scale by
    alpha and 1-alpha, inf-convolve, subtract q/(2 mu).

    In 1-D the inf-convolution is minimized exactly over continuum w
    (piecewise-linear objective), which preserves the mu-monotonicity of
    the average without discretization slack; 2-D falls back to the
    grid-restricted minimization.  Undefined at the alpha endpoints (the
    epi-scaling divides by alpha); use :func:`proximal_average` there.
    """
    params = _validated(f, g, p, force)
    if params.alpha in (0.0, 1.0):
        raise AlphaEndpoint("inf-convolution route requires 0 < alpha < 1")
    mu, alpha = params.mu, params.alpha
    sq = squared_norm_grid(f.spec)
    shift = sq * (1.0 / (2.0 * mu))
    cf = convex_hull_grid(f.with_values(f.values + shift, threshold=_INF))
    cg = convex_hull_grid(g.with_values(g.values + shift, threshold=_INF))
    if f.spec.dim == 1:
        box_vals, flags = _exact_epi_sum_1d(cf.values, cg.values, alpha,
                                            f.spec)
        attained = np.isfinite(box_vals)
    else:
        sf = _epi_scaled(cf.values, f.spec, alpha)
        sg = _epi_scaled(cg.values, f.spec, 1.0 - alpha)
        box, flags, attained = inf_convolution(
            f.with_values(sf, threshold=_INF),
            f.with_values(sg, threshold=_INF),
            with_flags=True)
        box_vals = box.values
    vals = np.where(np.isfinite(box_vals), box_vals - shift, _INF)
    label = f"phi_infconv[a={alpha},mu={mu}]({f.label},{g.label})"
    phi = GridFunction(f.spec, vals, label, params.threshold_bar,
                       f.threshold_is_heuristic or g.threshold_is_heuristic)
    return AverageResult(phi, "infconv", flags & attained)


def shifted_hull(g, mu):
    """conv(g + q/(2 mu)) - q/(2 mu) on the grid: the epi-sum-route form of
    the proximal hull (exactly nonincreasing in mu, like the average)."""
    shift = squared_norm_grid(g.spec) * (1.0 / (2.0 * mu))
    hull = convex_hull_grid(g.with_values(g.values + shift, threshold=_INF))
    return np.where(np.isfinite(hull.values), hull.values - shift, _INF)


def prox_of_average(f, g, p, x, force=False):
    """Proximal mapping of the average at ``x`` (grid argmin clusters).

    The Minkowski combination of the convexified input prox hulls, which
    the paper identifies with this mapping, is available via
    :func:`minkowski_prox_combination` for comparison.
    """
    result = proximal_average(f, g, p, force=force)
    params = _validated(f, g, p, force)
    phi = result.phi
    return prox_map(phi, params.mu, x)


def minkowski_prox_combination(f, g, p, x, force=False):
    """alpha * conv Prox_mu f(x) + (1-alpha) * conv Prox_mu g(x) as an
    interval (1-D)."""
    params = _validated(f, g, p, force)
    hull_f = prox_map(f, params.mu, x).hull_interval()
    hull_g = prox_map(g, params.mu, x).hull_interval()
    a = params.alpha
    return transforms.Interval(a * hull_f.lo + (1 - a) * hull_g.lo,
                               a * hull_f.hi + (1 - a) * hull_g.hi)


def alpha_sweep(f, g, mu, alphas, force=False):
    """Averages for a sorted list of alpha values; the endpoints reproduce
    the proximal hulls of g and f exactly."""
    out = []
    for alpha in alphas:
        params = AverageParams.for_pair(f, g, alpha, mu, force=force)
        out.append(proximal_average(f, g, params, force=force))
    return out


def mu_sweep(f, g, alpha, mus, route="definition", force=False):
    """Averages for a sorted ascending list of mu values in (0, lambda_bar).

    The true average is pointwise nonincreasing in mu.  The epi-sum route
    reproduces that ordering exactly on the grid (its minimization set does
    not depend on mu); the definition route is monotone up to the envelope
    discretization error.
    """
    builder = (proximal_average if route == "definition"
               else proximal_average_infconv)
    out = []
    for mu in mus:
        params = AverageParams.for_pair(f, g, alpha, mu, force=force)
        out.append(builder(f, g, params, force=force))
    return out
