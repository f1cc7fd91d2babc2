"""Executable verification of the paper-level identities and inequalities.

Every check is a pure function returning a :class:`CheckReport`; the
standard suite (:func:`paper_suite` / :func:`run_all`) wires the builtin
fixture matrix through every check with deterministic ordering.

Tolerance policy: inequalities that hold exactly for the discrete
operators (sandwich, mu-monotonicity of the epi-sum route, endpoint
reductions, additivity of discrete epi-sums) are checked with hard
1e-9-or-tighter slack; identities transported through envelope stages get
multiples of the calibrated grid-error bound; set comparisons use the
grid spacing (argmin locations are h-accurate).
"""

import json
import math
from dataclasses import dataclass

import numpy as np

from . import prox_average as pa
from . import transforms as tr
from .func_model import GridFunction, GridSpec, Piecewise1D, sample_to_grid
from .transforms import grid_error

_INF = math.inf

# regression pin for the mu->0 uniform-gap bound of the standard continuous
# pair (fk(0.3), double_well) at alpha=0.7 on [-2, 2] with 801 nodes; the
# measured first-run value is frozen in tests/test_acceptance.py
MU_ZERO_GAP_PIN = 0.02


@dataclass(frozen=True)
class CheckReport:
    """Structured outcome of one identity verification."""

    check_id: str
    passed: bool
    max_violation: float
    witness: object
    tolerance_used: float
    nodes_excluded: int = 0

    def __post_init__(self):
        # invariant: passed iff the violation is within tolerance
        if self.passed != (self.max_violation <= self.tolerance_used):
            raise ValueError("passed flag inconsistent with violation")

    def to_json(self):
        def _clean(v):
            if isinstance(v, (np.floating, np.integer)):
                return v.item()
            if isinstance(v, (tuple, list)):
                return [_clean(x) for x in v]
            return v

        return json.dumps({
            "check_id": self.check_id,
            "passed": bool(self.passed),
            "max_violation": _clean(self.max_violation),
            "witness": _clean(self.witness),
            "tolerance_used": _clean(self.tolerance_used),
            "nodes_excluded": int(self.nodes_excluded),
        })


def _report(check_id, violation, tolerance, witness=None, excluded=0):
    violation = float(violation)
    return CheckReport(check_id, violation <= tolerance, violation,
                       witness, float(tolerance), int(excluded))


def _worst(diff, spec, mask=None):
    """(max, witness node) of a violation array, optionally masked."""
    arr = np.asarray(diff, dtype=np.float64)
    if mask is not None:
        arr = np.where(mask, arr, -_INF)
    idx = int(np.argmax(arr))
    node = spec.node(np.unravel_index(idx, arr.shape) if spec.dim == 2
                     else (idx,))
    return float(arr.flat[idx]), node


# ---------------------------------------------------------------------------
# set utilities (unions of intervals in 1-D)
# ---------------------------------------------------------------------------

def _intervals_of(minset):
    return [(lo, hi) for lo, hi in minset.clusters]


def _dist_to_intervals(x, intervals):
    return min(0.0 if lo <= x <= hi else min(abs(x - lo), abs(x - hi))
               for lo, hi in intervals)


def hausdorff_intervals(a, b):
    """Hausdorff distance between two unions of closed intervals.

    The supremum of the point-to-set distance over an interval union is
    attained at interval endpoints or at midpoints of the other union's
    gaps, so a finite candidate scan is exact.
    """
    if not a or not b:
        return 0.0 if not a and not b else _INF

    def _candidates(src, other):
        pts = [e for lo, hi in src for e in (lo, hi)]
        ends = sorted(e for lo, hi in other for e in (lo, hi))
        for g0, g1 in zip(ends, ends[1:]):
            mid = 0.5 * (g0 + g1)
            if any(lo <= mid <= hi for lo, hi in src):
                pts.append(mid)
        return pts

    d_ab = max(_dist_to_intervals(x, b) for x in _candidates(a, b))
    d_ba = max(_dist_to_intervals(x, a) for x in _candidates(b, a))
    return max(d_ab, d_ba)


def _minkowski_intervals(a, b, wa=1.0, wb=1.0):
    out = [(wa * lo1 + wb * lo2, wa * hi1 + wb * hi2)
           for lo1, hi1 in a for lo2, hi2 in b]
    return _merge_intervals(out)


def _merge_intervals(ivals, gap=0.0):
    ivals = sorted(ivals)
    merged = [list(ivals[0])]
    for lo, hi in ivals[1:]:
        if lo <= merged[-1][1] + gap:
            merged[-1][1] = max(merged[-1][1], hi)
        else:
            merged.append([lo, hi])
    return [tuple(iv) for iv in merged]


# ---------------------------------------------------------------------------
# the checks
# ---------------------------------------------------------------------------

def check_envelope_identity(f, g, p, check_id=None, force=False):
    """e_mu(phi) = alpha e_mu f + (1-alpha) e_mu g on boundary-clean nodes
    (within twice the calibrated envelope grid error)."""
    params = pa.AverageParams.for_pair(f, g, p[0], p[1], force=force) \
        if not isinstance(p, pa.AverageParams) else p
    r = pa.proximal_average(f, g, params, force=force)
    e_phi, e_flags = tr.moreau_envelope(r.phi, params.mu, with_flags=True)
    ef = tr.moreau_envelope(f, params.mu).values
    eg = tr.moreau_envelope(g, params.mu).values
    combo = pa.combine_envelopes(params.alpha, ef, eg)
    mask = ~(r.exactness_flags | e_flags)
    viol, node = _worst(np.abs(e_phi.values - combo), f.spec, mask)
    tol = 2.0 * grid_error(f.spec, params.mu)
    cid = check_id or f"envelope_identity[{f.label}|{g.label}|a={params.alpha}|mu={params.mu}]"
    return _report(cid, viol, tol, node, int((~mask).sum()))


def check_sandwich(f, g, p, check_id=None, force=False):
    """alpha e f + (1-a) e g <= phi <= alpha h f + (1-a) h g <= alpha f +
    (1-a) g, with hard 1e-9 slack (the chain is exact for the discrete
    operators)."""
    params = pa.AverageParams.for_pair(f, g, p[0], p[1], force=force) \
        if not isinstance(p, pa.AverageParams) else p
    mu, alpha = params.mu, params.alpha
    r = pa.proximal_average(f, g, params, force=force)
    lo = pa.combine_envelopes(alpha,
                              tr.moreau_envelope(f, mu).values,
                              tr.moreau_envelope(g, mu).values)
    hull = pa.ext_combination(alpha,
                              tr.proximal_hull(f, mu).values,
                              tr.proximal_hull(g, mu).values)
    arith = pa.ext_combination(alpha, f.values, g.values)
    phi = r.phi.values
    v1 = lo - phi
    v2 = np.where(np.isfinite(hull), phi - hull, -_INF)
    v3 = np.where(np.isfinite(arith), hull - arith, -_INF)
    worst = max(_worst(v, f.spec) for v in (v1, v2, v3))
    cid = check_id or f"sandwich[{f.label}|{g.label}|a={alpha}|mu={mu}]"
    return _report(cid, worst[0], 1e-9, worst[1])


def check_prox_combination(f, g, p, sample_xs, check_id=None, force=False):
    """Hull of Prox_mu phi(x) equals the Minkowski combination
    alpha conv Prox f(x) + (1-alpha) conv Prox g(x) within grid spacing."""
    params = pa.AverageParams.for_pair(f, g, p[0], p[1], force=force) \
        if not isinstance(p, pa.AverageParams) else p
    r = pa.proximal_average(f, g, params, force=force)
    h = max(f.spec.steps)
    worst, wit = -_INF, None
    for x in sample_xs:
        hull_phi = tr.prox_map(r.phi, params.mu, x).hull_interval()
        mink = pa.minkowski_prox_combination(f, g, params, x, force=force)
        dev = max(abs(hull_phi.lo - mink.lo), abs(hull_phi.hi - mink.hi))
        if dev > worst:
            worst, wit = dev, x
    cid = check_id or f"prox_combination[{f.label}|{g.label}|a={params.alpha}|mu={params.mu}]"
    return _report(cid, worst, h * (1.0 + 1e-9), wit)


def check_mu_monotonicity(f, g, alpha, mus, check_id=None, force=False):
    """phi_mu pointwise nonincreasing in mu with hard 1e-9 slack.

    Uses the epi-sum route (the proximal hull at the alpha endpoints),
    whose minimization set does not depend on mu, so the continuum
    monotonicity survives discretization exactly.
    """
    prev = None
    worst, wit = -_INF, None
    for mu in sorted(mus):
        vals = _ic_route_values(f, g, alpha, mu, force)
        if prev is not None:
            with np.errstate(invalid="ignore"):
                diff = vals - prev
            diff = np.where(np.isnan(diff), -_INF, diff)
            v, node = _worst(diff, f.spec)
            if v > worst:
                worst, wit = v, (node, mu)
        prev = vals
    cid = check_id or f"mu_monotonicity[{f.label}|{g.label}|a={alpha}]"
    return _report(cid, worst, 1e-9, wit)


def _ic_route_values(f, g, alpha, mu, force):
    if alpha == 0.0:
        return pa.shifted_hull(g, mu)
    if alpha == 1.0:
        return pa.shifted_hull(f, mu)
    params = pa.AverageParams.for_pair(f, g, alpha, mu, force=force)
    return pa.proximal_average_infconv(f, g, params, force=force).phi.values


def check_alpha_endpoints(f, g, mu, check_id=None, force=False):
    """phi at alpha=0 and alpha=1 reduces to the proximal hulls of g and f
    with zero tolerance (bitwise on the grid)."""
    r0 = pa.proximal_average(f, g, (0.0, mu), force=force)
    r1 = pa.proximal_average(f, g, (1.0, mu), force=force)
    hg = tr.proximal_hull(g, mu).values
    hf = tr.proximal_hull(f, mu).values
    v0, n0 = _worst(np.abs(r0.phi.values - hg), f.spec)
    v1, n1 = _worst(np.abs(r1.phi.values - hf), f.spec)
    worst, wit = max((v0, n0), (v1, n1))
    cid = check_id or f"alpha_endpoints[{f.label}|{g.label}|mu={mu}]"
    return _report(cid, worst, 0.0, wit)


def check_alpha_continuity(f, g, mu, alphas, check_id=None, force=False):
    """Uniform-on-grid continuity of alpha -> phi: consecutive averages
    differ by at most |da| * ||e_mu f - e_mu g||_inf (an exact modulus for
    the discrete operators); a grid proxy for the epi-topology statement."""
    ef = tr.moreau_envelope(f, mu).values
    eg = tr.moreau_envelope(g, mu).values
    bound = float(np.max(np.abs(ef - eg)))
    alphas = sorted(alphas)
    results = [pa.proximal_average(f, g, (a, mu), force=force).phi.values
               for a in alphas]
    worst, wit = -_INF, None
    for (a1, v1), (a2, v2) in zip(zip(alphas, results),
                                  zip(alphas[1:], results[1:])):
        dev = float(np.max(np.abs(v2 - v1))) - (a2 - a1) * bound
        if dev > worst:
            worst, wit = dev, (a1, a2)
    cid = check_id or f"alpha_continuity[{f.label}|{g.label}|mu={mu}]"
    return _report(cid, worst, 1e-9 * (1.0 + bound), wit)


def check_mu_zero_limit(f, g, alpha, mus=(0.2, 0.1, 0.05, 0.025),
                        gap_bound=MU_ZERO_GAP_PIN, check_id=None,
                        force=False):
    """phi_mu increases to alpha f + (1-alpha) g as mu decreases: the
    uniform-on-grid gap must shrink monotonically along ``mus`` and end
    below the pinned regression bound (a compact-convergence proxy for the
    epi-limit; exact monotonicity via the epi-sum route)."""
    target = pa.ext_combination(alpha, f.values, g.values)
    runs = []
    union_flags = np.zeros(f.spec.shape(), dtype=bool)
    for mu in sorted(mus, reverse=True):
        if 0.0 < alpha < 1.0:
            r = pa.proximal_average_infconv(f, g, (alpha, mu), force=force)
            vals, flags = r.phi.values, r.exactness_flags
        else:
            vals = _ic_route_values(f, g, alpha, mu, force)
            flags = np.zeros(f.spec.shape(), dtype=bool)
        union_flags |= flags
        runs.append((mu, vals))
    mask = ~union_flags & np.isfinite(target)
    gaps = [(mu, float(np.max((target - vals)[mask]))) for mu, vals in runs]
    worst_incr = max((g2 - g1 for (_, g1), (_, g2) in zip(gaps, gaps[1:])),
                     default=-_INF)
    final_gap = gaps[-1][1]
    violation = max(worst_incr, final_gap - gap_bound)
    cid = check_id or f"mu_zero_limit[{f.label}|{g.label}|a={alpha}]"
    return _report(cid, violation, 1e-9, {"gaps": gaps},
                   int(union_flags.sum()))


def check_infimum_formulas(f, g, p, check_id=None, force=False):
    """inf phi = inf[alpha e f + (1-a) e g] and argmin phi = argmin of that
    combination; when the raw argmins intersect, additionally
    min phi = alpha min f + (1-a) min g with argmin phi = the intersection."""
    params = pa.AverageParams.for_pair(f, g, p[0], p[1], force=force) \
        if not isinstance(p, pa.AverageParams) else p
    mu, alpha = params.mu, params.alpha
    r = pa.proximal_average(f, g, params, force=force)
    combo = pa.combine_envelopes(alpha,
                                 tr.moreau_envelope(f, mu).values,
                                 tr.moreau_envelope(g, mu).values)
    h = max(f.spec.steps)
    tol_val = 2.0 * grid_error(f.spec, mu)
    inf_dev = abs(float(np.min(r.phi.values)) - float(np.min(combo)))
    am_phi = tr.argmin_set(r.phi, cluster_tol=tol_val)
    am_combo = tr.argmin_set(f.with_values(combo, threshold=_INF),
                             cluster_tol=tol_val)
    set_dev = hausdorff_intervals(_intervals_of(am_phi),
                                  _intervals_of(am_combo))
    violations = [(inf_dev / max(tol_val, 1e-300), inf_dev, "inf"),
                  (set_dev / (h * (1 + 1e-9)), set_dev, "argmin")]
    # intersection branch (only stated for interior alpha)
    qf = tr.argmin_set(f, cluster_tol=1e-9)
    qg = tr.argmin_set(g, cluster_tol=1e-9)
    inter = [iv for iv in _intersect_intervals(_intervals_of(qf),
                                               _intervals_of(qg))]
    if inter and 0.0 < alpha < 1.0:
        want_min = alpha * qf.attained_value + (1 - alpha) * qg.attained_value
        min_dev = abs(float(np.min(r.phi.values)) - want_min)
        iset_dev = hausdorff_intervals(_intervals_of(am_phi), inter)
        violations.append((min_dev / max(tol_val, 1e-300), min_dev, "min"))
        violations.append((iset_dev / (h * (1 + 1e-9)), iset_dev,
                           "argmin-intersection"))
    rel, dev, which = max(violations)
    cid = check_id or f"infimum_formulas[{f.label}|{g.label}|a={alpha}|mu={mu}]"
    return _report(cid, rel, 1.0, (which, dev))


def _intersect_intervals(a, b, slack=0.0):
    out = []
    for lo1, hi1 in a:
        for lo2, hi2 in b:
            lo, hi = max(lo1, lo2) - slack, min(hi1, hi2) + slack
            if lo <= hi:
                out.append((max(lo1, lo2), min(hi1, hi2)))
    return _merge_intervals(out) if out else []


def check_shifted_argmin(f, g, p, check_id=None, force=False):
    """argmin(phi + q/2mu) equals the Minkowski combination of convexified
    argmins of the shifted inputs (i.e. Prox_mu phi(0) = alpha conv
    Prox_mu f(0) + ... ), within grid spacing; inf additivity within twice
    the grid error."""
    params = pa.AverageParams.for_pair(f, g, p[0], p[1], force=force) \
        if not isinstance(p, pa.AverageParams) else p
    mu, alpha = params.mu, params.alpha
    origin = 0.0 if f.spec.dim == 1 else (0.0, 0.0)
    r = pa.proximal_average(f, g, params, force=force)
    left = tr.prox_map(r.phi, mu, origin).hull_interval()
    hull_f = tr.prox_map(f, mu, origin).hull_interval()
    hull_g = tr.prox_map(g, mu, origin).hull_interval()
    mink = tr.Interval(alpha * hull_f.lo + (1 - alpha) * hull_g.lo,
                       alpha * hull_f.hi + (1 - alpha) * hull_g.hi)
    h = max(f.spec.steps)
    set_dev = max(abs(left.lo - mink.lo), abs(left.hi - mink.hi))
    sq = tr.squared_norm_grid(f.spec) / (2.0 * mu)
    inf_phi = float(np.min(r.phi.values + sq))
    inf_f = float(np.min(f.values + sq))
    inf_g = float(np.min(g.values + sq))
    add_dev = abs(inf_phi - (alpha * inf_f + (1 - alpha) * inf_g))
    tol_val = 2.0 * grid_error(f.spec, mu)
    rel = max(set_dev / (h * (1 + 1e-9)), add_dev / max(tol_val, 1e-300))
    cid = check_id or f"shifted_argmin[{f.label}|{g.label}|a={alpha}|mu={mu}]"
    return _report(cid, rel, 1.0, {"set_dev": set_dev, "inf_dev": add_dev})


def check_infconv_minimizer_lemma(f1, f2, check_id=None):
    """argmin(f1 box f2) = argmin f1 + argmin f2 and inf additivity; both
    are exact for the discrete epi-sum."""
    box = tr.inf_convolution(f1, f2)
    am = tr.argmin_set(box, cluster_tol=1e-9)
    a1 = tr.argmin_set(f1, cluster_tol=1e-9)
    a2 = tr.argmin_set(f2, cluster_tol=1e-9)
    mink = _minkowski_intervals(_intervals_of(a1), _intervals_of(a2))
    set_dev = hausdorff_intervals(_intervals_of(am), mink)
    scale = 1.0 + abs(a1.attained_value) + abs(a2.attained_value)
    add_dev = abs(am.attained_value -
                  (a1.attained_value + a2.attained_value))
    h = max(f1.spec.steps)
    rel = max(set_dev / (h * (1 + 1e-9)), add_dev / (1e-12 * scale))
    cid = check_id or f"infconv_minimizer_lemma[{f1.label}|{f2.label}]"
    return _report(cid, rel, 1.0, {"set_dev": set_dev, "inf_dev": add_dev})


def check_coercivity_preservation(f, g, p, check_id=None, force=False):
    """A norm-affine minorant gamma||x|| + beta fitted under f and g also
    minorizes phi (level-coercivity transfer), and phi(x)/||x|| stays above
    gamma/2 on the outer 10% of nodes."""
    params = pa.AverageParams.for_pair(f, g, p[0], p[1], force=force) \
        if not isinstance(p, pa.AverageParams) else p
    r = pa.proximal_average(f, g, params, force=force)
    spec = f.spec
    norms = np.sqrt(tr.squared_norm_grid(spec))
    m = np.minimum(f.values, g.values)
    outer = norms >= 0.9 * float(np.max(norms))
    m_min = float(np.min(m))
    finite_outer = outer & np.isfinite(m)
    gamma = 0.5 * float(np.min((m[finite_outer] - m_min)
                               / norms[finite_outer]))
    beta = float(np.min(np.where(np.isfinite(m), m - gamma * norms, _INF)))
    minorant = gamma * norms + beta
    tol_val = 2.0 * grid_error(spec, params.mu) + 1e-9
    mask = ~r.exactness_flags
    v1, n1 = _worst(minorant - r.phi.values, spec, mask)
    ratio_mask = mask & outer & (norms > 0)
    ratios = np.divide(r.phi.values, norms, out=np.full(norms.shape, _INF),
                       where=norms > 0)
    v2, n2 = _worst(0.5 * gamma - ratios, spec, ratio_mask)
    rel = max(v1 / tol_val, v2 / max(0.5 * abs(gamma), 1e-9))
    cid = check_id or f"coercivity[{f.label}|{g.label}|a={params.alpha}|mu={params.mu}]"
    return _report(cid, rel, 1.0, {"gamma": gamma, "beta": beta,
                                   "minorant_dev": v1, "ratio_dev": v2},
                   int((~mask).sum()))


def check_subdifferential(f, g, p, xs, expect_smooth, slope_constant,
                          check_id=None, force=False):
    """Subdifferential structure of the average via mu-proximality.

    (i) first-order optimality transported through the prox: for every
    sampled x and every prox cluster representative w of phi, (x - w)/mu
    must lie between the one-sided grid slopes of phi at w.
    (ii) interior smoothness: one-sided slopes agree within
    slope_constant * h at every interior node when one input is smooth
    (``expect_smooth``); with both inputs kinked, a kink must survive.
    """
    params = pa.AverageParams.for_pair(f, g, p[0], p[1], force=force) \
        if not isinstance(p, pa.AverageParams) else p
    mu = params.mu
    r = pa.proximal_average(f, g, params, force=force)
    spec = f.spec
    h = spec.steps[0]
    vals = r.phi.values
    xs_nodes = spec.axis_nodes(0)
    slopes = np.diff(vals) / h
    tol_opt = slope_constant * h * (1.0 + 1.0 / mu)
    worst_opt, wit_opt = -_INF, None
    for x in xs:
        prox = tr.prox_map(r.phi, mu, x)
        for w in prox.points:
            i = int(np.clip(np.searchsorted(xs_nodes, w), 1,
                            len(xs_nodes) - 2))
            ls = min(slopes[i - 1], slopes[i])
            rs = max(slopes[i - 1], slopes[i])
            s = (float(x) - w) / mu
            dev = max(ls - s, s - rs, 0.0)
            if dev > worst_opt:
                worst_opt, wit_opt = dev, (x, w)
    gaps = np.abs(np.diff(slopes))
    interior = slice(1, len(gaps) - 1)
    max_gap = float(np.max(gaps[interior]))
    if expect_smooth:
        smooth_viol = max_gap / (slope_constant * h) - 1.0
    else:
        # a genuine kink must survive: the largest slope jump stays O(1)
        smooth_viol = 1.0 - max_gap / (10.0 * slope_constant * h)
    rel = max(worst_opt / tol_opt, smooth_viol)
    cid = check_id or (f"subdifferential[{f.label}|{g.label}|a={params.alpha}"
                       f"|mu={mu}|smooth={expect_smooth}]")
    return _report(cid, rel, 1.0,
                   {"optimality_dev": worst_opt, "witness": wit_opt,
                    "max_slope_gap": max_gap})


def calibrate_slope_constant(spec, mu, safety=8.0):
    """Interior slope-gap scale measured on the quadratic average (the
    fixtures with exact closed forms); checks multiply this by ``safety``."""
    from .func_model import FunctionDescriptor, QuadraticFunction

    q2 = sample_to_grid(FunctionDescriptor(
        "quadratic", QuadraticFunction(((2.0,),))), spec)
    q1 = sample_to_grid(FunctionDescriptor(
        "quadratic", QuadraticFunction(((1.0,),))), spec)
    r = pa.proximal_average(q2, q1, (0.5, mu))
    h = spec.steps[0]
    slopes = np.diff(r.phi.values) / h
    gaps = np.abs(np.diff(slopes))
    return safety * max(float(np.max(gaps[1:-1])) / h, 1.0)


def check_lipschitz_gradient(f, g, p, lipschitz_f, check_id=None,
                             force=False):
    """With f mu-proximal and grad f Lipschitz, phi has a Lipschitz
    gradient: second-difference quotients of phi stay within the bound
    derived from the strong convexity of the conjugate combination, and
    above -1/mu (mu-proximality)."""
    params = pa.AverageParams.for_pair(f, g, p[0], p[1], force=force) \
        if not isinstance(p, pa.AverageParams) else p
    mu, alpha = params.mu, params.alpha
    if not 0.0 < alpha < 1.0:
        raise ValueError("Lipschitz-gradient check needs interior alpha")
    r = pa.proximal_average(f, g, params, force=force)
    h = max(f.spec.steps)
    quot = (r.phi.values[2:] - 2.0 * r.phi.values[1:-1]
            + r.phi.values[:-2]) / (h * h)
    mask = ~(r.exactness_flags[1:-1])
    upper = (lipschitz_f + 1.0 / mu) / alpha - 1.0 / mu
    v_up = float(np.max(np.where(mask, quot, -_INF))) - 1.05 * upper
    v_dn = float(np.max(np.where(mask, -quot, -_INF))) - 1.05 / mu
    rel = max(v_up, v_dn) / (1.0 + upper)
    cid = check_id or f"lipschitz_gradient[{f.label}|{g.label}|a={alpha}|mu={mu}]"
    return _report(cid, rel, 1e-9,
                   {"max_quotient": float(np.max(quot[mask])),
                    "bound": upper},
                   int((~mask).sum()))


def check_envelope_equivalences(f, g, lam, mu, check_id=None):
    """Equivalence of e_lam f = e_lam g, h_lam f = h_lam g, Lasry-Lions
    equality, and equality of conv(. + q/2lam); when they hold, the closed
    convex hulls must also agree.  Passes when the five predicates are
    consistent (all true or all false)."""
    scale = 1.0 + max(float(np.max(np.abs(v[np.isfinite(v)])))
                      for v in (f.values, g.values))
    tol = 1e-11 * scale
    devs = {}
    devs["envelope"] = float(np.max(np.abs(
        tr.moreau_envelope(f, lam).values - tr.moreau_envelope(g, lam).values)))
    devs["hull"] = float(np.max(np.abs(
        tr.proximal_hull(f, lam).values - tr.proximal_hull(g, lam).values)))
    devs["lasry_lions"] = float(np.max(np.abs(
        tr.lasry_lions(f, lam, mu).values - tr.lasry_lions(g, lam, mu).values)))
    shift = tr.squared_norm_grid(f.spec) / (2.0 * lam)
    cf = tr.convex_hull_grid(f.with_values(f.values + shift, threshold=_INF))
    cg = tr.convex_hull_grid(g.with_values(g.values + shift, threshold=_INF))
    devs["conv_shifted"] = float(np.max(np.abs(cf.values - cg.values)))
    flags = {k: d <= tol for k, d in devs.items()}
    consistent = len(set(flags.values())) == 1
    if consistent and all(flags.values()):
        hf = tr.convex_hull_grid(f)
        hg = tr.convex_hull_grid(g)
        both = np.isfinite(hf.values) & np.isfinite(hg.values)
        dev = float(np.max(np.abs(hf.values - hg.values)[both]))
        devs["conv_hull"] = dev
        consistent = dev <= tol
    violation = 0.0 if consistent else 1.0
    cid = check_id or f"envelope_equivalences[{f.label}|{g.label}|lam={lam}|mu={mu}]"
    return _report(cid, violation, 0.5, devs)


def check_prox_vs_resolvent(fixture, mu, xs, grid_spec=None, check_id=None,
                            label=""):
    """Prox is contained in the resolvent at every sampled x; equality
    (Hausdorff within grid spacing) exactly when the fixture is
    mu-proximal."""
    if not isinstance(fixture, Piecewise1D):
        raise TypeError("resolvent comparison needs a Piecewise1D fixture")
    spec = grid_spec or GridSpec.make(-3.0, 3.0, 1201)
    from .func_model import FunctionDescriptor

    gf = sample_to_grid(FunctionDescriptor("piecewise1d", fixture), spec,
                        label=label or "piecewise")
    prox_threshold = _piecewise_proximality_threshold(fixture)
    expect_equal = mu < prox_threshold
    h = max(spec.steps)
    worst, wit = -_INF, None
    for x in xs:
        prox_pts = tr.prox_map(gf, mu, x).points
        res_pts = tr.resolvent_1d(fixture, mu, x).points
        incl = max(min(abs(p - w) for w in res_pts) for p in prox_pts)
        dev = incl
        if expect_equal:
            dev = max(dev, max(min(abs(p - w) for p in prox_pts)
                               for w in res_pts))
        if dev > worst:
            worst, wit = dev, x
    cid = check_id or f"prox_vs_resolvent[{label}|mu={mu}]"
    return _report(cid, worst, h * (1.0 + 1e-9),
                   {"x": wit, "expect_equal": expect_equal})


def _piecewise_proximality_threshold(pw):
    """Largest lam with all second derivatives of the pieces >= -1/lam."""
    worst = 0.0
    for _, _, coeffs in pw.regions():
        if coeffs is None or len(coeffs) < 3:
            continue
        if len(coeffs) > 3:
            return 0.0  # curvature unbounded below is possible; be safe
        worst = min(worst, 2.0 * coeffs[2])
    return _INF if worst >= 0.0 else 1.0 / (-worst)


def check_prox_display(fixture_gf, mu, expected, check_id=None):
    """Grid prox map reproduces a displayed set-valued mapping at sampled
    points (Hausdorff within grid spacing per point)."""
    h = max(fixture_gf.spec.steps)
    worst, wit = -_INF, None
    for x, pts in expected:
        got = tr.prox_map(fixture_gf, mu, x).points
        dev = max(max(min(abs(p - q) for q in pts) for p in got),
                  max(min(abs(p - q) for p in got) for q in pts))
        if dev > worst:
            worst, wit = dev, x
    cid = check_id or f"prox_display[{fixture_gf.label}|mu={mu}]"
    return _report(cid, worst, h * (1.0 + 1e-9), wit)


# ---------------------------------------------------------------------------
# the paper suite
# ---------------------------------------------------------------------------

# displayed prox mappings (piecewise rules) for the two worked fixtures
def fk_prox_display(x):
    """Set values of Prox_{1/2} of the bump family at x."""
    if x >= 1.0 or x <= -1.0:
        return (x,)
    if x > 0.0:
        return (1.0,)
    if x < 0.0:
        return (-1.0,)
    return (-1.0, 1.0)


def section10_prox_display(x):
    """Set values of the displayed prox map of the section-10 function."""
    if x >= 1.0 or x <= -1.0:
        return (x,)
    if x > 0.0:
        return (1.0,)
    if x < 0.0:
        return (-1.0,)
    return (-1.0, 0.0, 1.0)


_SUITE_OPS = (
    "envelope_identity", "sandwich", "prox_combination", "mu_monotonicity",
    "alpha_endpoints", "alpha_continuity", "mu_zero_limit",
    "infimum_formulas", "shifted_argmin", "infconv_minimizer_lemma",
    "coercivity", "subdifferential", "lipschitz_gradient",
    "envelope_equivalences", "prox_vs_resolvent", "prox_display",
)


def paper_fixtures(spec=None):
    """Builtin fixture matrix sampled on the standard grid."""
    from .func_model import (FunctionDescriptor, QuadraticFunction,
                             builtin_descriptor)

    spec = spec or GridSpec.make(-3.0, 3.0, 1201)

    def quad(a):
        return FunctionDescriptor("quadratic", QuadraticFunction(((a,),)))

    names = {
        "fk03": builtin_descriptor("fk", eps=0.3),
        "fk05": builtin_descriptor("fk", eps=0.5),
        "fk07": builtin_descriptor("fk", eps=0.7),
        "dw": builtin_descriptor("double_well"),
        "g10": builtin_descriptor("section10_g"),
        "q1": quad(1.0),
        "q2": quad(2.0),
        "qm1": builtin_descriptor("neg_half_sq"),
        "ind0": builtin_descriptor("indicator_point", point=0.0),
    }
    return {k: sample_to_grid(d, spec, label=k) for k, d in names.items()}


def suite_mus(lambda_bar):
    """mu grid {0.1, 0.25, 0.45*lambda_bar}; the scaled entry falls back to
    0.45 when the joint threshold is infinite."""
    third = 0.45 * lambda_bar if lambda_bar < _INF else 0.45
    return (0.1, 0.25, third)


SUITE_ALPHAS = (0.0, 0.3, 0.5, 0.7, 1.0)


def run_all(fixture_pairs=None, params=None, spec=None, progress=None):
    """Run every diagnostics operation over the fixture matrix.

    Returns reports sorted by check_id; the aggregate status is the
    conjunction of all ``passed`` flags.  A coverage assertion guarantees
    each check operation appears at least once.
    """
    spec = spec or GridSpec.make(-3.0, 3.0, 1201)
    fx = paper_fixtures(spec)
    params = params or {}
    alphas = params.get("alphas", SUITE_ALPHAS)
    sample_xs = params.get("sample_xs", tuple(np.linspace(-2.0, 2.0, 11)))
    if fixture_pairs is None:
        fixture_pairs = [
            (fx["fk03"], fx["fk07"]),
            (fx["q2"], fx["qm1"]),
            (fx["ind0"], fx["q1"]),
        ]
    reports = []

    def emit(report):
        reports.append(report)
        if progress is not None:
            progress(report)

    for f, g in fixture_pairs:
        lam_bar = min(f.threshold, g.threshold)
        mus = params.get("mus", suite_mus(lam_bar))
        for mu in mus:
            for alpha in alphas:
                emit(check_envelope_identity(f, g, (alpha, mu)))
                emit(check_sandwich(f, g, (alpha, mu)))
                emit(check_prox_combination(f, g, (alpha, mu), sample_xs))
            emit(check_alpha_continuity(f, g, mu, alphas))
            emit(check_infimum_formulas(f, g, (0.5, mu)))
            emit(check_shifted_argmin(f, g, (0.5, mu)))
        emit(check_alpha_endpoints(f, g, 0.25))
        for alpha in alphas:
            emit(check_mu_monotonicity(f, g, alpha, mus))

    # limit behavior on the standard continuous pair
    limit_spec = GridSpec.make(-2.0, 2.0, 801)
    limit_fx = paper_fixtures(limit_spec)
    emit(check_mu_zero_limit(limit_fx["fk03"], limit_fx["dw"], 0.7))

    # epi-sum minimizer lemma
    emit(check_infconv_minimizer_lemma(fx["dw"], fx["q1"]))
    emit(check_infconv_minimizer_lemma(fx["fk03"], fx["ind0"]))

    # coercivity transfer on a coercive pair
    emit(check_coercivity_preservation(fx["dw"], fx["q2"], (0.5, 0.25)))

    # subdifferential structure and gradient Lipschitz transfer
    slope_c = calibrate_slope_constant(spec, 0.25)
    sub_xs = tuple(np.linspace(-2.0, 2.0, 9))
    emit(check_subdifferential(fx["q2"], fx["fk05"], (0.5, 0.25), sub_xs,
                               True, slope_c))
    slope_c_half = calibrate_slope_constant(spec, 0.5)
    emit(check_subdifferential(fx["fk05"], fx["fk05"], (0.5, 0.5), sub_xs,
                               False, slope_c_half))
    emit(check_lipschitz_gradient(fx["q2"], fx["fk05"], (0.5, 0.25), 2.0))

    # envelope equivalence lemma: a positive and a negative instance
    emit(check_envelope_equivalences(fx["fk03"], fx["fk07"], 0.5, 0.25))
    emit(check_envelope_equivalences(fx["fk03"], fx["dw"], 0.5, 0.25))

    # prox versus resolvent on the bump family
    from .func_model import builtin_descriptor

    fk_pw = builtin_descriptor("fk", eps=0.5).resolve().payload
    emit(check_prox_vs_resolvent(fk_pw, 0.5,
                                 (0.25, 0.1, -0.3, 0.75, -2.0),
                                 grid_spec=spec, label="fk05"))
    emit(check_prox_vs_resolvent(fk_pw, 0.25,
                                 tuple(np.linspace(-2.0, 2.0, 21)),
                                 grid_spec=spec, label="fk05"))

    # displayed prox mappings of the two worked examples
    display_xs = (0.0, 0.5, -0.5, 2.0, -2.0)
    emit(check_prox_display(fx["fk05"], 0.5,
                            [(x, fk_prox_display(x)) for x in display_xs]))
    xs11 = tuple(np.linspace(-2.5, 2.5, 11))
    emit(check_prox_display(fx["g10"], 0.5,
                            [(x, section10_prox_display(x)) for x in xs11]))

    covered = {r.check_id.split("[")[0] for r in reports}
    missing = set(_SUITE_OPS) - covered
    if missing:
        raise AssertionError(f"suite does not cover: {sorted(missing)}")
    reports.sort(key=lambda r: r.check_id)
    return reports
