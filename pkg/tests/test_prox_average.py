import math

import numpy as np
import pytest

from proxlab import prox_average as pa
from proxlab import quadratic as qd
from proxlab import transforms as tr
from proxlab.errors import (
    AlphaEndpoint,
    GridMismatch,
    HeuristicThreshold,
    MuAboveThreshold,
)
from proxlab.func_model import GridSpec, builtin_descriptor, sample_to_grid

from conftest import quad_descriptor

INF = math.inf


def params_of(f, g, alpha, mu):
    return pa.AverageParams.for_pair(f, g, alpha, mu)


# ---------------------------------------------------------------------------
# parameter validation
# ---------------------------------------------------------------------------

def test_params_validate_mu_strictly_below_threshold(q2, qm1):
    with pytest.raises(MuAboveThreshold):
        params_of(q2, qm1, 0.5, 1.0)  # lambda_bar = 1
    with pytest.raises(MuAboveThreshold):
        pa.AverageParams(0.5, 0.0)
    with pytest.raises(ValueError):
        pa.AverageParams(1.2, 0.5)
    p = params_of(q2, qm1, 0.5, 0.95)
    assert p.threshold_bar == 1.0


def test_grid_mismatch(q1):
    other = sample_to_grid(quad_descriptor(1.0), GridSpec.make(-3, 3, 601))
    with pytest.raises(GridMismatch):
        pa.proximal_average(q1, other, (0.5, 0.5))


def test_heuristic_threshold_requires_force(spec, q1):
    import yaml

    xs = spec.axis_nodes(0)
    doc = {"kind": "samples",
           "grid": {"lower": -3, "upper": 3, "points": 1201},
           "values": [float(v) for v in 0.5 * xs * xs]}
    from proxlab.func_model import parse_descriptor

    sampled = sample_to_grid(parse_descriptor(yaml.safe_dump(doc)), spec)
    assert sampled.threshold_is_heuristic
    with pytest.raises(HeuristicThreshold):
        pa.proximal_average(sampled, q1, (0.5, 0.25))
    pa.proximal_average(sampled, q1, (0.5, 0.25), force=True)


# ---------------------------------------------------------------------------
# basic properties (the defining theorem)
# ---------------------------------------------------------------------------

def test_envelope_identity(fk03, fk07, spec):
    mu, alpha = 0.25, 0.4
    r = pa.proximal_average(fk03, fk07, (alpha, mu))
    e_phi, e_flags = tr.moreau_envelope(r.phi, mu, with_flags=True)
    combo = pa.combine_envelopes(alpha,
                                 tr.moreau_envelope(fk03, mu).values,
                                 tr.moreau_envelope(fk07, mu).values)
    ok = ~(r.exactness_flags | e_flags)
    assert np.max(np.abs(e_phi.values - combo)[ok]) \
        <= 2 * tr.grid_error(spec, mu)


def test_average_is_mu_proximal(fk03, double_well):
    r = pa.proximal_average(fk03, double_well, (0.35, 0.2))
    assert tr.is_lambda_proximal(r.phi, 0.2).ok


def test_identical_mu_proximal_inputs_reproduce_f(fk05):
    # fk is 1/3-proximal: the average of (f, f) at mu = 1/3 is f itself
    r = pa.proximal_average(fk05, fk05, (0.37, 1.0 / 3.0))
    assert np.max(np.abs(r.phi.values - fk05.values)) <= 1e-12


def test_alpha_endpoints_are_hulls_bitwise(fk03, fk07):
    r0 = pa.proximal_average(fk03, fk07, (0.0, 0.25))
    r1 = pa.proximal_average(fk03, fk07, (1.0, 0.25))
    assert np.array_equal(r0.phi.values, tr.proximal_hull(fk07, 0.25).values)
    assert np.array_equal(r1.phi.values, tr.proximal_hull(fk03, 0.25).values)


def test_hull_invariance(fk03, fk07):
    mu = 0.25
    hf = tr.proximal_hull(fk03, mu)
    hg = tr.proximal_hull(fk07, mu)
    direct = pa.proximal_average(fk03, fk07, (0.4, mu))
    hulled = pa.proximal_average(
        hf.with_values(hf.values, threshold=fk03.threshold),
        hg.with_values(hg.values, threshold=fk07.threshold),
        (0.4, mu))
    assert np.max(np.abs(direct.phi.values - hulled.phi.values)) <= 1e-12


def test_quadratic_average_matches_matrix_oracle(q2, q1, spec):
    r = pa.proximal_average(q2, q1, (0.5, 1.0))
    m = qd.quad_prox_average([[2.0]], [[1.0]], 0.5, 1.0).phi.matrix[0, 0]
    assert m == pytest.approx(1.4, abs=1e-12)
    xs = spec.axis_nodes(0)
    ok = ~r.exactness_flags
    dev = np.abs(r.phi.values - 0.5 * m * xs * xs)[ok]
    assert np.max(dev) <= 2 * tr.grid_error(spec, 1.0)


def test_domain_formula_with_indicators(spec):
    a = sample_to_grid(builtin_descriptor("indicator_point", point=1.0), spec)
    b = sample_to_grid(builtin_descriptor("indicator_point", point=-0.5), spec)
    alpha = 0.5
    r = pa.proximal_average(a, b, (alpha, 0.5))
    # dom phi = alpha*{1} + (1-alpha)*{-0.5} = {0.25}; discretely the
    # unflagged finite nodes collapse to that point
    good = np.isfinite(r.phi.values) & ~r.exactness_flags
    xs = spec.axis_nodes(0)[good]
    assert len(xs) >= 1
    assert np.max(np.abs(xs - 0.25)) <= max(spec.steps)


def test_domain_full_when_one_input_full(spec, q1):
    ind = sample_to_grid(builtin_descriptor("indicator_point", point=0.0), spec)
    r = pa.proximal_average(ind, q1, (0.5, 0.5))
    assert np.isfinite(r.phi.values).all()


def test_lower_bound_preservation(fk03, double_well, spec):
    # psi = gamma|x| + beta fitted under both inputs also minorizes phi
    xs = spec.axis_nodes(0)
    psi = 0.1 * np.abs(xs) - 0.5
    assert np.all(fk03.values >= psi)
    assert np.all(double_well.values >= psi)
    r = pa.proximal_average(fk03, double_well, (0.45, 0.2))
    ok = ~r.exactness_flags
    assert np.min((r.phi.values - psi)[ok]) >= -2 * tr.grid_error(spec, 0.2)


# ---------------------------------------------------------------------------
# epi-sum route
# ---------------------------------------------------------------------------

def test_routes_agree(fk03, double_well, spec):
    for alpha, mu in ((0.3, 0.25), (0.5, 0.1), (0.7, 0.45)):
        rd = pa.proximal_average(fk03, double_well, (alpha, mu))
        ri = pa.proximal_average_infconv(fk03, double_well, (alpha, mu))
        ok = ~(rd.exactness_flags | ri.exactness_flags)
        dev = np.abs(rd.phi.values - ri.phi.values)[ok]
        assert np.max(dev) <= 3 * tr.grid_error(spec, mu)


def test_infconv_route_quadratics(q2, q1, spec):
    r = pa.proximal_average_infconv(q2, q1, (0.5, 1.0))
    xs = spec.axis_nodes(0)
    ok = ~r.exactness_flags
    dev = np.abs(r.phi.values - 0.5 * 1.4 * xs * xs)[ok]
    assert np.max(dev) <= 3 * tr.grid_error(spec, 1.0)


def test_infconv_route_rejects_endpoints(fk03, fk07):
    with pytest.raises(AlphaEndpoint):
        pa.proximal_average_infconv(fk03, fk07, (0.0, 0.25))


def test_identical_convex_inputs(q1):
    r = pa.proximal_average_infconv(q1, q1, (0.5, 0.5))
    ok = ~r.exactness_flags
    assert np.max(np.abs(r.phi.values - q1.values)[ok]) <= 1e-9


def test_mu_monotone_exact_for_infconv_route(fk03, double_well):
    prev = None
    for mu in (0.1, 0.2, 0.4, 0.8):
        vals = pa.proximal_average_infconv(fk03, double_well,
                                           (0.5, mu)).phi.values
        if prev is not None:
            assert np.max(vals - prev) <= 1e-9
        prev = vals


# ---------------------------------------------------------------------------
# prox of the average
# ---------------------------------------------------------------------------

def test_prox_combination_interval(fk03, fk07, spec):
    got = pa.prox_of_average(fk03, fk07, (0.5, 0.5), 0.0)
    hull = got.hull_interval()
    assert hull.lo == pytest.approx(-1.0, abs=max(spec.steps))
    assert hull.hi == pytest.approx(1.0, abs=max(spec.steps))
    mink = pa.minkowski_prox_combination(fk03, fk07, (0.5, 0.5), 0.0)
    assert mink.lo == pytest.approx(-1.0, abs=max(spec.steps))
    assert mink.hi == pytest.approx(1.0, abs=max(spec.steps))


def test_prox_of_convex_pair_is_prox(q1, spec):
    got = pa.prox_of_average(q1, q1, (0.3, 1.0), 1.4)
    direct = tr.prox_map(q1, 1.0, 1.4)
    assert len(got.points) == 1
    assert got.points[0] == pytest.approx(direct.points[0],
                                          abs=max(spec.steps))


def test_prox_slope_five_twelfths(q2, q1, spec):
    got = pa.prox_of_average(q2, q1, (0.5, 1.0), 1.0)
    assert len(got.points) == 1
    assert got.points[0] == pytest.approx(5.0 / 12.0, abs=max(spec.steps))


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------

def test_alpha_sweep_endpoints(fk03, fk07):
    results = pa.alpha_sweep(fk03, fk07, 0.25, [0.0, 1.0])
    assert np.array_equal(results[0].phi.values,
                          tr.proximal_hull(fk07, 0.25).values)
    assert np.array_equal(results[1].phi.values,
                          tr.proximal_hull(fk03, 0.25).values)


def test_alpha_sweep_identical_inputs(fk05):
    results = pa.alpha_sweep(fk05, fk05, 0.5, [0.5])
    hull = tr.proximal_hull(fk05, 0.5)
    assert np.max(np.abs(results[0].phi.values - hull.values)) <= 1e-12


def test_alpha_sweep_quadratics_match_closed_form(q2, q1, spec):
    alphas = [0.1, 0.35, 0.6, 0.9]
    results = pa.alpha_sweep(q2, q1, 0.5, alphas)
    xs = spec.axis_nodes(0)
    for alpha, r in zip(alphas, results):
        m = qd.quad_prox_average([[2.0]], [[1.0]], alpha, 0.5).phi.matrix[0, 0]
        ok = ~r.exactness_flags
        assert np.max(np.abs(r.phi.values - 0.5 * m * xs * xs)[ok]) \
            <= 2 * tr.grid_error(spec, 0.5)


def test_mu_sweep_monotone_and_limit(fk03, double_well):
    mus = [0.05, 0.1, 0.2, 0.4]
    results = pa.mu_sweep(fk03, double_well, 0.5, mus, route="infconv")
    target = pa.ext_combination(0.5, fk03.values, double_well.values)
    prev = None
    for r in results:
        vals = r.phi.values
        assert np.max(vals - target) <= 1e-9  # below the arithmetic mean
        if prev is not None:
            assert np.max(vals - prev) <= 1e-9  # nonincreasing in mu
        prev = vals


def test_mu_sweep_slope_limit_matches_harmonic_mean(q2, q1, spec):
    # for quadratics a1=2, a2=1: slope of phi tends to 4/3 as mu grows;
    # large mu exceeds what the sampling box supports for the definition
    # route, so the epi-sum route carries the limit check
    big_mu = 64.0
    r = pa.mu_sweep(q2, q1, 0.5, [big_mu], route="infconv")[0]
    i = spec.index_of(1.0)[0]
    slope_est = 2.0 * r.phi.values[i]
    expected = qd.quad_prox_average([[2.0]], [[1.0]], 0.5, big_mu).phi.matrix[0, 0]
    lim = qd.quad_mu_inf_limit([[2.0]], [[1.0]], 0.5)[0, 0]
    assert lim == pytest.approx(4.0 / 3.0, abs=1e-12)
    assert abs(expected - lim) <= 0.01
    assert not r.exactness_flags[i]
    assert slope_est == pytest.approx(expected, abs=1e-3)
