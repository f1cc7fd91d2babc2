import json
import math

import numpy as np
import pytest

from proxlab import diagnostics as dg
from proxlab import transforms as tr
from proxlab.func_model import GridSpec, builtin_descriptor, sample_to_grid

INF = math.inf


# ---------------------------------------------------------------------------
# report plumbing
# ---------------------------------------------------------------------------

def test_report_invariant_enforced():
    with pytest.raises(ValueError):
        dg.CheckReport("x", True, 2.0, None, 1.0)
    r = dg.CheckReport("x", False, 2.0, (0.5, "axis0"), 1.0, 3)
    doc = json.loads(r.to_json())
    assert doc["check_id"] == "x"
    assert doc["passed"] is False
    assert doc["nodes_excluded"] == 3


def test_reports_are_deterministic(fk03, fk07):
    a = dg.check_envelope_identity(fk03, fk07, (0.4, 0.25))
    b = dg.check_envelope_identity(fk03, fk07, (0.4, 0.25))
    assert a == b


# ---------------------------------------------------------------------------
# interval set utilities
# ---------------------------------------------------------------------------

def test_hausdorff_intervals_basic():
    assert dg.hausdorff_intervals([(0, 1)], [(0, 1)]) == 0.0
    assert dg.hausdorff_intervals([(0, 1)], [(0.5, 1.5)]) == 0.5
    # the peak of the distance sits inside a gap of the other union
    d = dg.hausdorff_intervals([(0.0, 10.0)], [(0.0, 0.0), (10.0, 10.0)])
    assert d == 5.0
    assert dg.hausdorff_intervals([], []) == 0.0
    assert dg.hausdorff_intervals([(0, 1)], []) == INF


# ---------------------------------------------------------------------------
# individual checks: positive and negative instances
# ---------------------------------------------------------------------------

def test_envelope_identity_passes(fk03, fk07, q2, q1):
    assert dg.check_envelope_identity(fk03, fk07, (0.4, 0.25)).passed
    assert dg.check_envelope_identity(q2, q1, (0.5, 1.0)).passed


def test_sandwich_passes_on_indicator_pair(indicator0, q1):
    assert dg.check_sandwich(indicator0, q1, (0.3, 0.5)).passed
    assert dg.check_sandwich(indicator0, q1, (0.0, 0.5)).passed


def test_prox_combination(fk03, fk07):
    xs = tuple(np.linspace(-2, 2, 11))
    assert dg.check_prox_combination(fk03, fk07, (0.5, 0.5), xs).passed


def test_mu_monotonicity_all_alphas(fk03, double_well):
    for alpha in (0.0, 0.4, 1.0):
        r = dg.check_mu_monotonicity(fk03, double_well, alpha,
                                     (0.1, 0.25, 0.45))
        assert r.passed
        assert r.tolerance_used <= 1e-8  # no tolerance inflation


def test_alpha_endpoints_zero_tolerance(fk03, fk07):
    r = dg.check_alpha_endpoints(fk03, fk07, 0.25)
    assert r.passed
    assert r.tolerance_used == 0.0
    assert r.max_violation == 0.0


def test_alpha_continuity(fk03, double_well):
    r = dg.check_alpha_continuity(fk03, double_well, 0.25,
                                  (0.0, 0.3, 0.5, 0.7, 1.0))
    assert r.passed


def test_mu_zero_limit_monotone_gaps():
    spec = GridSpec.make(-2.0, 2.0, 801)
    fx = dg.paper_fixtures(spec)
    r = dg.check_mu_zero_limit(fx["fk03"], fx["dw"], 0.7)
    assert r.passed
    gaps = [g for _, g in r.witness["gaps"]]
    assert all(g2 < g1 for g1, g2 in zip(gaps, gaps[1:]))
    assert gaps[-1] <= 0.02


def test_mu_zero_limit_detects_bad_pin():
    spec = GridSpec.make(-2.0, 2.0, 401)
    fx = dg.paper_fixtures(spec)
    r = dg.check_mu_zero_limit(fx["fk03"], fx["dw"], 0.7, gap_bound=1e-4)
    assert not r.passed  # the pinned bound is what makes this a regression


def test_infimum_formulas(fk05, q1, double_well):
    # argmins of f = g = fk intersect on |x| >= 1
    assert dg.check_infimum_formulas(fk05, fk05, (0.5, 0.25)).passed
    # disjoint argmins: shifted wells exercise only the inf branch
    assert dg.check_infimum_formulas(double_well, q1, (0.5, 0.3)).passed


def test_shifted_argmin(fk03, fk07, q2, q1):
    assert dg.check_shifted_argmin(fk03, fk07, (0.5, 0.5)).passed
    assert dg.check_shifted_argmin(q2, q1, (0.5, 1.0)).passed


def test_infconv_minimizer_lemma(double_well, q1, fk03, indicator0):
    assert dg.check_infconv_minimizer_lemma(double_well, q1).passed
    assert dg.check_infconv_minimizer_lemma(fk03, indicator0).passed


def test_coercivity_preservation(double_well, q2):
    r = dg.check_coercivity_preservation(double_well, q2, (0.5, 0.25))
    assert r.passed
    assert r.witness["gamma"] > 0


def test_subdifferential_smooth_and_kink(q2, fk05, spec):
    c = dg.calibrate_slope_constant(spec, 0.25)
    xs = tuple(np.linspace(-2, 2, 9))
    smooth = dg.check_subdifferential(q2, fk05, (0.5, 0.25), xs, True, c)
    assert smooth.passed
    c2 = dg.calibrate_slope_constant(spec, 0.5)
    kinked = dg.check_subdifferential(fk05, fk05, (0.5, 0.5), xs, False, c2)
    assert kinked.passed
    # mislabeling the kinked average as smooth must fail
    wrong = dg.check_subdifferential(fk05, fk05, (0.5, 0.5), xs, True, c2)
    assert not wrong.passed


def test_lipschitz_gradient(q2, fk05):
    r = dg.check_lipschitz_gradient(q2, fk05, (0.5, 0.25), 2.0)
    assert r.passed
    assert r.witness["max_quotient"] <= r.witness["bound"] * 1.05


def test_envelope_equivalences_positive_and_negative(fk03, fk07, double_well):
    pos = dg.check_envelope_equivalences(fk03, fk07, 0.5, 0.25)
    assert pos.passed
    assert pos.witness["envelope"] <= 1e-11
    neg = dg.check_envelope_equivalences(fk03, double_well, 0.5, 0.25)
    assert neg.passed  # consistently different is the expected outcome
    assert neg.witness["envelope"] > 1e-3


def test_prox_vs_resolvent():
    fk_pw = builtin_descriptor("fk", eps=0.5).resolve().payload
    strict = dg.check_prox_vs_resolvent(fk_pw, 0.5, (0.25, -0.3), label="fk")
    assert strict.passed
    assert strict.witness["expect_equal"] is False
    equal = dg.check_prox_vs_resolvent(fk_pw, 0.25,
                                       tuple(np.linspace(-2, 2, 21)),
                                       label="fk")
    assert equal.passed
    assert equal.witness["expect_equal"] is True


def test_prox_display_section10(section10_g):
    xs = tuple(np.linspace(-2.5, 2.5, 11))
    expected = [(x, dg.section10_prox_display(x)) for x in xs]
    assert dg.check_prox_display(section10_g, 0.5, expected).passed
    # a wrong display must fail
    wrong = [(0.0, (0.0,))]
    assert not dg.check_prox_display(section10_g, 0.5, wrong).passed


# ---------------------------------------------------------------------------
# suite
# ---------------------------------------------------------------------------

def test_run_all_passes_and_covers_everything():
    reports = dg.run_all(spec=GridSpec.make(-3.0, 3.0, 241))
    assert all(r.passed for r in reports), \
        [r.check_id for r in reports if not r.passed]
    ids = [r.check_id for r in reports]
    assert ids == sorted(ids)
    ops = {i.split("[")[0] for i in ids}
    assert set(dg._SUITE_OPS) <= ops
    # rerunning yields identical reports
    again = dg.run_all(spec=GridSpec.make(-3.0, 3.0, 241))
    assert reports == again


def test_convergence_sanity_halving_h():
    # violation/tolerance ratios must stay bounded away from failure when
    # the grid is refined (smooth fixtures): either they shrink with the
    # coarse ratio or they plateau below the tolerance (node-alignment
    # luck can make single coarse ratios artificially tiny)
    ratios = {}
    for n in (301, 601, 1201):
        spec = GridSpec.make(-3.0, 3.0, n)
        fx = dg.paper_fixtures(spec)
        r1 = dg.check_envelope_identity(fx["fk03"], fx["fk07"], (0.4, 0.25))
        r2 = dg.check_sandwich(fx["fk03"], fx["dw"], (0.5, 0.25))
        r3 = dg.check_prox_combination(fx["q2"], fx["q1"], (0.5, 0.45),
                                       tuple(np.linspace(-1.5, 1.5, 7)))
        ratios[n] = [r.max_violation / r.tolerance_used for r in (r1, r2, r3)]
    for coarse, fine in ((301, 601), (601, 1201)):
        for a, b in zip(ratios[coarse], ratios[fine]):
            assert b <= max(a * 1.05, 0.95)
