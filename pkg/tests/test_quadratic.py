import math

import numpy as np
import pytest

from proxlab import quadratic as qd
from proxlab import transforms as tr
from proxlab.errors import MuAboveThreshold, NotPositiveDefinite
from proxlab.func_model import FunctionDescriptor, GridSpec, QuadraticFunction, sample_to_grid

INF = math.inf


def brute_min_1d(fun, lo=-60.0, hi=60.0, n=2_000_001):
    xs = np.linspace(lo, hi, n)
    vals = fun(xs)
    i = int(np.argmin(vals))
    return float(xs[i]), float(vals[i])


# ---------------------------------------------------------------------------
# thresholds
# ---------------------------------------------------------------------------

def test_threshold_values():
    assert qd.quad_threshold([[-1.0]]) == 1.0
    assert qd.quad_threshold([[1.0, 0.0], [0.0, 2.0]]) == INF
    # eigenvalues of [[0,1],[1,0]] are +-1 (characteristic-polynomial oracle)
    roots = np.roots([1.0, 0.0, -1.0])
    assert sorted(roots) == [-1.0, 1.0]
    assert qd.quad_threshold([[0.0, 1.0], [1.0, 0.0]]) == 1.0


def test_threshold_psd_iff_infinite():
    rng = np.random.default_rng(3)
    for _ in range(20):
        b = rng.normal(size=(3, 3))
        a = b @ b.T  # PSD
        assert qd.quad_threshold(a) == INF
        a2 = a - (np.linalg.eigvalsh(a)[0] + 0.5) * np.eye(3)
        assert qd.quad_threshold(a2) < INF


# ---------------------------------------------------------------------------
# envelope and prox closed forms
# ---------------------------------------------------------------------------

def test_moreau_scalar_against_brute_force():
    # oracle: dense 1-D scan of the envelope objective for q_1 at mu = 1
    _, val = brute_min_1d(lambda w: 0.5 * w * w + (w - 1.0) ** 2 / 2.0,
                          lo=-5.0, hi=5.0)
    assert val == pytest.approx(0.25, abs=1e-8)
    m = qd.quad_moreau([[1.0]], 1.0).matrix
    assert m[0, 0] == pytest.approx(0.5, abs=1e-15)  # e(1) = 0.5*0.5 = 0.25


def test_moreau_of_zero():
    assert qd.quad_moreau([[0.0]], 3.7).matrix[0, 0] == 0.0


def test_moreau_semigroup():
    step1 = qd.quad_moreau([[1.0]], 1.0).matrix
    chained = qd.quad_moreau(step1, 1.0).matrix
    direct = qd.quad_moreau([[1.0]], 2.0).matrix
    assert chained[0, 0] == pytest.approx(direct[0, 0], abs=1e-15)
    assert direct[0, 0] == pytest.approx(1.0 / 3.0, abs=1e-15)


def test_prox_closed_forms():
    assert qd.quad_prox([[-1.0]], 0.5).matrix[0, 0] == pytest.approx(2.0)
    assert np.array_equal(qd.quad_prox([[0.0, 0.0], [0.0, 0.0]], 1.0).matrix,
                          np.eye(2))
    assert qd.quad_prox([[2.0]], 1.0).matrix[0, 0] == pytest.approx(1.0 / 3.0)


def test_mu_above_threshold_raises():
    with pytest.raises(MuAboveThreshold):
        qd.quad_moreau([[-1.0]], 1.0)
    with pytest.raises(MuAboveThreshold):
        qd.quad_prox([[-2.0]], 0.5)


# ---------------------------------------------------------------------------
# proximal average closed forms
# ---------------------------------------------------------------------------

def test_scalar_average_values():
    av = qd.quad_prox_average([[2.0]], [[1.0]], 0.5, 1.0)
    # A3 = (0.5/3 + 0.5/2)^-1 - 1 = 12/5 - 1 = 7/5; prox slope 5/12
    assert av.a3[0, 0] == pytest.approx(1.4, abs=1e-12)
    assert av.prox.matrix[0, 0] == pytest.approx(5.0 / 12.0, abs=1e-12)
    assert av.phi.matrix[0, 0] == pytest.approx(1.4, abs=1e-12)


def test_average_of_equal_matrices_is_identity():
    a = np.array([[1.3, 0.2], [0.2, -0.4]])
    av = qd.quad_prox_average(a, a, 0.3, 0.5)
    assert np.allclose(av.phi.matrix, a, atol=1e-12)


def test_average_alpha_endpoints():
    a1, a2 = np.array([[2.0]]), np.array([[1.0]])
    assert np.allclose(qd.quad_prox_average(a1, a2, 0.0, 0.5).phi.matrix, a2,
                       atol=1e-12)
    assert np.allclose(qd.quad_prox_average(a1, a2, 1.0, 0.5).phi.matrix, a1,
                       atol=1e-12)


def test_prox_matrix_is_convex_combination():
    rng = np.random.default_rng(11)
    for _ in range(10):
        b1, b2 = rng.normal(size=(3, 3)), rng.normal(size=(3, 3))
        a1, a2 = 0.5 * (b1 + b1.T), 0.5 * (b2 + b2.T)
        mu = 0.4 * min(qd.quad_threshold(a1), qd.quad_threshold(a2), 2.0)
        alpha = rng.uniform(0.05, 0.95)
        av = qd.quad_prox_average(a1, a2, alpha, mu)
        expected = (alpha * qd.quad_prox(a1, mu).matrix
                    + (1 - alpha) * qd.quad_prox(a2, mu).matrix)
        assert np.max(np.abs(av.prox.matrix - expected)) <= 1e-13


def test_average_mu_monotone_as_forms():
    a1, a2 = np.array([[2.0, 0.5], [0.5, 1.0]]), np.array([[-0.5, 0.0], [0.0, 1.0]])
    lam_bar = min(qd.quad_threshold(a1), qd.quad_threshold(a2))
    mats = [qd.quad_prox_average(a1, a2, 0.4, mu).phi.matrix
            for mu in (0.2 * lam_bar, 0.4 * lam_bar, 0.8 * lam_bar)]
    for m1, m2 in zip(mats, mats[1:]):
        diff = m1 - m2
        assert np.linalg.eigvalsh(diff)[0] >= -1e-10 * np.linalg.norm(m1)


def test_average_is_mu_proximal():
    a1, a2 = np.array([[-0.8]]), np.array([[0.5]])
    for mu in (0.3, 0.9, 1.2):
        av = qd.quad_prox_average(a1, a2, 0.6, mu)
        shifted = av.phi.matrix + np.eye(1) / mu
        assert np.linalg.eigvalsh(shifted)[0] >= -1e-12


# ---------------------------------------------------------------------------
# limits
# ---------------------------------------------------------------------------

def test_limit_records_scalar():
    lim = qd.quad_limits([[2.0]], [[1.0]], 0.5)
    assert lim.mu_zero[0, 0] == pytest.approx(1.5)
    assert lim.mu_inf[0, 0] == pytest.approx(4.0 / 3.0)
    assert lim.lambda_bar == INF
    assert lim.mu_lambda_bar is None
    assert lim.linear_rate_ok
    # oracle for the mu->inf record: evaluate A3/mu at a huge mu
    big = qd.quad_prox_average([[2.0]], [[1.0]], 0.5, 1e6).phi.matrix
    assert big[0, 0] == pytest.approx(4.0 / 3.0, rel=1e-5)


def test_limit_identical_matrices():
    lim = qd.quad_limits([[1.0]], [[1.0]], 0.3)
    assert lim.mu_zero[0, 0] == pytest.approx(1.0)
    assert lim.mu_inf[0, 0] == pytest.approx(1.0)


def test_mu_inf_requires_positive_definite():
    with pytest.raises(NotPositiveDefinite):
        qd.quad_mu_inf_limit([[-1.0]], [[1.0]], 0.5)
    lim = qd.quad_limits([[-1.0]], [[1.0]], 0.5)
    assert lim.mu_inf is None
    assert lim.lambda_bar == 1.0
    assert lim.mu_lambda_bar is not None


def test_mu_lambda_bar_limit_numerically():
    # verify the threshold-limit components against phi at mu close to
    # lambda_bar: phi + q/(2 mu) approaches q_B1 box q_B2
    a1, a2, alpha = np.array([[-1.0]]), np.array([[1.0]]), 0.5
    lim = qd.quad_limits(a1, a2, alpha)
    b1, b2, c = lim.mu_lambda_bar
    mu = (1.0 - 1e-3) * lim.lambda_bar
    phi = qd.quad_prox_average(a1, a2, alpha, mu).phi.matrix[0, 0]
    # 1-D inf-convolution of quadratics: harmonic combination; one factor
    # is singular at the threshold (mu A + Id degenerates), and the zero
    # quadratic absorbs the epi-sum
    if b1[0, 0] == 0.0 or b2[0, 0] == 0.0:
        box = 0.0
    else:
        box = 1.0 / (1.0 / b1[0, 0] + 1.0 / b2[0, 0])
    expected = box - c[0, 0]
    assert phi == pytest.approx(expected, abs=5e-3)


def test_linear_convergence_table():
    lim = qd.quad_limits([[1.5]], [[0.5]], 0.25)
    mus = [row[0] for row in lim.convergence_table]
    devs = [row[1] for row in lim.convergence_table]
    assert mus == sorted(mus, reverse=True)
    ratios = [d / m for d, m in zip(devs, mus)]
    assert max(ratios) <= 4.0 * min(ratios) + 1e-9  # linear in mu


# ---------------------------------------------------------------------------
# grid agreement (the oracle pairing)
# ---------------------------------------------------------------------------

def _sample_quad(a, spec):
    return sample_to_grid(
        FunctionDescriptor("quadratic", QuadraticFunction(tuple(map(tuple, np.atleast_2d(a))))),
        spec)


def test_grid_envelope_and_prox_agree_with_closed_forms_1d():
    rng = np.random.default_rng(5)
    spec = GridSpec.make(-6.0, 6.0, 1201)
    xs = spec.axis_nodes(0)
    inner = np.abs(xs) <= 2.0
    for _ in range(10):
        a = float(rng.uniform(-2.5, 2.5))
        thr = qd.quad_threshold([[a]])
        mu = float(rng.uniform(0.1, min(0.5 * thr, 1.0)))
        gf = _sample_quad([[a]], spec)
        env = tr.moreau_envelope(gf, mu)
        m = qd.quad_moreau([[a]], mu).matrix[0, 0]
        dev = np.max(np.abs(env.values - 0.5 * m * xs * xs)[inner])
        assert dev <= 2 * tr.grid_error(spec, mu)
        p = qd.quad_prox([[a]], mu).matrix[0, 0]
        for x in (-1.5, 0.3, 2.0):
            got = tr.prox_map(gf, mu, x)
            assert len(got.points) == 1
            assert abs(got.points[0] - p * x) <= max(spec.steps)
