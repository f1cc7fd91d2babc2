"""Closed-form transforms for quadratic functions q_A(x) = 0.5 <x, Ax>.

These are the independent oracles for the grid routes: threshold,
envelope, prox, the proximal-average matrix, and the limit formulas all
come from exact matrix algebra.  Matrix inverses go through the symmetric
eigendecomposition (the admissibility conditions guarantee positive
eigenvalues of mu*A + Id, and the eigen route preserves symmetry).
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import MuAboveThreshold, NotPositiveDefinite, SingularMatrix

_INF = math.inf


def _sym(a):
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError("expected a square matrix")
    return 0.5 * (arr + arr.T)


def _inv_sym(a):
    w, q = np.linalg.eigh(a)
    if np.min(np.abs(w)) <= 1e-14 * max(1.0, float(np.max(np.abs(w)))):
        raise SingularMatrix("matrix is numerically singular")
    return _sym(q @ np.diag(1.0 / w) @ q.T)


@dataclass(frozen=True)
class QuadResult:
    """A quadratic form q_M together with a note fixing the scaling
    convention of M (e.g. whether the mu^[-1] factor is included)."""

    matrix: np.ndarray
    scale_note: str = ""

    def __post_init__(self):
        m = _sym(self.matrix)
        if not np.isfinite(m).all():
            raise ValueError("matrix entries must be finite")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def __call__(self, x):
        xv = np.atleast_1d(np.asarray(x, dtype=np.float64))
        return 0.5 * float(xv @ self.matrix @ xv)


def quad_threshold(a):
    """Prox-boundedness threshold 1/max{0, -lambda_min A}; +inf iff A is
    positive semidefinite."""
    a = _sym(a)
    lam_min = float(np.linalg.eigvalsh(a)[0])
    if lam_min >= 0.0:
        return _INF
    return 1.0 / (-lam_min)


def _check_mu(a, mu):
    if not mu > 0:
        raise MuAboveThreshold(f"mu must be positive, got {mu}")
    thr = quad_threshold(a)
    if not mu < thr:
        raise MuAboveThreshold(f"mu={mu} is not strictly below the "
                               f"threshold {thr}")


def quad_moreau(a, mu):
    """Moreau envelope matrix: e_mu q_A = q_M with
    M = mu^[-1] [Id - (mu A + Id)^[-1]]."""
    a = _sym(a)
    _check_mu(a, mu)
    eye = np.eye(a.shape[0])
    m = (eye - _inv_sym(mu * a + eye)) / mu
    return QuadResult(m, "envelope matrix includes the mu^-1 factor")


def quad_prox(a, mu):
    """Proximal mapping matrix: Prox_mu q_A = (mu A + Id)^[-1]."""
    a = _sym(a)
    _check_mu(a, mu)
    eye = np.eye(a.shape[0])
    return QuadResult(_inv_sym(mu * a + eye), "linear map applied to x")


@dataclass(frozen=True)
class QuadAverage:
    """Closed-form proximal average of two quadratics."""

    a3: np.ndarray          # the unscaled bracket: phi = q_{A3 / mu}
    phi: QuadResult         # matrix of phi itself (mu^-1 A3)
    prox: QuadResult        # Prox_mu phi = alpha P1 + (1-alpha) P2

    def __post_init__(self):
        m = _sym(self.a3)
        m.setflags(write=False)
        object.__setattr__(self, "a3", m)


def quad_prox_average(a1, a2, alpha, mu):
    """A3 = [alpha (mu A1 + Id)^-1 + (1-alpha)(mu A2 + Id)^-1]^-1 - Id,
    phi = q_{A3/mu}, and the prox matrix of the average."""
    a1, a2 = _sym(a1), _sym(a2)
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    _check_mu(a1, mu)
    _check_mu(a2, mu)
    eye = np.eye(a1.shape[0])
    p1 = _inv_sym(mu * a1 + eye)
    p2 = _inv_sym(mu * a2 + eye)
    prox = _sym(alpha * p1 + (1.0 - alpha) * p2)
    a3 = _inv_sym(prox) - eye
    return QuadAverage(a3, QuadResult(a3 / mu, "matrix of phi = q_{A3/mu}"),
                       QuadResult(prox, "convex combination of prox matrices"))


def quad_mu_inf_limit(a1, a2, alpha):
    """mu -> infinity limit (alpha A1^-1 + (1-alpha) A2^-1)^-1; requires
    both matrices positive definite."""
    a1, a2 = _sym(a1), _sym(a2)
    for a in (a1, a2):
        if float(np.linalg.eigvalsh(a)[0]) <= 0.0:
            raise NotPositiveDefinite("mu->infinity limit requires positive "
                                      "definite matrices")
    return _sym(_inv_sym(alpha * _inv_sym(a1) + (1.0 - alpha) * _inv_sym(a2)))


@dataclass(frozen=True)
class QuadLimits:
    """Limit records of the quadratic proximal average.

    ``mu_lambda_bar`` holds the components (B1, B2, C) of the mu -> lambda_bar
    pointwise limit  q_B1 box q_B2 - q_C  (no closed matrix form exists at
    the threshold where mu A + Id degenerates); it is None when
    lambda_bar = inf.
    """

    mu_zero: np.ndarray
    mu_inf: object
    lambda_bar: float
    mu_lambda_bar: object
    convergence_table: tuple
    linear_rate_ok: bool


def quad_limits(a1, a2, alpha, scale=1.0):
    """Limit matrices for mu -> 0, mu -> inf and mu -> lambda_bar, plus a
    numerical table verifying that phi's matrix approaches the mu -> 0
    limit linearly in mu."""
    a1, a2 = _sym(a1), _sym(a2)
    mu_zero = _sym(alpha * a1 + (1.0 - alpha) * a2)
    try:
        mu_inf = quad_mu_inf_limit(a1, a2, alpha)
    except NotPositiveDefinite:
        mu_inf = None
    lam_bar = min(quad_threshold(a1), quad_threshold(a2))
    if lam_bar < _INF:
        mu_lambda_bar = (
            _sym((a1 + np.eye(a1.shape[0]) / lam_bar) / alpha) if alpha > 0 else None,
            _sym((a2 + np.eye(a2.shape[0]) / lam_bar) / (1.0 - alpha))
            if alpha < 1 else None,
            _sym(np.eye(a1.shape[0]) / lam_bar),
        )
    else:
        mu_lambda_bar = None
    table = []
    deviations = []
    for mu in (1e-1 * scale, 1e-2 * scale, 1e-3 * scale, 1e-4 * scale):
        if not mu < lam_bar:
            continue
        phi = quad_prox_average(a1, a2, alpha, mu).phi.matrix
        dev = float(np.linalg.norm(phi - mu_zero, ord=2))
        table.append((mu, dev))
        deviations.append((mu, dev))
    # linear rate: deviation/mu stays bounded and deviations decrease
    ok = all(d2 <= d1 + 1e-12 for (_, d1), (_, d2)
             in zip(deviations, deviations[1:]))
    if len(deviations) >= 2 and deviations[0][1] > 1e-13:
        first_ratio = deviations[0][1] / deviations[0][0]
        last_ratio = deviations[-1][1] / deviations[-1][0]
        ok = ok and last_ratio <= 4.0 * first_ratio + 1e-9
    return QuadLimits(mu_zero, mu_inf, lam_bar, mu_lambda_bar,
                      tuple(table), ok)
