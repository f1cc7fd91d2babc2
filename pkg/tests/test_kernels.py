import numpy as np
import pytest

from proxlab import kernels
from proxlab.func_model import GridSpec, builtin_descriptor, sample_to_grid
from proxlab.transforms import moreau_envelope


@pytest.fixture
def restore_backend():
    initial = kernels.backend()
    yield
    kernels.set_backend(initial)


def _both_backends():
    yield "numpy"
    if kernels._compiled is not None:
        yield "compiled"


def test_backend_selection(restore_backend):
    kernels.set_backend("numpy")
    assert kernels.backend() == "numpy"
    with pytest.raises(ValueError):
        kernels.set_backend("cuda")


def test_minplus_matches_direct_min(restore_backend):
    rng = np.random.default_rng(0)
    vals = rng.normal(size=(3, 157))
    vals[rng.random(size=vals.shape) < 0.08] = np.inf
    h, inv2lam = 0.04, 2.5
    idx = np.arange(157, dtype=float)
    cost = ((idx[:, None] - idx[None, :]) * h) ** 2 * inv2lam
    expected = np.min(vals[:, None, :] + cost[None, :, :], axis=2)
    for backend in _both_backends():
        kernels.set_backend(backend)
        out = kernels.minplus_lines(vals, h, inv2lam)
        assert np.array_equal(out, expected), backend


def test_backends_bit_identical(restore_backend):
    if kernels._compiled is None:
        pytest.skip("compiled kernel unavailable")
    rng = np.random.default_rng(1)
    vals = rng.normal(size=(5, 311))
    vals[rng.random(size=vals.shape) < 0.1] = np.inf
    kernels.set_backend("compiled")
    a = kernels.minplus_lines(vals, 0.013, 3.7)
    kernels.set_backend("numpy")
    b = kernels.minplus_lines(vals, 0.013, 3.7)
    assert np.array_equal(a, b)
    f, g = rng.normal(size=301), rng.normal(size=301)
    kernels.set_backend("compiled")
    c1 = kernels.minconv_1d(f, g, 150)
    kernels.set_backend("numpy")
    c2 = kernels.minconv_1d(f, g, 150)
    assert np.array_equal(c1, c2)


def test_minconv_matches_naive(restore_backend):
    rng = np.random.default_rng(2)
    f = rng.normal(size=91)
    g = rng.normal(size=91)
    g[rng.random(size=91) < 0.2] = np.inf
    roff = 45
    naive = np.full(91, np.inf)
    for i in range(91):
        for j in range(91):
            k = i - j + roff
            if 0 <= k < 91:
                naive[i] = min(naive[i], f[k] + g[j])
    for backend in _both_backends():
        kernels.set_backend(backend)
        assert np.array_equal(kernels.minconv_1d(f, g, roff), naive), backend


def test_envelope_2d_separable_equals_joint_min():
    rng = np.random.default_rng(3)
    vals = rng.normal(size=(17, 13))
    steps = (0.25, 0.4)
    lam = 0.7
    out = kernels.envelope_nd(vals, steps, lam)
    xs = np.arange(17) * steps[0]
    ys = np.arange(13) * steps[1]
    joint = np.empty_like(vals)
    for i in range(17):
        for j in range(13):
            cost = ((xs[:, None] - xs[i]) ** 2
                    + (ys[None, :] - ys[j]) ** 2) / (2 * lam)
            joint[i, j] = np.min(vals + cost)
    assert np.max(np.abs(out - joint)) <= 1e-12


def test_transform_results_backend_independent(spec, restore_backend):
    gf = sample_to_grid(builtin_descriptor("fk", eps=0.5),
                        GridSpec.make(-3, 3, 401))
    outs = {}
    for backend in _both_backends():
        kernels.set_backend(backend)
        outs[backend] = moreau_envelope(gf, 0.5).values
    if len(outs) == 2:
        assert np.array_equal(outs["numpy"], outs["compiled"])
