"""Hot numerical kernels with a compiled core and a numpy fallback.

The discrete Moreau envelope over a uniform grid separates into 1-D
min-plus scans along each axis, so the only inner loop that matters is

    out[i] = min_j  vals[j] + ((i - j) * h)**2 * inv2lam

applied to a block of lines.  A Cython extension (``proxlab._minplus``)
implements the scan in C; this module falls back to a chunked numpy
version when the extension is missing.  Both paths evaluate the objective
with the exact same sequence of IEEE operations, so results are
bit-identical regardless of the selected backend.

The backend is chosen at import time; ``PROXLAB_FORCE_NUMPY=1`` forces the
fallback (used by the benchmark and the parity tests).
"""

import os

import numpy as np

try:  # pragma: no cover - exercised indirectly via backend()
    from . import _minplus as _compiled
except ImportError:  # pragma: no cover
    _compiled = None

_FORCE_NUMPY = os.environ.get("PROXLAB_FORCE_NUMPY", "") not in ("", "0")
_use_compiled = _compiled is not None and not _FORCE_NUMPY

# Target-index chunk for the numpy fallback; bounds the (lines, chunk, n)
# temporary while keeping the reduction vectorized.
_CHUNK = 128


def backend():
    """Name of the active kernel backend: 'compiled' or 'numpy'."""
    return "compiled" if _use_compiled else "numpy"


def set_backend(name):
    """Select 'compiled' or 'numpy' explicitly (tests and benchmarks)."""
    global _use_compiled
    if name == "compiled":
        if _compiled is None:
            raise RuntimeError("compiled kernel is not available")
        _use_compiled = True
    elif name == "numpy":
        _use_compiled = False
    else:
        raise ValueError(f"unknown backend {name!r}")


def _minplus_lines_numpy(vals, h, inv2lam, out):
    lines, n = vals.shape
    idx = np.arange(n, dtype=np.float64)
    for start in range(0, n, _CHUNK):
        stop = min(start + _CHUNK, n)
        diff = (idx[start:stop, None] - idx[None, :]) * h
        cost = diff * diff * inv2lam
        np.min(vals[:, None, :] + cost[None, :, :], axis=2, out=out[:, start:stop])
    return out


def minplus_lines(vals, h, inv2lam):
    """Min-plus transform of each row of ``vals`` with quadratic cost.

    ``vals`` is a C-contiguous (lines, n) float64 array; +inf entries are
    admissible and propagate as "no contribution".
    """
    vals = np.ascontiguousarray(vals, dtype=np.float64)
    out = np.empty_like(vals)
    if _use_compiled:
        _compiled.minplus_lines(vals, float(h), float(inv2lam), out)
    else:
        _minplus_lines_numpy(vals, float(h), float(inv2lam), out)
    return out


def _minconv_numpy(f, g, roff, out):
    n = f.shape[0]
    out.fill(np.inf)
    # out[i] = min_j f[i - j + roff] + g[j]; iterate over j with slice shifts.
    for j in range(n):
        if not np.isfinite(g[j]):
            continue
        shift = roff - j
        lo = max(0, -shift)
        hi = min(n, n - shift)
        if lo >= hi:
            continue
        seg = f[lo + shift:hi + shift] + g[j]
        np.minimum(out[lo:hi], seg, out=out[lo:hi])
    return out


def minconv_1d(f, g, roff):
    """Discrete infimal convolution of two lines on the same uniform grid.

    ``roff`` is the integer index offset such that x_i - w_j maps to node
    index i - j + roff.  Index pairs falling outside the grid contribute
    nothing.
    """
    f = np.ascontiguousarray(f, dtype=np.float64)
    g = np.ascontiguousarray(g, dtype=np.float64)
    out = np.empty_like(f)
    if _use_compiled:
        _compiled.minconv_1d(f, g, int(roff), out)
    else:
        _minconv_numpy(f, g, int(roff), out)
    return out


def envelope_nd(values, steps, lam):
    """Discrete Moreau envelope over the full grid (full scan semantics).

    min over grid nodes w of values[w] + ||w - x||^2 / (2 lam), evaluated
    at every node x.  The quadratic cost separates per axis, so the
    transform is a sequence of line scans (axis 0, then axis 1); the result
    equals the joint minimum exactly.
    """
    inv2lam = 1.0 / (2.0 * lam)
    out = np.asarray(values, dtype=np.float64)
    if out.ndim == 1:
        return minplus_lines(out[None, :], steps[0], inv2lam)[0]
    if out.ndim != 2:
        raise ValueError("grids are limited to 1 or 2 dimensions")
    # axis 0: scan columns as lines
    out = minplus_lines(np.ascontiguousarray(out.T), steps[0], inv2lam).T
    # axis 1: scan rows
    return minplus_lines(np.ascontiguousarray(out), steps[1], inv2lam)
