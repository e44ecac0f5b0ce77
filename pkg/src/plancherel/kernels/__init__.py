"""Kernel backend selection.

The compiled Cython kernels are used when available; setting
``PLANCHEREL_KERNEL=python`` (or ``ref``/``numpy``) forces the pure-numpy
fallback.  ``BACKEND`` records which one is active.
"""

import os

import numpy as np

from . import _ref

_forced = os.environ.get("PLANCHEREL_KERNEL", "").lower()

if _forced in {"python", "ref", "numpy"}:
    _impl = _ref
    BACKEND = "numpy"
else:
    try:
        from . import _fast as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _ref
        BACKEND = "numpy"


def power_sum(log_bases, wk, exponents, out=None):
    """Weighted complex power sum over quadrature nodes.

    Parameters
    ----------
    log_bases : tuple of (ni, nk) float arrays, length 1 or 2
        Log of the positive base quantities per (point, node).
    wk : (nk,) float array
        Quadrature weights.
    exponents : tuple of (nj,) complex arrays, same length as log_bases
        Spectral exponents.

    Returns
    -------
    (ni, nj) complex array: ``sum_k wk[k] * exp(sum_r exponents[r][j] * log_bases[r][i,k])``.
    """
    log_bases = tuple(np.ascontiguousarray(L, dtype=np.float64) for L in log_bases)
    exponents = tuple(np.ascontiguousarray(s, dtype=np.complex128) for s in exponents)
    wk = np.ascontiguousarray(wk, dtype=np.float64)
    ni = log_bases[0].shape[0]
    nj = exponents[0].shape[0]
    if out is None:
        out = np.empty((ni, nj), dtype=np.complex128)
    if len(log_bases) == 1:
        _impl.power_sum_1(log_bases[0], wk, exponents[0], out)
    elif len(log_bases) == 2:
        _impl.power_sum_2(log_bases[0], log_bases[1], wk, exponents[0], exponents[1], out)
    else:
        raise ValueError("power_sum supports 1 or 2 log-base channels")
    return out
