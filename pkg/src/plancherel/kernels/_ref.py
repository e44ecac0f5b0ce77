"""Pure-numpy reference implementation of the power-sum kernels.

Kept algorithmically identical to the compiled version so the two can be
compared bit-for-bit-ish (1e-13 relative) in tests and benchmarks.  Work is
chunked over the spectral axis to bound peak memory.
"""

import numpy as np

_CHUNK = 16


def power_sum_1(logq, wk, s, out):
    """out[i, j] = sum_k wk[k] * exp(s[j] * logq[i, k])."""
    ns = s.shape[0]
    for j0 in range(0, ns, _CHUNK):
        sj = s[j0 : j0 + _CHUNK]
        # (ni, nj, nk) block; nj small
        block = np.exp(sj[None, :, None] * logq[:, None, :])
        out[:, j0 : j0 + _CHUNK] = block @ wk
    return out


def power_sum_2(l1, l2, wk, s1, s2, out):
    """out[i, j] = sum_k wk[k] * exp(s1[j]*l1[i, k] + s2[j]*l2[i, k])."""
    ns = s1.shape[0]
    for j0 in range(0, ns, _CHUNK):
        a = s1[j0 : j0 + _CHUNK]
        b = s2[j0 : j0 + _CHUNK]
        block = np.exp(a[None, :, None] * l1[:, None, :] + b[None, :, None] * l2[:, None, :])
        out[:, j0 : j0 + _CHUNK] = block @ wk
    return out
