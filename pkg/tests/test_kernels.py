import numpy as np
import pytest

from plancherel import kernels


def _direct_1(logq, wk, s):
    return np.einsum("k,jik->ij", wk, np.exp(s[:, None, None] * logq[None, :, :]))


def _direct_2(l1, l2, wk, s1, s2):
    phase = s1[:, None, None] * l1[None] + s2[:, None, None] * l2[None]
    return np.einsum("k,jik->ij", wk, np.exp(phase))


@pytest.fixture()
def data(rng):
    ni, nk, nj = 7, 33, 5
    logq = rng.normal(size=(ni, nk))
    l2 = rng.normal(size=(ni, nk))
    wk = rng.uniform(0.1, 1.0, size=nk)
    s = rng.normal(size=nj) + 1j * rng.normal(size=nj)
    s2 = rng.normal(size=nj) + 1j * rng.normal(size=nj)
    return logq, l2, wk, s, s2


def test_power_sum_single_channel(data):
    logq, _, wk, s, _ = data
    out = kernels.power_sum((logq,), wk, (s,))
    np.testing.assert_allclose(out, _direct_1(logq, wk, s), rtol=1e-13)


def test_power_sum_two_channels(data):
    logq, l2, wk, s, s2 = data
    out = kernels.power_sum((logq, l2), wk, (s, s2))
    np.testing.assert_allclose(out, _direct_2(logq, l2, wk, s, s2), rtol=1e-13)


def test_real_exponents_stay_real(data):
    logq, _, wk, s, _ = data
    out = kernels.power_sum((logq,), wk, (s.real.astype(complex),))
    assert np.abs(out.imag).max() < 1e-13 * np.abs(out.real).max()


def test_backends_agree(data, monkeypatch):
    if kernels.BACKEND != "cython":
        pytest.skip("compiled backend not built")
    from plancherel.kernels import _ref

    logq, l2, wk, s, s2 = data
    fast = kernels.power_sum((logq, l2), wk, (s, s2))
    out = np.empty((logq.shape[0], s.size), dtype=complex)
    _ref.power_sum_2(
        np.ascontiguousarray(logq),
        np.ascontiguousarray(l2),
        np.ascontiguousarray(wk),
        np.ascontiguousarray(s),
        np.ascontiguousarray(s2),
        out,
    )
    np.testing.assert_allclose(fast, out, rtol=1e-12)


def test_output_buffer_reuse(data):
    logq, _, wk, s, _ = data
    out = np.empty((logq.shape[0], s.size), dtype=complex)
    res = kernels.power_sum((logq,), wk, (s,), out=out)
    assert res is out
