import numpy as np
import pytest
from hypothesis import given, strategies as st

from plancherel.quadrature import (
    QuadratureSpec,
    gauss_legendre,
    panel_rule,
    sinh_radius,
    sinh_rule,
    trapezoid_circle,
)


def test_gauss_legendre_polynomial_exactness():
    x, w = gauss_legendre(8, -1.0, 3.0)
    for k in range(16):  # exact through degree 2n-1
        exact = (3.0 ** (k + 1) - (-1.0) ** (k + 1)) / (k + 1)
        assert np.sum(w * x**k) == pytest.approx(exact, rel=1e-13)


def test_panel_rule_gaussian():
    x, w = panel_rule(-10.0, 10.0)
    assert np.sum(w * np.exp(-(x**2))) == pytest.approx(np.sqrt(np.pi), rel=1e-14)


def test_panel_rule_covers_interval():
    x, w = panel_rule(0.0, 25.0, panel_len=6.0, nodes_per_panel=10)
    assert x.min() > 0.0 and x.max() < 25.0
    assert np.sum(w) == pytest.approx(25.0, rel=1e-13)


def test_sinh_rule_cauchy_tail():
    # integrand (1+x^2)^(-1) has tail exponent 2, i.e. rate 1 after x=sinh(t)
    x, w = sinh_rule(1.0)
    assert np.sum(w / (1.0 + x * x)) == pytest.approx(np.pi, rel=1e-12)


def test_sinh_rule_radius_tracks_rate():
    assert sinh_radius(2.0) == pytest.approx(20.0)
    assert sinh_radius(0.05) == pytest.approx(200.0)  # rate floor
    assert sinh_radius(0.05, radius_cap=120.0) == pytest.approx(120.0)


def test_half_line_kinked_integrand():
    spec = QuadratureSpec()
    r, w = spec.half_line(2.0)
    # r (1+r^2)^(-2) integrates to 1/2; r has a corner at 0 when extended evenly
    assert np.sum(w * r / (1.0 + r * r) ** 2) == pytest.approx(0.5, rel=1e-13)


def test_line_matches_line_t():
    spec = QuadratureSpec()
    x, w = spec.line(1.5)
    t, wt = spec.line_t(1.5)
    np.testing.assert_allclose(x, np.sinh(t), rtol=1e-15)
    np.testing.assert_allclose(w, wt * np.cosh(t), rtol=1e-15)


@given(st.integers(min_value=1, max_value=6))
def test_trapezoid_circle_kills_low_harmonics(k):
    theta, w = trapezoid_circle(16)
    assert np.sum(w) == pytest.approx(1.0)
    assert abs(np.sum(w * np.cos(k * theta))) < 1e-14
    assert abs(np.sum(w * np.sin(k * theta))) < 1e-14


def test_refine_is_strictly_finer():
    spec = QuadratureSpec()
    fine = spec.refine()
    assert fine.nodes_per_panel > spec.nodes_per_panel
    assert fine.target_log_tail > spec.target_log_tail
    x, _ = spec.line(1.0)
    xf, _ = fine.line(1.0)
    assert xf.size > x.size
    assert xf.max() > x.max()
