import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from plancherel.cfunc import CFunctionEngine
from plancherel.errors import ParameterError, SingularParameterError
from plancherel.groups import build_model
from plancherel.rootdata import SpectralParam
from plancherel.spherical import (
    RadialPhi,
    SphericalEvaluator,
    asymptotic_residual,
    constant_term_data,
    constant_term_expansion,
    convolve_radial,
    fit_decay_rate,
    haar_k_quadrature,
    holomorphy_residual,
    mean_value_check,
    temperedness_bound_check,
    w_invariance_check,
    zonal_k_rule,
)
from plancherel.transform import RadialProfile, cartan_grid_rule


@pytest.fixture(scope="session")
def evaluator(model):
    return SphericalEvaluator(model)


@pytest.fixture(scope="session")
def engine(model, haar_all):
    return CFunctionEngine(model, haar=haar_all[model.tag])


def neg_ray(model):
    rho = model.root_datum.rho
    return -rho / np.linalg.norm(rho)


def random_regular_imaginary(model, rng, scale=1.5):
    roots = model.root_datum.positive_roots
    while True:
        xi = rng.normal(size=model.rank) * scale
        if np.abs(roots @ xi).min() > 1e-2:
            return SpectralParam.imaginary(xi)


def random_k(model, rng):
    return model.iwasawa(model.random_element(rng, scale=0.5)).k


# ---------------------------------------------------------------------------
# pointwise identities of the eigenfunctions


def test_phi_is_one_at_identity(evaluator, rng):
    eye = np.eye(evaluator.model.matrix_size)
    for _ in range(5):
        lam = SpectralParam(rng.normal(size=evaluator.model.rank) * 0.5,
                            rng.normal(size=evaluator.model.rank) * 2.0)
        assert abs(evaluator.phi(lam, eye, check=False) - 1.0) < 1e-9


# node counts that put the compact-group rule's spectral error well under
# 1e-9 for elements at the paired radius: the circle rule needs the most
# nodes at large radius, the sphere rule converges fastest, and the rank-two
# Euler grid grows like resolution cubed so stays near its base size
TIGHT = {"sl2r": (8.0, 0.6), "so13": (2.0, 0.6), "sl3r": (2.0, 0.25)}


def test_phi_biinvariance(model, rng):
    resolution, scale = TIGHT[model.tag]
    ev = SphericalEvaluator(model, resolution=resolution)
    for _ in range(5):
        lam = SpectralParam.imaginary(rng.normal(size=model.rank) * 1.5)
        g = model.random_element(rng, scale=scale).matrix
        k1, k2 = random_k(model, rng), random_k(model, rng)
        ref = ev.phi(lam, g, check=False)
        moved = ev.phi(lam, k1 @ g @ k2, check=False)
        assert abs(moved - ref) < 1e-9


def test_phi_conjugate_of_inverse(model, rng):
    # unitarity on the imaginary axis: phi(g^-1) = conj(phi(g))
    resolution, scale = TIGHT[model.tag]
    ev = SphericalEvaluator(model, resolution=resolution)
    for _ in range(5):
        lam = SpectralParam.imaginary(rng.normal(size=model.rank) * 1.5)
        g = model.random_element(rng, scale=scale).matrix
        a = ev.phi(lam, np.linalg.inv(g), check=False)
        b = np.conj(ev.phi(lam, g, check=False))
        assert abs(a - b) < 1e-9


def test_two_chart_agreement():
    # the half-angle-tangent chart with its own tail handling is an
    # independent oracle for the circle rule
    model = build_model("sl2r")
    ev = SphericalEvaluator(model, resolution=4.0)
    X = neg_ray(model)
    for xi in (0.0, 0.8, 2.3):
        lam = SpectralParam.imaginary(np.array([xi]))
        for t in (0.2, 0.7, 1.2):
            g = model.a_matrix(t * X)
            a = ev.phi(lam, g, check=False)
            b = ev.phi_stereographic(lam, g)
            assert abs(a - b) < 1e-8, (xi, t, abs(a - b))


def test_refined_doubles_nodes(evaluator):
    assert evaluator.refined().n_nodes >= 2 * evaluator.n_nodes - 4


def test_holomorphy_cauchy_riemann(evaluator, rng):
    model = evaluator.model
    for _ in range(3):
        lam = SpectralParam(rng.normal(size=model.rank) * 0.3,
                            rng.normal(size=model.rank) * 1.0)
        g = model.random_element(rng, scale=0.5)
        assert holomorphy_residual(evaluator, lam, g) < 1e-6


@settings(max_examples=20, deadline=None)
@given(xi=st.floats(min_value=-4.0, max_value=4.0),
       t=st.floats(min_value=0.0, max_value=1.5))
def test_phi_modulus_bounded_on_imaginary_axis(xi, t):
    # matrix coefficient of unit vectors in a unitary representation
    model = build_model("so13")
    ev = SphericalEvaluator(model)
    g = model.a_matrix(t * neg_ray(model))
    val = ev.phi(SpectralParam.imaginary(np.array([xi])), g, check=False)
    assert abs(val) <= 1.0 + 1e-12


# ---------------------------------------------------------------------------
# mean value and Weyl invariance


def test_mean_value_trivial_at_identity(models, rng):
    # at g = e (or h = e) the k-integrand is constant, so the residual is
    # pure eigenfunction-evaluation error; tight rules make it negligible
    for tag in ("sl2r", "so13"):
        model = models[tag]
        ev = SphericalEvaluator(model, resolution=TIGHT[tag][0])
        eye = np.eye(model.matrix_size)
        lam = SpectralParam.imaginary(rng.normal(size=model.rank))
        h = model.random_element(rng, scale=0.5)
        assert mean_value_check(ev, lam, eye, h, k_resolution=1.0) < 1e-9
        assert mean_value_check(ev, lam, h, eye, k_resolution=1.0) < 1e-9


def test_mean_value_random_rank_one(models, rng):
    for tag in ("sl2r", "so13"):
        ev = SphericalEvaluator(models[tag])
        worst = 0.0
        for _ in range(5):
            lam = SpectralParam.imaginary(rng.normal(size=1) * 2.0)
            g = models[tag].random_element(rng, scale=0.5)
            h = models[tag].random_element(rng, scale=0.5)
            worst = max(worst, mean_value_check(ev, lam, g, h, k_resolution=2.0))
        assert worst < 1e-7, tag


def test_mean_value_spot_check_rank_two(models, rng):
    # one triple at modest scale; the Euler-grid product rule is the cost
    model = models["sl3r"]
    ev = SphericalEvaluator(model)
    lam = SpectralParam.imaginary(rng.normal(size=2) * 1.5)
    g = model.random_element(rng, scale=0.25)
    h = model.random_element(rng, scale=0.25)
    assert mean_value_check(ev, lam, g, h, k_resolution=0.5) < 1e-7


def test_w_invariance_rank_one(models, rng):
    for tag in ("sl2r", "so13"):
        ev = SphericalEvaluator(models[tag])
        for _ in range(5):
            lam = SpectralParam.imaginary(rng.normal(size=1) * 2.0)
            g = models[tag].random_element(rng, scale=0.5)
            assert w_invariance_check(ev, lam, g) < 1e-8


def test_w_invariance_full_orbit_rank_two(models, rng):
    ev = SphericalEvaluator(models["sl3r"])
    for _ in range(3):
        lam = SpectralParam.imaginary(rng.normal(size=2) * 1.5)
        g = models["sl3r"].random_element(rng, scale=0.3)
        assert w_invariance_check(ev, lam, g) < 1e-6


# ---------------------------------------------------------------------------
# expansion at infinity


def test_constant_term_at_zero_sums_coefficients(engine, rng):
    lam = random_regular_imaginary(engine.model, rng)
    X = neg_ray(engine.model)
    data = constant_term_data(engine, lam, X)
    total = sum(data.coefficients.values())
    assert abs(constant_term_expansion(data, 0.0) - total) < 1e-12


def test_constant_term_rank_one_two_terms(models, haar_all, rng):
    # W = {+-1}: the expansion is c(lam) e^(t lam(X)) + c(-lam) e^(-t lam(X))
    model = models["sl2r"]
    engine = CFunctionEngine(model, haar=haar_all["sl2r"])
    lam = random_regular_imaginary(model, rng)
    X = neg_ray(model)
    data = constant_term_data(engine, lam, X)
    assert len(data.coefficients) == 2
    lam_x = 1j * float(lam.im @ X)
    c_plus = engine.c_function(lam)
    c_minus = engine.c_function(SpectralParam.imaginary(-lam.im))
    for t in (0.0, 3.0, 11.0):
        manual = c_plus * np.exp(t * lam_x) + c_minus * np.exp(-t * lam_x)
        assert abs(constant_term_expansion(data, t) - manual) < 1e-12


def test_constant_term_modulus_bound(engine, rng):
    lam = random_regular_imaginary(engine.model, rng)
    data = constant_term_data(engine, lam, neg_ray(engine.model))
    bound = sum(abs(c) for c in data.coefficients.values())
    t = np.linspace(0.0, 40.0, 300)
    assert np.abs(constant_term_expansion(data, t)).max() <= bound + 1e-12


def test_constant_term_rejects_wall_parameters(engine):
    wall = SpectralParam.imaginary(np.zeros(engine.model.rank))
    with pytest.raises(SingularParameterError):
        constant_term_data(engine, wall, neg_ray(engine.model))


def test_asymptotic_residual_decays_on_ray(models, haar_all):
    model = models["sl2r"]
    engine = CFunctionEngine(model, haar=haar_all["sl2r"])
    phi_eval = RadialPhi(engine)
    alpha = model.root_datum.positive_roots[0]
    data = constant_term_data(engine, SpectralParam.imaginary(alpha),
                              neg_ray(model))
    t = np.arange(2.0, 21.0, 2.0)
    r = asymptotic_residual(phi_eval, data, t)
    above_floor = r > 1e-12
    assert np.all(np.diff(r[above_floor]) < 0.0)
    assert r[-1] < 1e-8 * r[0]


def test_asymptotic_residual_at_zero_bounded(engine, rng):
    lam = random_regular_imaginary(engine.model, rng)
    data = constant_term_data(engine, lam, neg_ray(engine.model))
    phi_eval = RadialPhi(engine)
    r0 = asymptotic_residual(phi_eval, data, np.array([0.0]))[0]
    assert r0 <= 1.0 + sum(abs(c) for c in data.coefficients.values())


def test_fitted_decay_rate_negative(models, haar_all, rng):
    model = models["so13"]
    engine = CFunctionEngine(model, haar=haar_all["so13"])
    phi_eval = RadialPhi(engine)
    X = neg_ray(model)
    t = np.linspace(5.0, 25.0, 41)
    for _ in range(2):
        lam = random_regular_imaginary(model, rng)
        data = constant_term_data(engine, lam, X)
        rate = fit_decay_rate(t, asymptotic_residual(phi_eval, data, t))
        assert rate <= -0.1 * abs(float(model.root_datum.rho @ X))


# ---------------------------------------------------------------------------
# the two evaluation branches agree where they hand over


def test_series_integral_handover(models, haar_all, rng):
    model = models["sl2r"]
    engine = CFunctionEngine(model, haar=haar_all["sl2r"])
    phi_eval = RadialPhi(engine)
    X = neg_ray(model)
    alpha_max = float((model.root_datum.simple_roots() @ X).max())
    t_switch = np.log(phi_eval.switch_q) / (2.0 * alpha_max)
    t = np.linspace(t_switch - 0.4, t_switch + 0.4, 17)
    lam = SpectralParam.imaginary(np.array([1.3]))
    mixed = phi_eval(lam, t, X=X)
    # reference: the quadrature branch alone, on a refined rule
    fine = SphericalEvaluator(model, resolution=4.0)
    mats = np.stack([model.a_matrix(ti * X) for ti in t])
    ref = fine.phi_batch(lam, mats)[:, 0]
    assert np.abs(mixed - ref).max() < 1e-8


def test_radial_phi_on_singular_parameter(models, haar_all):
    # walls are handled by a regularizing shift; phi itself is smooth there
    model = models["sl2r"]
    engine = CFunctionEngine(model, haar=haar_all["sl2r"])
    phi_eval = RadialPhi(engine)
    t = np.array([4.0, 9.0])
    zero = phi_eval(SpectralParam.imaginary(np.array([0.0])), t)
    near = phi_eval(SpectralParam.imaginary(np.array([1e-7])), t)
    assert np.abs(zero - near).max() < 1e-6


def test_radial_phi_input_validation(models, haar_all):
    model = models["sl2r"]
    engine = CFunctionEngine(model, haar=haar_all["sl2r"])
    phi_eval = RadialPhi(engine)
    lam = SpectralParam.imaginary(np.array([1.0]))
    with pytest.raises(ParameterError):
        phi_eval(lam, [1.0], X=-neg_ray(model))  # positive chamber
    with pytest.raises(ParameterError):
        phi_eval(lam, [-0.5])


# ---------------------------------------------------------------------------
# temperedness detector


def test_temperedness_degree_band_at_origin(models, haar_all):
    # at lam = 0 the normalized modulus grows like a known power of t
    model = models["sl2r"]
    engine = CFunctionEngine(model, haar=haar_all["sl2r"])
    phi_eval = RadialPhi(engine)
    rep = temperedness_bound_check(
        phi_eval, SpectralParam.imaginary(np.array([0.0])), neg_ray(model))
    assert not rep.flagged
    assert 0.5 <= rep.degree <= 1.5


def test_temperedness_imaginary_unflagged(models, haar_all, rng):
    for tag in ("sl2r", "so13", "sl3r"):
        model = models[tag]
        engine = CFunctionEngine(model, haar=haar_all[tag])
        phi_eval = RadialPhi(engine)
        lam = random_regular_imaginary(model, rng)
        rep = temperedness_bound_check(phi_eval, lam, neg_ray(model))
        assert not rep.flagged, tag
        assert rep.degree <= len(model.root_datum.positive_roots) + 1.0


def test_temperedness_flags_2rho(models, haar_all):
    model = models["sl2r"]
    engine = CFunctionEngine(model, haar=haar_all["sl2r"])
    phi_eval = RadialPhi(engine)
    lam = SpectralParam.real(2.0 * model.root_datum.rho)
    rep = temperedness_bound_check(phi_eval, lam, neg_ray(model))
    assert rep.flagged
    assert rep.linear_rate > 0.1 * abs(rep.rho_of_x)


# ---------------------------------------------------------------------------
# radial convolution


def bump(center_width):
    def fn(r):
        r = np.asarray(r, dtype=float)
        q = (r / center_width) ** 2
        out = np.zeros_like(r)
        out[q < 1] = np.exp(1.0 - 1.0 / (1.0 - q[q < 1]))
        return out

    return fn


def test_convolution_commutativity(models, haar_all):
    model = models["so13"]
    haar = haar_all["so13"]
    f1 = RadialProfile.from_function(model, bump(1.3), 1.3, extent=2.8, n=201)
    f2 = RadialProfile.from_function(model, bump(1.5), 1.5, extent=2.8, n=201)
    c12 = convolve_radial(model, haar, f1, f2)
    c21 = convolve_radial(model, haar, f2, f1)
    rel = np.abs(c12.values - c21.values).max() / np.abs(c12.values).max()
    assert rel < 1e-6


def test_convolution_associativity(models, haar_all):
    model = models["so13"]
    haar = haar_all["so13"]
    ext = 2.6
    f1 = RadialProfile.from_function(model, bump(1.0), 1.0, extent=ext, n=181)
    f2 = RadialProfile.from_function(model, bump(0.8), 0.8, extent=ext, n=181)
    f3 = RadialProfile.from_function(model, bump(0.6), 0.6, extent=ext, n=181)
    left = convolve_radial(model, haar, convolve_radial(model, haar, f1, f2), f3)
    right = convolve_radial(model, haar, f1, convolve_radial(model, haar, f2, f3))
    rel = np.abs(left.values - right.values).max() / np.abs(left.values).max()
    assert rel < 1e-5


def test_convolution_approximate_identity(models, haar_all):
    # sharpening mollifiers converge to the identity of the algebra
    model = models["so13"]
    haar = haar_all["so13"]
    f = RadialProfile.from_function(model, bump(1.2), 1.2, extent=2.0, n=201)

    def molly(width):
        raw = RadialProfile.from_function(model, bump(width), width,
                                          extent=2.0, n=201)
        r, w = cartan_grid_rule(model, haar, width)
        mass = float(w @ raw(r))  # total group integral of the mollifier
        return raw.with_values(raw.values / mass)

    errors = []
    for width in (0.6, 0.4, 0.25):
        conv = convolve_radial(model, haar, f, molly(width))
        errors.append(np.abs(conv.values - f.values).max())
    assert errors[0] > errors[1] > errors[2]


def test_zonal_rule_matches_full_rule(models):
    # on a-elements the product integrand is M-biinvariant, so the reduced
    # polar rule must reproduce the full compact-group rule
    model = models["so13"]
    ev = SphericalEvaluator(model)
    X = neg_ray(model)
    g = model.a_matrix(0.9 * X)
    h = model.a_matrix(0.6 * X)
    lam = SpectralParam.imaginary(np.array([1.1]))

    def via(rule_mats, rule_w):
        prods = np.einsum("ij,kjl,lm->kim", g, rule_mats, h)
        vals = ev.phi_batch(lam, prods)[:, 0]
        return complex(np.sum(rule_w * vals))

    full = via(*haar_k_quadrature(model, 4.0))
    zonal = via(*zonal_k_rule(model, 4.0))
    assert abs(full - zonal) < 1e-10
