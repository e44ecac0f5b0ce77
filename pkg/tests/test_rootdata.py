import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from plancherel.errors import ParameterError
from plancherel.rootdata import (
    SpectralParam,
    build_root_datum,
    dominant_representative,
    reflect,
    weyl_group,
)


@pytest.fixture(scope="module")
def a2():
    return build_root_datum("a2")


@pytest.fixture(scope="module")
def a2_weyl(a2):
    return weyl_group(a2)


def test_rank_one_structure():
    for m in (1, 2, 3, 7):
        rd = build_root_datum("rank_one", multiplicity=m)
        rd.validate()
        assert rd.rank == 1
        assert rd.roots.shape == (2, 1)
        alpha = rd.positive_roots[0]
        # normalization: alpha has squared length 1/(2m) in these coordinates
        assert alpha @ alpha == pytest.approx(1.0 / (2 * m), rel=1e-12)
        np.testing.assert_allclose(rd.rho, (m / 2.0) * alpha)


def test_a2_structure(a2):
    a2.validate()
    assert a2.rank == 2
    assert a2.roots.shape == (6, 2)
    assert a2.positive_roots.shape == (3, 2)
    assert np.all(a2.positive_multiplicities == 1)
    assert len(a2.simple_roots()) == 2
    # rho pairs to 1/2 with each simple coroot
    for alpha in a2.simple_roots():
        assert (a2.rho @ alpha) / (alpha @ alpha) == pytest.approx(0.5, rel=1e-12)
    # all roots have the same length and pairwise angles of 60/120 degrees
    lens = np.linalg.norm(a2.roots, axis=1)
    np.testing.assert_allclose(lens, lens[0], rtol=1e-12)


def test_unknown_family_rejected():
    with pytest.raises(ParameterError):
        build_root_datum("e8")


@given(st.lists(st.floats(-5, 5), min_size=2, max_size=2))
def test_reflection_involution_a2(vec):
    rd = build_root_datum("a2")
    v = np.array(vec)
    for alpha in rd.positive_roots:
        w = reflect(reflect(v, alpha), alpha)
        np.testing.assert_allclose(w, v, atol=1e-12)
        assert np.linalg.norm(reflect(v, alpha)) == pytest.approx(
            np.linalg.norm(v), abs=1e-12
        )


def test_weyl_group_order(a2_weyl):
    assert len(a2_weyl) == 6
    rd = build_root_datum("rank_one", multiplicity=3)
    assert len(weyl_group(rd)) == 2


def test_weyl_longest_element(a2, a2_weyl):
    w0 = a2_weyl.longest_element
    # longest element sends the positive system to the negative one
    assert len(a2_weyl.inversion_set(w0)) == 3
    np.testing.assert_allclose(a2_weyl.act(w0, a2.rho), -a2.rho, atol=1e-12)


def test_weyl_inversion_set_sizes(a2_weyl):
    sizes = sorted(len(a2_weyl.inversion_set(w)) for w in range(len(a2_weyl)))
    assert sizes == [0, 1, 1, 2, 2, 3]


def test_weyl_compose_matches_matrix_product(a2_weyl):
    for w1 in range(6):
        for w2 in range(6):
            idx = a2_weyl.compose(w2, w1)
            expect = a2_weyl.elements[w2] @ a2_weyl.elements[w1]
            np.testing.assert_allclose(a2_weyl.elements[idx], expect, atol=1e-12)


def test_weyl_permutes_roots(a2, a2_weyl):
    for w in range(len(a2_weyl)):
        for alpha in a2.roots:
            assert a2.find_root(a2_weyl.act(w, alpha)) >= 0


def test_spectral_param_constructors():
    lam = SpectralParam.imaginary([1.0, -2.0])
    assert lam.is_imaginary
    np.testing.assert_allclose(lam.z, [1j, -2j])
    mu = SpectralParam.from_complex([0.5 + 1j, 0.25])
    np.testing.assert_allclose(mu.re, [0.5, 0.25])
    np.testing.assert_allclose(mu.im, [1.0, 0.0])
    assert mu.pair([2.0, 0.0]) == pytest.approx(1.0 + 2j)


def test_regularity(a2):
    assert SpectralParam.imaginary(a2.rho).is_regular(a2)
    # a wall point: orthogonal to the first simple root
    alpha = a2.simple_roots()[0]
    perp = np.array([-alpha[1], alpha[0]])
    assert not SpectralParam.imaginary(perp).is_regular(a2)


@settings(deadline=None)
@given(st.lists(st.floats(-4, 4), min_size=2, max_size=2), st.integers(0, 5))
def test_dominant_representative_orbit_invariant(vec, widx):
    rd = build_root_datum("a2")
    W = weyl_group(rd)
    v = np.array(vec)
    if not SpectralParam.imaginary(v).is_regular(rd, tol=1e-6):
        return
    lam = SpectralParam.imaginary(v)
    mu = SpectralParam.imaginary(W.act(widx, v))
    rep1, _ = dominant_representative(lam, W)
    rep2, _ = dominant_representative(mu, W)
    np.testing.assert_allclose(rep1.im, rep2.im, atol=1e-9)
    # representative lies in the closed positive chamber
    assert np.all(rd.positive_roots @ rep1.im >= -1e-9)


def test_datum_json_round_trip(a2):
    rd2 = type(a2).from_json(a2.to_json())
    np.testing.assert_allclose(rd2.roots, a2.roots)
    np.testing.assert_allclose(rd2.rho, a2.rho)
    assert json.loads(a2.to_json())["family"]
