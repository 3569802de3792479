import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from scn.dynamics import (
    FULL_SYSTEM_ORDER,
    FULL_SYSTEM_PATTERN,
    ZERO_ENTRIES,
    MassScales,
    SystemMatrix,
    assemble_constrained,
    assemble_unconstrained,
    effective_matrix,
    second_partials,
    sparsity_ok,
)
from scn.errors import SingularPointError, ValidationError
from scn.model import InterdepCoefficients, UncertaintyWeights, poly_derivatives


def both(cfg, weights=None, coeffs=None, params=None, point=None):
    w = weights or cfg.weights
    c = coeffs or cfg.coeffs
    p = params or cfg.params
    q = point or cfg.point
    return (assemble_unconstrained(w, c, p, q).entries,
            assemble_constrained(w, c, p, q, cfg.levels).entries)


class TestDefaultElements:
    def test_m11(self, cfg):
        m, _ = both(cfg)
        assert m[0, 0] == pytest.approx(2 * 0.28198 * 0.0573 * (200000 / 3000) * 0.5, rel=1e-12)
        assert m[0, 0] == pytest.approx(1.0772, abs=5e-5)

    def test_m33(self, cfg):
        m, _ = both(cfg)
        ref = (2 * 0.42458 * 0.0797 * (10000 / 3000) * 0.798117
               + 2 * 0.2132 * 0.1252 * (160000 / 3000) * 0.707107)
        assert m[2, 2] == pytest.approx(ref, rel=1e-12)
        assert m[2, 2] == pytest.approx(2.193, abs=5e-4)

    def test_k44(self, cfg):
        _, k = both(cfg)
        assert k[3, 3] == pytest.approx(-0.710667, abs=1e-6)

    def test_m42_includes_reciprocal_term(self, cfg):
        c, q, w, p = cfg.coeffs, cfg.point, cfg.weights, cfg.params
        d = c.a1 + c.a12 * q.n5 + c.a31 * q.n7 + 2 * c.a1p * q.l
        e1, e4 = w.eps[0], w.eps[3]
        g = c.gamma * e4 * w.A(13) * p.f10
        ef = e1 * w.A(1) * p.f1
        bracket = ((ef * c.a12 + g + e1 * w.A(2) * p.f2 * c.c12 + e1 * w.A(4) * p.y * c.d12) * q.n5
                   + (ef + g) * c.a31 * q.n7
                   + 2 * ((ef + g) * c.a1p + e1 * w.A(2) * p.f2 * c.c1p
                          + e1 * w.A(4) * p.y * c.d1p) * q.l)
        m, _ = both(cfg)
        assert m[3, 1] == pytest.approx(-c.a12 * bracket / d ** 2 + 1 / d, rel=1e-12)

    def test_sparsity_and_k_equals_m(self, cfg):
        m, k = both(cfg)
        for i, j in ZERO_ENTRIES:
            assert m[i, j] == 0.0 and k[i, j] == 0.0
        mask = np.ones((4, 4), bool)
        mask[3, 3] = False
        assert np.array_equal(m[mask], k[mask])
        assert sparsity_ok(SystemMatrix(m, "unconstrained"))


def test_m44_zero_switch(cfg):
    m = assemble_unconstrained(cfg.weights, cfg.coeffs, cfg.params, cfg.point, m44_zero=True)
    assert m.entries[3, 3] == 0.0
    assert cfg.replace(unconstrained_m44_zero=True).matrix(False).entries[3, 3] == 0.0


def test_zero_weights(cfg):
    w = UncertaintyWeights()
    m, k = both(cfg, weights=w)
    d = poly_derivatives(cfg.coeffs, cfg.point).dv_dl
    expected = np.zeros((4, 4))
    # Only the weight-free reciprocal part of M42 survives.
    expected[3, 1] = 1.0 / d
    np.testing.assert_array_equal(m, expected)
    np.testing.assert_array_equal(k, expected)


def test_zero_multipliers_zero_k44(cfg):
    w = dataclasses.replace(cfg.weights, lam=(0.0, 0.0, 0.0, 0.0))
    assert both(cfg, weights=w)[1][3, 3] == 0.0


def test_f_homogeneity(cfg):
    s = 3.7
    scaled = dataclasses.replace(cfg.params, **{f"f{k}": s * cfg.params.f(k) for k in range(1, 12)})
    m, _ = both(cfg)
    ms, _ = both(cfg, params=scaled)
    for i, j in ((0, 0), (0, 2), (1, 1), (1, 2), (2, 1), (2, 2)):
        assert ms[i, j] == pytest.approx(s * m[i, j], rel=1e-12)


def test_no_compound_terms_decouples(cfg):
    c = dataclasses.replace(cfg.coeffs, a12=0.0, a23=0.0, a31=0.0, c12=0.0, d12=0.0, beta12=0.0)
    m, _ = both(cfg, coeffs=c)
    assert m[1, 2] == 0.0 and m[2, 1] == 0.0


@pytest.mark.parametrize("changes, entry", [
    ({"beta1": 0.0, "beta12": 0.0, "beta1p": 0.0}, "M13"),
    ({"a1": 0.0, "a12": 0.0, "a31": 0.0, "a1p": 0.0}, "M42"),
])
def test_singular_entries(cfg, changes, entry):
    c = dataclasses.replace(cfg.coeffs, **changes)
    with pytest.raises(SingularPointError, match=entry):
        assemble_unconstrained(cfg.weights, c, cfg.params, cfg.point)


def test_site_count_scales_entries(cfg):
    p2 = dataclasses.replace(cfg.params, site_count=2)
    m, _ = both(cfg)
    m2, _ = both(cfg, params=p2)
    np.testing.assert_allclose(m2[:3], 2 * m[:3], rtol=1e-14)


class TestMassScales:
    def test_rows_divided(self, cfg):
        m = cfg.matrix(True)
        eff = effective_matrix(m, MassScales((1.0, 2.0, 4.0, 8.0)))
        np.testing.assert_allclose(eff, m.entries / np.array([[1.0], [2.0], [4.0], [8.0]]))

    def test_validation(self):
        with pytest.raises(ValidationError):
            MassScales((1.0, 0.0, 1.0, 1.0))
        with pytest.raises(ValidationError):
            MassScales((1.0, 1.0))
        assert MassScales.uniform(3.0).xi == (3.0,) * 4


def test_system_matrix_shape():
    with pytest.raises(ValidationError):
        SystemMatrix(np.zeros((3, 3)), "constrained")
    m = SystemMatrix(np.eye(4), "constrained")
    assert m.to_json() == {"kind": "constrained", "entries": np.eye(4).tolist()}


def test_full_pattern_data():
    assert FULL_SYSTEM_PATTERN.shape == (10, 10)
    assert len(FULL_SYSTEM_ORDER) == 10
    assert not FULL_SYSTEM_PATTERN[3].any() and not FULL_SYSTEM_PATTERN[4].any()


class TestSecondPartials:
    def test_lagrangian_n5_difference(self, cfg):
        sp = second_partials(cfg.weights, cfg.coeffs, cfg.params, cfg.point)
        w, p, c = cfg.weights, cfg.params, cfg.coeffs
        assert sp["L:N5N5"] - sp["F:N5N5"] == pytest.approx(2 * w.eps[0] * w.A(3) * p.f3 * c.b2,
                                                           rel=1e-12)

    def test_beta_prime_zero(self, cfg):
        c = InterdepCoefficients(a1=0.1, a2=0.2, a3=0.3, alpha1=0.25, alpha2=0.75,
                                 beta1=0.5, beta2=0.5, gamma=0.13)
        sp = second_partials(cfg.weights, c, cfg.params, cfg.point)
        assert sp["F:N7N7"] == 0.0

    def test_double_entry(self, cfg):
        """Independent re-typing of a selection of the cataloged forms."""
        sp = second_partials(cfg.weights, cfg.coeffs, cfg.params, cfg.point)
        w, p, c, q = cfg.weights, cfg.params, cfg.coeffs, cfg.point
        e1, e2, e3, e4 = w.eps
        A = w.A
        T = p.tax_unit_cost
        dvdn5 = c.a2 + c.a23 * q.n7 + c.a12 * q.l + 2 * c.a2p * q.n5
        dvdn7 = c.a3 + c.a23 * q.n5 + c.a31 * q.l + 2 * c.a3p * q.n7
        dvdl = c.a1 + c.a12 * q.n5 + c.a31 * q.n7 + 2 * c.a1p * q.l
        dn3dn4 = c.alpha1 + c.alpha12 * q.n6 + 2 * c.alpha1p * q.n4
        dn3dn6 = c.alpha2 + c.alpha12 * q.n4 + 2 * c.alpha2p * q.n6
        dn4dn7 = c.beta1 + c.beta12 * q.n8 + 2 * c.beta1p * q.n7
        dn4dn8 = c.beta2 + c.beta12 * q.n7 + 2 * c.beta2p * q.n8

        n5n5 = (2 * (e1 * A(1) * p.f1 * c.a2p + c.gamma * e4 * A(13) * p.f10 * c.a2p
                     + e1 * A(2) * p.f2 * c.c2p + e1 * A(4) * p.y * c.d2p)
                + c.gamma * dvdn5 * (c.gamma * e4 * A(13) * p.f10 * c.a23 + e1 * A(1) * p.f1 * c.a23))
        n7n7 = (e1 * A(1) * p.f1 * c.a23 / (c.gamma * dvdn5)
                + 2 * (e1 * A(1) * p.f1 * c.a3p + e3 * A(9) * p.f7 * c.beta1p))
        n3n3 = ((e3 * A(9) * p.f7 + e2 * A(8) * p.f6 * dn3dn4 + e4 * A(13) * p.f10 / dn4dn7
                 + e4 * A(14) * p.f11 / dn4dn8) / dn3dn4
                + (e3 * A(12) * T + e2 * A(8) * p.f6 * dn3dn6) / dn3dn6)
        n3n7 = (-2 * c.alpha1p * e3 * A(9) * p.f7 * dn4dn7 / dn3dn4
                + c.alpha12 * A(12) * T * dn4dn7 / dn3dn6 ** 2)
        n4n7 = (c.gamma * dvdl * (2 * c.beta1p * e4 * A(13) * p.f10 / dn4dn7 ** 2
                                  - c.beta12 * e4 * A(14) * p.f11 / dn4dn8 ** 2)
                + 2 * e2 * A(8) * p.f6 * c.alpha1p * dn4dn7)
        l_n4n4 = (dn3dn4 * (e2 * A(8) * p.f6 + e3 * (A(9) * p.f7 / dn3dn4 - A(12) * T / dn3dn6))
                  + (e1 * A(1) * p.f1 * dvdn7 + e3 * A(9) * p.f7 * dn4dn7 + e4 * A(13) * p.f10) / dn4dn7
                  + (e3 * A(9) * p.f7 * dn4dn7 + e4 * A(14) * p.f11) / dn4dn8)
        l_n7n7 = (e1 * A(1) * p.f1 * c.a23 / (c.gamma * dvdn5) + 2 * e1 * A(1) * p.f1 * c.a3p
                  + 2 * e3 * A(9) * p.f7 * c.beta1p)
        expected = {"F:N5N5": n5n5, "F:N7N7": n7n7, "F:N3N3": n3n3, "F:N3N7": n3n7,
                    "F:N3VCO2": c.gamma * n3n7, "F:N4N7": n4n7, "F:N4VCO2": n4n7 / dvdn7,
                    "L:N4N4": l_n4n4, "L:N7N7": l_n7n7}
        for key, ref in expected.items():
            assert sp[key] == pytest.approx(ref, rel=1e-12, abs=1e-300), key

    def test_catalog_complete(self, cfg):
        sp = second_partials(cfg.weights, cfg.coeffs, cfg.params, cfg.point)
        for key in ("F:VCO2VCO2", "F:N3N3", "F:N4N4", "F:N5N5", "F:N7N7",
                    "L:VCO2VCO2", "L:N4N4", "L:N5N5", "L:N7N7"):
            assert np.isfinite(sp[key])

    def test_singular(self, cfg):
        with pytest.raises(SingularPointError):
            second_partials(cfg.weights, dataclasses.replace(cfg.coeffs, gamma=0.0),
                            cfg.params, cfg.point)


unit = st.floats(0.01, 1.0)


@settings(max_examples=60, deadline=None)
@given(st.lists(unit, min_size=15, max_size=15), st.lists(unit, min_size=4, max_size=4),
       st.lists(unit, min_size=4, max_size=4), st.lists(st.floats(0.1, 50.0), min_size=7, max_size=7))
def test_structure_for_any_inputs(a, eps, lam, state):
    from scn.config import load_config
    cfg = load_config()
    w = UncertaintyWeights(tuple(a), tuple(eps), tuple(lam))
    q = dataclasses.replace(cfg.point, n4=state[0], n5=state[1], n7=state[2], vco2=state[3],
                            l=state[4], n6=state[5], n8=state[6])
    m = assemble_unconstrained(w, cfg.coeffs, cfg.params, q)
    k = assemble_constrained(w, cfg.coeffs, cfg.params, q)
    assert sparsity_ok(m) and sparsity_ok(k)
    diff = m.entries != k.entries
    diff[3, 3] = False
    assert not diff.any()
