import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from larmor_teleport.gaussian_core import (
    CANONICAL_LAYOUT,
    apply_map,
    entropy_vn,
    reduce,
    symplectic_defect,
    symplectic_eigenvalues,
    vacuum_state,
)
from larmor_teleport.scattering_model import (
    MODE_KINDS,
    QND_LAYOUT,
    InteractionParams,
    PhysicalParams,
    TemporalMode,
    cesium_d2_example,
    coupling_from_physical,
    gram_matrix,
    interaction_map,
    layout_for_order,
    mode_function,
    mode_overlap,
    qnd_map,
)

KAPPAS = [0.0, 0.5, 1.0, 1.64, 2.0, 3.0]
ix = CANONICAL_LAYOUT.index


class TestInteractionMap:
    def test_zero_coupling_is_identity(self):
        m = interaction_map(0.0)
        np.testing.assert_array_equal(m.S, np.eye(10))
        np.testing.assert_array_equal(m.noise, 0.0)

    @pytest.mark.parametrize("kappa", KAPPAS)
    def test_symplectic(self, kappa):
        assert symplectic_defect(interaction_map(kappa).S) <= 1e-10

    @pytest.mark.parametrize("order", [0, 1, 2, 3])
    def test_symplectic_any_order(self, order):
        assert symplectic_defect(interaction_map(1.7, order=order).S) <= 1e-10

    def test_kappa_two_coefficients(self):
        S = interaction_map(2.0).S
        assert S[ix("x_A"), ix("p_c")] == pytest.approx(math.sqrt(2))
        assert S[ix("x_c"), ix("p_s1")] == pytest.approx(1 / math.sqrt(3))

    def test_noise_kappa_two(self):
        n = interaction_map(2.0).noise
        expected = np.zeros(10)
        expected[[ix("x_c1"), ix("x_s1")]] = 1 / 15
        np.testing.assert_allclose(n, np.diag(expected))

    @pytest.mark.parametrize("kappa", [0.7, 1.3])
    def test_output_relations(self, kappa):
        S = interaction_map(kappa).S
        r, h = kappa / math.sqrt(2), (kappa / 2) ** 2
        row = dict(zip(CANONICAL_LAYOUT.labels, S[ix("x_s")]))
        assert row["x_s"] == 1
        assert row["x_A"] == pytest.approx(-r)
        assert row["p_c"] == pytest.approx(-h)
        assert row["p_c1"] == pytest.approx(-h / math.sqrt(3))
        assert S[ix("x_c1"), ix("p_s")] == pytest.approx(-h / math.sqrt(3))
        # sign fixed by requiring a symplectic map
        assert S[ix("x_s1"), ix("p_c")] == pytest.approx(h / math.sqrt(3))
        for p in ("p_A",):
            assert S[ix(p), ix("p_s")] == pytest.approx(r)
        for q in ("p_c", "p_s", "p_c1", "p_s1"):
            np.testing.assert_array_equal(S[ix(q)], np.eye(10)[ix(q)])

    def test_negative_kappa(self):
        with pytest.raises(ValueError):
            interaction_map(-0.1)

    def test_accepts_params(self):
        m = interaction_map(InteractionParams(1.0, n0=350))
        np.testing.assert_array_equal(m.S, interaction_map(1.0).S)

    def test_truncation_noise_matches_next_order(self):
        # the noise lumped at order 1 is what the explicit order-2 couplings add
        k = 1.4
        lo = apply_map(vacuum_state(CANONICAL_LAYOUT), interaction_map(k))
        hi = apply_map(vacuum_state(layout_for_order(2)), interaction_map(k, order=2))
        np.testing.assert_allclose(reduce(hi, CANONICAL_LAYOUT.modes).cov, lo.cov, atol=1e-14)

    def test_atomic_nu(self):
        for k in KAPPAS:
            s = reduce(apply_map(vacuum_state(CANONICAL_LAYOUT), interaction_map(k)), ["A"])
            assert symplectic_eigenvalues(s)[0] == pytest.approx(1 + k * k / 2, abs=1e-12)


class TestQND:
    def test_identity_at_zero(self):
        np.testing.assert_array_equal(qnd_map(0.0).S, np.eye(4))

    @pytest.mark.parametrize("kappa", [0.5, 1.0, 2.0])
    def test_symplectic(self, kappa):
        assert symplectic_defect(qnd_map(kappa).S) <= 1e-10

    @pytest.mark.parametrize("kappa", KAPPAS)
    def test_enhancement_over_qnd(self, kappa):
        s = reduce(apply_map(vacuum_state(QND_LAYOUT), qnd_map(kappa)), ["A"])
        nu_qnd = symplectic_eigenvalues(s)[0]
        assert nu_qnd == pytest.approx(math.sqrt(1 + kappa**2))
        assert 1 + kappa**2 / 2 >= nu_qnd
        larmor = reduce(apply_map(vacuum_state(CANONICAL_LAYOUT), interaction_map(kappa)), ["A"])
        assert entropy_vn(larmor) >= entropy_vn(s)


class TestModes:
    def test_cos_at_zero(self):
        assert mode_function("cos", 350)(0.0) == pytest.approx(math.sqrt(2))

    @pytest.mark.parametrize("u", [0.0, 0.1, 0.37, 0.9])
    def test_back_action_shapes(self, u):
        n0 = 350
        b1 = TemporalMode("sin_back1", n0)(u)
        b2 = TemporalMode("sin_back2", n0)(u)
        # sqrt(3)(2/T)^(3/2)(T/2 - tau) and 6 sqrt(10/T^5)(T^2/6 - T tau + tau^2), with T = 1
        assert b1 == pytest.approx(math.sqrt(3) * 2**1.5 * (0.5 - u) * math.sin(n0 * u))
        assert b2 == pytest.approx(6 * math.sqrt(10) * (1 / 6 - u + u * u) * math.sin(n0 * u))

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            TemporalMode("tan", 350)

    @pytest.mark.parametrize("kind", MODE_KINDS)
    def test_norms(self, kind):
        m = TemporalMode(kind, 350)
        assert abs(mode_overlap(m, m) - 1) <= 3 / 350

    @pytest.mark.parametrize("a, b", [("cos", "sin"), ("sin", "sin_back1"), ("cos", "cos_back1"), ("cos_back1", "sin_back2")])
    def test_near_orthogonal(self, a, b):
        assert abs(mode_overlap(TemporalMode(a, 350), TemporalMode(b, 350))) <= 3 / 350

    def test_overlap_needs_same_n0(self):
        with pytest.raises(ValueError):
            mode_overlap(TemporalMode("cos", 100), TemporalMode("cos", 350))

    @pytest.mark.parametrize("n0", [100, 350])
    def test_gram_close_to_identity(self, n0):
        g = gram_matrix(n0)
        assert np.abs(g - np.eye(6)).max() <= 5 / n0

    def test_discretized_gram_converges_to_continuous(self):
        np.testing.assert_allclose(gram_matrix(100, n_slices=1 << 15), gram_matrix(100), atol=1e-5)


class TestPhysical:
    def test_scaling_in_detuning(self):
        p = cesium_d2_example()
        q = cesium_d2_example(Delta=2 * p.Delta)
        k1, e1 = coupling_from_physical(p)
        k2, e2 = coupling_from_physical(q)
        assert k2 == pytest.approx(k1 / 2)
        assert e2 == pytest.approx(e1 / 4)

    def test_vanishing_photon_number(self):
        # strictly positive inputs only, so approach the limit
        vals = [coupling_from_physical(cesium_d2_example(N_ph=n)) for n in (1e-6, 1e-12, 1e-18)]
        assert vals[-1][0] < 1e-9 and vals[-1][1] < 1e-20
        assert vals[0][0] > vals[1][0] > vals[2][0]

    @settings(max_examples=40, deadline=None)
    @given(f=st.floats(0.1, 10.0))
    def test_photon_scaling(self, f):
        p = cesium_d2_example()
        k1, e1 = coupling_from_physical(p)
        k2, e2 = coupling_from_physical(cesium_d2_example(N_ph=f * p.N_ph))
        assert k2 == pytest.approx(k1 * math.sqrt(f))
        assert e2 == pytest.approx(e1 * f)

    @pytest.mark.parametrize("field", ["N_at", "sigma", "Delta"])
    def test_non_positive_rejected(self, field):
        with pytest.raises(ValueError):
            cesium_d2_example(**{field: 0.0})

    def test_small_detuning_warns(self):
        with pytest.warns(UserWarning, match="Delta/Gamma"):
            cesium_d2_example(Delta=2 * math.pi * 10e6)

    def test_derived_quantities(self):
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            p = cesium_d2_example()
        assert isinstance(p, PhysicalParams)
        assert p.n0 == pytest.approx(350)
        assert p.J == pytest.approx(4e12)
