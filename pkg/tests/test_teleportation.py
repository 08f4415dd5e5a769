import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from larmor_teleport.gaussian_core import (
    apply_map,
    symplectic_defect,
    symplectic_form,
    tensor,
    vacuum_state,
)
from larmor_teleport.teleportation import (
    INPUT_LAYOUT,
    PROTOCOL_LAYOUT,
    CoherentInput,
    Gains,
    NoiseParams,
    _grid_average,
    _noisy_model,
    atomic_entropy,
    average_fidelity_gaussian,
    average_fidelity_quadrature,
    bell_measure_map,
    classical_benchmark,
    effective_gain,
    encode_input,
    fidelity_coherent,
    ideal_fidelity,
    monte_carlo_feedback,
    optimize_gains,
    teleport_closed_form,
    teleport_noisy,
    teleport_pipeline,
    tms_benchmark_fidelity,
    tms_entropy,
)

NOISELESS = NoiseParams(0.0, 0.0)


class TestEncoding:
    def test_vacuum_input(self):
        s = encode_input(CoherentInput())
        np.testing.assert_array_equal(s.mean, 0.0)
        np.testing.assert_array_equal(s.cov, np.eye(4))

    def test_sqrt2_amplitude(self):
        s = encode_input(CoherentInput(math.sqrt(2), 0.0))
        yc, qc, ys, qs = s.mean
        assert (ys, qc) == pytest.approx((1.0, 1.0))
        assert (yc, qs) == pytest.approx((0.0, 0.0))
        assert (ys + qc) / math.sqrt(2) == pytest.approx(math.sqrt(2))

    @given(y=st.floats(-5, 5), q=st.floats(-5, 5))
    def test_inversion(self, y, q):
        yc, qc, ys, qs = encode_input(CoherentInput(y, q)).mean
        assert (ys + qc) / math.sqrt(2) == pytest.approx(y, abs=1e-12)
        assert -(yc - qs) / math.sqrt(2) == pytest.approx(q, abs=1e-12)


class TestBell:
    def test_symplectic(self):
        bell, spec = bell_measure_map()
        assert symplectic_defect(bell.S) <= 1e-10
        assert spec.measured == ("x_c", "x_s", "p_in_c", "p_in_s")

    def test_vacuum_unit_variance(self):
        bell, spec = bell_measure_map()
        out = apply_map(vacuum_state(PROTOCOL_LAYOUT), bell)
        idx = [PROTOCOL_LAYOUT.index(lab) for lab in spec.measured]
        np.testing.assert_allclose(np.diag(out.cov)[idx], 1.0)

    def test_means(self):
        bell, spec = bell_measure_map()
        s = tensor(vacuum_state(PROTOCOL_LAYOUT.sub(("A", "c", "s", "c1", "s1"))), encode_input(CoherentInput(2.0, 0.0)))
        out = apply_map(s, bell)
        m = dict(zip(PROTOCOL_LAYOUT.labels, out.mean))
        assert m["x_s"] == pytest.approx(1.0)
        assert m["p_in_c"] == pytest.approx(-1.0)


class TestIdeal:
    def test_optimum(self):
        assert teleport_closed_form(1.64, CoherentInput()).fidelity == pytest.approx(0.77, abs=0.005)

    def test_kappa_zero(self):
        r = teleport_closed_form(0.0, CoherentInput(1.0, 2.0))
        np.testing.assert_allclose(r.final_var, [1.5, 1.5])
        assert r.fidelity == pytest.approx(0.5, abs=1e-15)

    def test_kappa_one(self):
        assert teleport_closed_form(1.0, CoherentInput()).fidelity == pytest.approx(0.716, abs=5e-4)

    def test_means_mapped(self):
        r = teleport_pipeline(1.64, CoherentInput(3.0, -2.0))
        np.testing.assert_allclose(r.final_mean, [3.0, -2.0], atol=1e-12)

    def test_pipeline_equivalence_on_grid(self):
        for k in np.arange(0, 3.0001, 0.05):
            inp = CoherentInput(0.4, -1.1)
            a, b = teleport_closed_form(k, inp), teleport_pipeline(k, inp)
            assert np.abs(a.final_var - b.final_var).max() <= 1e-10
            assert np.abs(a.final_mean - b.final_mean).max() <= 1e-10

    @pytest.mark.parametrize("inp", [CoherentInput(), CoherentInput(5.0, 7.0)])
    def test_variance_independent_of_input(self, inp):
        np.testing.assert_allclose(teleport_pipeline(1.2, inp).final_var, teleport_pipeline(1.2, CoherentInput()).final_var)

    def test_beats_classical_limit(self):
        k = np.linspace(0.31, 3.0, 100)
        assert np.all(ideal_fidelity(k) > 0.5)

    def test_array_and_scalar_agree(self):
        assert ideal_fidelity(1.3) == pytest.approx(teleport_closed_form(1.3, CoherentInput()).fidelity)


class TestFidelity:
    def test_perfect(self):
        assert fidelity_coherent([1, 2], [0.5, 0.5], CoherentInput(1, 2)) == pytest.approx(1.0)

    def test_vacuum_noise(self):
        assert fidelity_coherent([0, 0], [1.5, 1.5], CoherentInput()) == pytest.approx(0.5)

    def test_large_mismatch(self):
        assert fidelity_coherent([0, 0], [0.5, 0.5], CoherentInput(40, 0)) < 1e-100

    def test_rejects_bad_variance(self):
        with pytest.raises(ValueError):
            fidelity_coherent([0, 0], [0.0, 0.5], CoherentInput())


class TestNoisy:
    @pytest.mark.parametrize("kappa", [0.0, 0.96, 1.64])
    def test_noiseless_limit(self, kappa):
        inp = CoherentInput(1.0, -0.3)
        a = teleport_noisy(kappa, NOISELESS, Gains(), inp)
        b = teleport_closed_form(kappa, inp)
        np.testing.assert_allclose(a.final_var, b.final_var, atol=1e-12)
        np.testing.assert_allclose(a.final_mean, b.final_mean, atol=1e-12)

    def test_effective_gain_is_mean_gain(self):
        G = effective_gain(0.96, NoiseParams(0.1, 0.1), Gains(0.8, 1.0))
        # the input only reaches the atoms through the lossy Bell outcomes;
        # both quadratures see the average gain
        np.testing.assert_allclose(G, 0.9 * math.sqrt(1 - 0.1) * np.eye(2), atol=1e-12)

    def test_single_decay_flag(self):
        a = teleport_noisy(1.0, NoiseParams(0.2, 0.0), Gains(), CoherentInput(), second_stage=True)
        b = teleport_noisy(1.0, NoiseParams(0.2, 0.0), Gains(), CoherentInput(), second_stage=False)
        assert not np.allclose(a.final_var, b.final_var)

    @pytest.mark.parametrize("field", ["beta", "epsilon"])
    def test_ranges(self, field):
        with pytest.raises(ValueError):
            NoiseParams(**{field: 1.0})

    def test_monotone_in_noise(self):
        f = [[optimize_gains(0.96, NoiseParams(b, e), 4.0)[1] for b in (0.0, 0.1, 0.2)] for e in (0.08, 0.16)]
        f = np.array(f)
        assert np.all(np.diff(f, axis=1) < 0)
        assert np.all(np.diff(f, axis=0) < 0)

    @settings(max_examples=40, deadline=None)
    @given(
        kappa=st.floats(0.0, 3.0), beta=st.floats(0.0, 0.95), eps=st.floats(0.0, 0.95),
        gx=st.floats(-2.0, 2.0), gq=st.floats(-2.0, 2.0),
    )
    def test_final_state_physical(self, kappa, beta, eps, gx, gq):
        r = teleport_noisy(kappa, NoiseParams(beta, eps), Gains(gx, gq), CoherentInput())
        herm = 2 * r.final_cov + 1j * symplectic_form(1)
        assert np.linalg.eigvalsh(herm).min() >= -1e-9


class TestAverage:
    def test_unit_gain_equals_point_fidelity(self):
        point = teleport_closed_form(1.2, CoherentInput()).fidelity
        for n_bar in (0.0, 1.0, 50.0):
            assert average_fidelity_gaussian(1.2, NOISELESS, Gains(), n_bar) == pytest.approx(point, abs=1e-14)

    def test_quadrature_oracle(self):
        g, _ = optimize_gains(0.96, NOISELESS, 4.0)
        a = average_fidelity_gaussian(0.96, NOISELESS, g, 4.0)
        b = average_fidelity_quadrature(0.96, NOISELESS, g, 4.0)
        assert abs(a - b) <= 1e-6

    def test_vectorized_matches_scalar(self):
        model = _noisy_model(0.96, NoiseParams(0.1, 0.12))
        gx, gq = np.array([0.3, 1.1]), np.array([0.9, 1.7])
        vec = _grid_average(model, gx, gq, 4.0)
        ref = [average_fidelity_gaussian(0.96, NoiseParams(0.1, 0.12), Gains(a, b), 4.0) for a, b in zip(gx, gq)]
        np.testing.assert_allclose(vec, ref, atol=1e-14)

    def test_negative_nbar(self):
        with pytest.raises(ValueError):
            average_fidelity_gaussian(1.0, NOISELESS, Gains(), -1.0)


class TestOptimizer:
    def test_large_nbar_unit_effective_gain(self):
        g, _ = optimize_gains(0.96, NOISELESS, 1e3)
        G = effective_gain(0.96, NOISELESS, g)
        assert G[0, 0] == pytest.approx(1.0, abs=1e-2)
        assert G[1, 1] == pytest.approx(1.0, abs=1e-2)

    @pytest.mark.parametrize("noise", [NOISELESS, NoiseParams(0.1, 0.1), NoiseParams(0.3, 0.16)])
    def test_dominates_unit_gain(self, noise):
        _, best = optimize_gains(0.96, noise, 4.0)
        assert best >= average_fidelity_gaussian(0.96, noise, Gains(), 4.0)

    @pytest.mark.parametrize("n_bar", [0.0, 4.0])
    def test_matches_dense_grid(self, n_bar):
        noise = NoiseParams(0.1, 0.1)
        g, best = optimize_gains(0.96, noise, n_bar)
        axis = np.linspace(0, 2, 401)
        GX, GQ = np.meshgrid(axis, axis, indexing="ij")
        F = _grid_average(_noisy_model(0.96, noise), GX, GQ, n_bar)
        assert best >= F.max() - 1e-9
        # the optimum is a ridge in (g_x, g_q); compare fidelity, not location
        assert best - F.max() < 1e-4

    def test_deterministic(self):
        assert optimize_gains(0.96, NoiseParams(0.1, 0.1), 4.0) == optimize_gains(0.96, NoiseParams(0.1, 0.1), 4.0)


class TestBenchmarks:
    @pytest.mark.parametrize("n_bar, value", [(4.0, 5 / 9), (0.0, 1.0)])
    def test_classical(self, n_bar, value):
        assert classical_benchmark(n_bar) == pytest.approx(value, abs=1e-15)

    def test_classical_limit(self):
        assert classical_benchmark(1e12) == pytest.approx(0.5)

    def test_tms_zero(self):
        assert tms_benchmark_fidelity(0.0) == 0.5

    def test_tms_large(self):
        assert tms_benchmark_fidelity(60.0) > 1 - 1e-15

    @pytest.mark.parametrize("r", [0.1, 0.7, 1.5])
    def test_tms_inverse(self, r):
        assert tms_benchmark_fidelity(tms_entropy(r)) == pytest.approx(1 / (1 + math.exp(-2 * r)), abs=1e-10)

    def test_tms_dominates_ours(self):
        for k in np.linspace(0.05, 3, 60):
            assert tms_benchmark_fidelity(atomic_entropy(k)) > ideal_fidelity(k)

    def test_tms_close_at_optimum(self):
        f_ours = teleport_closed_form(1.64, CoherentInput()).fidelity
        f_tms = tms_benchmark_fidelity(atomic_entropy(1.64))
        assert f_tms >= 0.77
        assert f_tms - f_ours <= 0.05


@pytest.fixture(scope="module")
def mc_run():
    return monte_carlo_feedback(1.64, CoherentInput(3.0, -2.0), 100_000, seed=7)


class TestMonteCarlo:
    def test_means(self, mc_run):
        ref = teleport_closed_form(1.64, CoherentInput(3.0, -2.0))
        assert np.all(np.abs(mc_run.mean - ref.final_mean) <= 5 * mc_run.mean_stderr)

    def test_variances(self, mc_run):
        ref = teleport_closed_form(1.64, CoherentInput(3.0, -2.0))
        assert np.all(np.abs(np.diag(mc_run.cov) - ref.final_var) <= 5 * mc_run.var_stderr)

    def test_seeded(self):
        a = monte_carlo_feedback(1.0, CoherentInput(1, 1), 2000, seed=3)
        b = monte_carlo_feedback(1.0, CoherentInput(1, 1), 2000, seed=3)
        np.testing.assert_array_equal(a.mean, b.mean)
        np.testing.assert_array_equal(a.cov, b.cov)

    def test_minimum_samples(self):
        with pytest.raises(ValueError):
            monte_carlo_feedback(1.0, CoherentInput(), 10, seed=0)


def test_input_layout():
    assert INPUT_LAYOUT.labels == ("x_in_c", "p_in_c", "x_in_s", "p_in_s")
