import numpy as np
import pytest

from trapgate import (HBAR, FieldRamp, ResonanceModel, ResonanceState,
                      apply_truth_table, build_hamiltonian, coupling,
                      default_resonance_model, evolve_gate, resonance_energy,
                      sample_gate_trajectory, scattering_length)


@pytest.fixture(scope="module")
def model():
    return default_resonance_model()


def _decoupled_model(n_levels=6):
    base = default_resonance_model()
    return ResonanceModel(resonant_field=base.resonant_field, width=base.width,
                          slope=0.0, background_length=base.background_length,
                          trap_frequency=base.trap_frequency, n_levels=n_levels)


class TestScatteringLength:
    def test_far_field_asymptote(self, model):
        b = model.resonant_field + 1000.0 * model.width
        a = scattering_length(b, model)
        assert abs(a / model.background_length - 1.0) <= 1e-3 * (1 + 1e-9)

    def test_zero_crossing_at_one_width(self, model):
        b = model.resonant_field + model.width
        assert abs(scattering_length(b, model)) < 1e-10 * model.background_length
        # with a width that is exact in binary the crossing is exactly zero
        exact = ResonanceModel(resonant_field=685.0, width=0.015625,
                               slope=model.slope,
                               background_length=model.background_length,
                               trap_frequency=model.trap_frequency)
        assert scattering_length(685.0 + 0.015625, exact) == 0.0

    def test_half_background_at_two_widths(self, model):
        # B0 = 685 G, width 16 mG: at B = 685.032 G the bracket is exactly 1/2.
        a = scattering_length(685.032, model)
        assert a == pytest.approx(model.background_length / 2, rel=1e-9)

    def test_pole_reported(self, model):
        with pytest.raises(ZeroDivisionError):
            scattering_length(model.resonant_field, model)


class TestResonanceEnergy:
    def test_zero_at_resonance(self, model):
        assert resonance_energy(model.resonant_field, model) == 0.0

    def test_linearity(self, model):
        b0 = model.resonant_field
        assert resonance_energy(b0 + 0.2, model) == pytest.approx(
            2.0 * resonance_energy(b0 + 0.1, model), rel=1e-12)

    def test_sign_convention(self, model):
        assert model.slope > 0
        assert resonance_energy(model.resonant_field - 0.1, model) < 0


class TestCoupling:
    def test_level_ratio_is_parameter_free(self, model):
        ratio = coupling(1, model) / coupling(0, model)
        assert ratio == pytest.approx((7.0 / 3.0) ** 0.25, rel=1e-12)

    def test_ground_coupling_direct_formula(self, model):
        hnu = HBAR * model.trap_frequency
        a_bg = model.dimensionless_background_length
        delta = model.dimensionless_width
        expected = 2.0 * hnu * np.sqrt(np.sqrt(3.0) * a_bg * delta / np.pi)
        assert coupling(0, model) == pytest.approx(expected, rel=1e-14)

    def test_sqrt_scaling_in_width(self, model):
        doubled = ResonanceModel(
            resonant_field=model.resonant_field, width=model.width,
            slope=2.0 * model.slope, background_length=model.background_length,
            trap_frequency=model.trap_frequency, n_levels=model.n_levels)
        for v in (0, 3, 7):
            assert coupling(v, doubled) == pytest.approx(
                np.sqrt(2.0) * coupling(v, model), rel=1e-12)

    def test_negative_level_rejected(self, model):
        with pytest.raises(ValueError):
            coupling(-1, model)

    def test_unphysical_negative_width_rejected(self, model):
        with pytest.raises(ValueError):
            ResonanceModel(resonant_field=685.0, width=0.016, slope=-model.slope,
                           background_length=model.background_length,
                           trap_frequency=model.trap_frequency)


class TestHamiltonian:
    def test_decoupled_limit_is_diagonal(self):
        m = _decoupled_model()
        H = build_hamiltonian(685.1, m)
        assert np.max(np.abs(H - np.diag(np.diag(H)))) == 0.0
        hnu = HBAR * m.trap_frequency
        assert np.allclose(np.diag(H)[1:], np.arange(m.n_levels) * hnu)

    def test_hermitian_exactly(self, model):
        H = build_hamiltonian(684.7, model)
        assert np.max(np.abs(H - H.T)) == 0.0

    def test_two_by_two_avoided_crossing_closed_form(self, model):
        m = ResonanceModel(resonant_field=model.resonant_field, width=model.width,
                           slope=model.slope, background_length=model.background_length,
                           trap_frequency=model.trap_frequency, n_levels=1)
        for b in (684.6, 684.997, 685.0, 685.4):
            H = build_hamiltonian(b, m)
            eps = resonance_energy(b, m)
            v0 = coupling(0, m)
            expected = np.array([eps / 2 - np.sqrt((eps / 2) ** 2 + v0**2),
                                 eps / 2 + np.sqrt((eps / 2) ** 2 + v0**2)])
            scale = HBAR * m.trap_frequency
            assert np.max(np.abs(np.linalg.eigvalsh(H) - expected)) / scale < 1e-10


class TestEvolution:
    def test_far_detuned_hold_is_the_identity(self, model):
        b = model.resonant_field + 1e4 * model.width
        ramp = FieldRamp(durations=np.array([1e-4]), fields=np.array([b]))
        result, final = evolve_gate(ramp, model)
        assert result.infidelity < 1e-4
        assert abs(result.phase) < 0.01

    def test_decoupled_limit_is_exact_identity(self):
        m = _decoupled_model()
        ramp = FieldRamp(durations=np.array([1e-3, 2e-3, 1e-3]),
                         fields=np.array([685.5, 684.5, 685.5]))
        result, final = evolve_gate(ramp, m)
        assert result.infidelity == 0.0
        assert result.phase == 0.0

    def test_norm_conserved(self, model):
        ramp = FieldRamp(durations=np.full(16, 5e-4),
                         fields=np.linspace(685.6, 684.4, 16))
        _, final = evolve_gate(ramp, model)
        assert abs(np.linalg.norm(final.amplitudes) - 1.0) < 1e-10

    def test_trajectory_sampling_matches_final_state(self, model):
        ramp = FieldRamp(durations=np.full(8, 5e-4),
                         fields=np.linspace(685.6, 684.4, 8))
        result, _ = evolve_gate(ramp, model)
        times, ground, phase = sample_gate_trajectory(ramp, model, n_times=33)
        assert times[0] == 0.0
        assert times[-1] == pytest.approx(ramp.total_time)
        assert ground[-1] == pytest.approx(result.ground_return, abs=1e-12)
        wrapped = np.angle(np.exp(1j * (phase[-1] - result.phase)))
        assert abs(wrapped) < 1e-12

    def test_invalid_ramp_rejected(self):
        with pytest.raises(ValueError):
            FieldRamp(durations=np.array([1e-3, -1e-3]), fields=np.array([685.0, 685.1]))
        with pytest.raises(ValueError):
            FieldRamp(durations=np.array([1e-3]), fields=np.array([685.0, 685.1]))

    def test_state_norm_validated(self, model):
        with pytest.raises(ValueError):
            ResonanceState(amplitudes=np.ones(model.dimension))


class TestTruthTable:
    def test_pi_phase_flips_the_interacting_channel(self):
        state = np.array([1.0, 0.0, 0.0, 0.0], dtype=complex)
        out = apply_truth_table(np.pi, state)
        assert out[0] == pytest.approx(-1.0, abs=1e-15)
        assert np.all(out[1:] == 0.0)

    def test_non_interacting_channels_unchanged(self):
        state = np.array([0.0, 0.0, 0.0, 1.0], dtype=complex)
        out = apply_truth_table(1.234, state)
        assert np.array_equal(out, state)

    def test_zero_phase_is_identity(self, rng):
        state = rng.normal(size=4) + 1j * rng.normal(size=4)
        state /= np.linalg.norm(state)
        assert np.array_equal(apply_truth_table(0.0, state), state)

    def test_unitary_diagonal(self, rng):
        for _ in range(5):
            state = rng.normal(size=4) + 1j * rng.normal(size=4)
            state /= np.linalg.norm(state)
            out = apply_truth_table(0.7, state)
            assert np.linalg.norm(out) == pytest.approx(1.0, abs=1e-15)
            back = apply_truth_table(-0.7, out)
            assert np.max(np.abs(back - state)) < 1e-15

    def test_wrong_shape_rejected(self):
        with pytest.raises(ValueError):
            apply_truth_table(0.1, np.ones(3))


def _makhlin_g1(unitary: np.ndarray) -> complex:
    """First local invariant of a two-qubit gate (magic-basis construction)."""
    magic = np.array([[1, 0, 0, 1j],
                      [0, 1j, 1, 0],
                      [0, 1j, -1, 0],
                      [1, 0, 0, -1j]]) / np.sqrt(2.0)
    m = magic.conj().T @ unitary @ magic
    mtm = m.T @ m
    return np.trace(mtm) ** 2 / (16.0 * np.linalg.det(unitary))


def test_pi_phase_gate_is_maximally_entangling():
    # |G1| = cos^2(phi/2) for this diagonal family: 1 for the identity,
    # 0 (the CZ value) at phi = pi.
    def gate(phi):
        return np.diag([np.exp(1j * phi), 1.0, 1.0, 1.0]).astype(complex)

    assert abs(_makhlin_g1(gate(0.0))) == pytest.approx(1.0, abs=1e-12)
    assert abs(_makhlin_g1(gate(np.pi / 2))) == pytest.approx(0.5, abs=1e-12)
    assert abs(_makhlin_g1(gate(np.pi))) < 1e-12


def test_truncation_robust_converged_answer():
    # The converged gate answer must not depend on the basis truncation:
    # re-optimizing with ten more trap levels reproduces the same phase and
    # infidelity.  (Evaluating the *fixed* 20-level ramp in the larger
    # basis does not converge in truncation: the contact-style couplings
    # shift the resonance self-energy with every added level.)
    from dataclasses import replace

    from trapgate import default_control_problem, optimize, ramp_from_fields

    results = {}
    for n_levels in (20, 30):
        problem = replace(
            default_control_problem(model=default_resonance_model(n_levels=n_levels)),
            total_time=16e-3, max_iterations=800)
        trace = optimize(problem)
        assert trace.converged
        gate_result, _ = evolve_gate(ramp_from_fields(trace.best_fields, problem),
                                     problem.model)
        results[n_levels] = gate_result

    phase_change = np.angle(np.exp(1j * (results[30].phase - results[20].phase)))
    assert abs(phase_change) < 1e-3
    assert abs(results[30].infidelity - results[20].infidelity) < 1e-6
