import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qutritsim.pulse_engine import (
    ConfigurationError,
    Delay,
    InvalidStateError,
    PulseSpec,
    RelaxationParams,
    SequenceProgram,
    Transition,
    apply_relaxation,
    finite_pulse_propagator,
    ground_state,
    ideal_rotation,
    maximally_mixed,
    projector,
    pulse_propagator,
    purity,
    run_sequence,
    validate_density,
)
from qutritsim.spin_core import LabTensor, SpinSystem

from conftest import random_density

transitions = st.sampled_from(list(Transition))
tips = st.floats(-2 * np.pi, 2 * np.pi)
phases = st.floats(0.0, 2 * np.pi)
times = st.floats(0.0, 1e5)


def _psd_ok(rho, tol=1e-12):
    return np.min(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))) > -tol


@given(transitions, tips, phases)
def test_ideal_rotation_unitary_and_selective(tr, tip, phase):
    u = ideal_rotation(tr, tip, phase)
    assert np.allclose(u @ u.conj().T, np.eye(3), atol=1e-12)
    spectator = 2 if tr is Transition.PLUS else 0
    assert abs(u[spectator, spectator]) == pytest.approx(1.0)


def test_pi_pulses_swap_populations():
    rho = run_sequence(ground_state(), SequenceProgram([PulseSpec(Transition.PLUS, np.pi)]))
    assert np.allclose(np.diag(rho).real, [1, 0, 0])
    rho = run_sequence(ground_state(), SequenceProgram([PulseSpec(Transition.MINUS, np.pi)]))
    assert np.allclose(np.diag(rho).real, [0, 0, 1])


def test_zero_phase_half_pulse_is_real_rotation():
    for tr, m in ((Transition.PLUS, 0), (Transition.MINUS, 2)):
        psi = ideal_rotation(tr, np.pi / 2, 0.0) @ np.array([0, 1, 0], dtype=complex)
        expected = np.zeros(3, dtype=complex)
        expected[1] = expected[m] = 1 / np.sqrt(2)
        assert np.allclose(psi, expected)


@given(transitions, st.floats(0.1, 3.0), phases)
def test_phase_advances_superposition_with_transition_sign(tr, tip, phase):
    # Relative to |0>, the pulse phase imprints -phase on |+> and +phase on |->.
    m = 0 if tr is Transition.PLUS else 2
    a = ideal_rotation(tr, tip, 0.0) @ np.array([0, 1, 0], dtype=complex)
    b = ideal_rotation(tr, tip, phase) @ np.array([0, 1, 0], dtype=complex)
    rel = (b[m] / b[1]) / (a[m] / a[1])
    sign = -1 if tr is Transition.PLUS else 1
    assert np.angle(rel * np.exp(-1j * sign * phase)) == pytest.approx(0.0, abs=1e-9)


@settings(max_examples=1000)
@given(st.integers(0, 2 ** 32 - 1), times, st.floats(1.0, 1e5), st.floats(0.01, 1.0))
def test_relaxation_keeps_density_valid(seed, t, t1, t2_frac):
    rho = random_density(np.random.default_rng(seed))
    r = RelaxationParams(t1, t1 * 2 * t2_frac)
    out = apply_relaxation(rho, t, r)
    assert np.trace(out).real == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(out, out.conj().T)
    assert _psd_ok(out, 1e-10)


@given(st.integers(0, 2 ** 32 - 1), times, times)
def test_relaxation_semigroup(seed, t1, t2):
    rho = random_density(np.random.default_rng(seed))
    r = RelaxationParams()
    a = apply_relaxation(apply_relaxation(rho, t1, r), t2, r)
    b = apply_relaxation(rho, t1 + t2, r)
    assert np.allclose(a, b, atol=1e-12)


def test_relaxation_limits():
    r = RelaxationParams()
    rho = random_density(np.random.default_rng(0))
    assert np.allclose(apply_relaxation(rho, 0.0, r), rho)
    assert np.allclose(apply_relaxation(rho, 1e7, r), maximally_mixed())
    with pytest.raises(ValueError):
        apply_relaxation(rho, -1.0, r)


def test_relaxation_parameter_validation():
    with pytest.raises(ConfigurationError):
        RelaxationParams(-1.0, 1.0)
    with pytest.raises(ConfigurationError):
        RelaxationParams(1.0, 3.0)


@given(st.integers(0, 2 ** 32 - 1),
       st.lists(st.tuples(transitions, tips, phases), min_size=1, max_size=6))
def test_unitary_sequences_preserve_purity(seed, pulses):
    rho = random_density(np.random.default_rng(seed))
    prog = SequenceProgram([PulseSpec(*p) for p in pulses])
    out = run_sequence(rho, prog)
    assert purity(out) == pytest.approx(purity(rho), abs=1e-10)
    assert np.trace(out).real == pytest.approx(1.0, abs=1e-12)


def test_delay_without_relaxation_is_identity():
    rho = random_density(np.random.default_rng(3))
    assert np.allclose(run_sequence(rho, SequenceProgram([Delay(100.0)])), rho)


def test_sequence_validation():
    with pytest.raises(ConfigurationError):
        SequenceProgram([])
    with pytest.raises(ConfigurationError):
        Delay(-1.0)
    with pytest.raises(ConfigurationError):
        PulseSpec(Transition.PLUS, np.pi, 0.0, 20.0, 1.0)  # tip != 2 pi rabi t
    with pytest.raises(ConfigurationError):
        PulseSpec(Transition.PLUS, np.pi, 0.0, 20.0)


def test_validate_density():
    with pytest.raises(InvalidStateError):
        validate_density(np.eye(3))
    with pytest.raises(InvalidStateError):
        validate_density(np.diag([1.5, -0.5, 0.0]))
    validate_density(projector([1, 1, 0]))


def test_finite_pulses_need_system():
    with pytest.raises(ConfigurationError):
        pulse_propagator(PulseSpec.finite(Transition.PLUS, np.pi, rabi=20.0))


def test_step_count_overflow(system, lab):
    p = PulseSpec.finite(Transition.PLUS, np.pi, rabi=1e-6)
    with pytest.raises(ConfigurationError):
        finite_pulse_propagator(system, lab, p)


@pytest.mark.parametrize("tr", list(Transition))
@pytest.mark.parametrize("phase", [0.0, 0.7, 2.0])
def test_weak_finite_pulse_matches_ideal_including_phase(system, lab, tr, phase):
    p = PulseSpec.finite(tr, np.pi / 2, phase, rabi=2.0)
    u = pulse_propagator(p, system, lab)
    assert np.allclose(u @ u.conj().T, np.eye(3), atol=1e-10)
    psi0 = np.array([0, 1, 0], dtype=complex)
    assert np.max(np.abs(u @ psi0 - ideal_rotation(tr, np.pi / 2, phase) @ psi0)) < 0.03


def _finite_error(system, lab, tip, rabi):
    worst = 0.0
    for tr in Transition:
        u = pulse_propagator(PulseSpec.finite(tr, tip, rabi=rabi), system, lab)
        worst = max(worst, np.max(np.abs(u - ideal_rotation(tr, tip, 0.0))))
    return worst


def test_finite_pulse_close_to_ideal_at_low_rabi(system, lab):
    assert _finite_error(system, lab, np.pi / 2, 5.0) < 0.02


@pytest.mark.parametrize("tip", [np.pi / 2, np.pi])
def test_finite_pulse_error_grows_with_rabi(system, lab, tip):
    errs = [_finite_error(system, lab, tip, r) for r in (5.0, 10.0, 20.0)]
    assert errs[0] < errs[1] < errs[2]


def test_relaxation_during_finite_pulse_stays_physical(system, lab):
    prog = SequenceProgram([PulseSpec.finite(Transition.PLUS, np.pi / 2, rabi=20.0)],
                           RelaxationParams(10700.0, 0.05))
    strong = run_sequence(ground_state(), prog, system, lab, relax_during_pulses=True)
    free = run_sequence(ground_state(), prog, system, lab)
    assert _psd_ok(strong, 1e-10)
    assert np.trace(strong).real == pytest.approx(1.0)
    assert abs(strong[0, 1]) < abs(free[0, 1])


def test_secular_frame_needs_consistent_system():
    lab = LabTensor(np.zeros((3, 3)))
    sys = SpinSystem(2.0, 3300.0, 9250.0, 9250.0, 9250.0)
    u = pulse_propagator(PulseSpec.finite(Transition.PLUS, np.pi, rabi=5.0), sys, lab)
    assert np.allclose(u @ u.conj().T, np.eye(3), atol=1e-10)
