import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qutritsim.prep_tomo import (
    RHO1_MEASURED,
    RHO2_MEASURED,
    MeasurementSetting,
    SettingsIncompleteError,
    TargetState,
    default_settings,
    fidelity,
    ideal_superposition,
    ideal_target,
    ingest_measured,
    measure_population_difference,
    prepare_psi1,
    prepare_psi2,
    project_to_density,
    tomography,
    tomography_of_state,
)
from qutritsim.pulse_engine import (
    InvalidStateError,
    RelaxationParams,
    Transition,
    ground_state,
    projector,
    run_sequence,
)

from conftest import random_density

seeds = st.integers(0, 2 ** 32 - 1)


@pytest.mark.parametrize("state, pops", [(TargetState.PSI1, [0.5, 0, 0.5]),
                                         (TargetState.PSI2, [1 / 3] * 3)])
def test_ideal_preparations(state, pops):
    prog = prepare_psi1() if state is TargetState.PSI1 else prepare_psi2()
    rho = run_sequence(ground_state(), prog)
    assert np.allclose(np.diag(rho).real, pops, atol=1e-12)
    assert fidelity(rho, ideal_superposition(state)) == pytest.approx(1.0, abs=1e-9)
    assert np.allclose(ideal_target(state), ideal_superposition(state), atol=1e-12)


def test_readout_of_ground_state():
    assert measure_population_difference(ground_state(), Transition.PLUS) == pytest.approx(-0.5)
    assert measure_population_difference(ground_state(), Transition.MINUS) == pytest.approx(0.5)


def test_readout_delay_relaxes_populations():
    r = RelaxationParams(100.0, 1.0)
    m = measure_population_difference(ground_state(), Transition.PLUS, r, delay=100.0)
    assert m == pytest.approx(-0.5 * np.exp(-1.0))


@settings(max_examples=200, deadline=None)
@given(seeds)
def test_tomography_round_trip(seed):
    rho = random_density(np.random.default_rng(seed))
    res = tomography_of_state(rho)
    assert np.max(np.abs(res.rho - rho)) < 1e-8


@settings(max_examples=50, deadline=None)
@given(seeds)
def test_tomography_with_readout_relaxation(seed):
    rho = random_density(np.random.default_rng(seed))
    res = tomography_of_state(rho, relax=RelaxationParams())
    assert np.max(np.abs(res.rho - rho)) < 1e-8


def test_incomplete_settings_are_rejected():
    with pytest.raises(SettingsIncompleteError):
        tomography_of_state(ground_state(), settings=default_settings()[:6])
    with pytest.raises(SettingsIncompleteError):
        tomography_of_state(ground_state(), settings=[MeasurementSetting((), Transition.PLUS)] * 9)


def test_projection_to_density():
    raw = np.diag([0.8, 0.4, -0.2]).astype(complex)
    rho = project_to_density(raw)
    assert np.trace(rho).real == pytest.approx(1.0)
    assert np.min(np.linalg.eigvalsh(rho)) >= 0.0


def test_finite_pulse_tomography(system, lab):
    for state, prog in ((TargetState.PSI1, prepare_psi1(finite_rabi=20.0)),
                        (TargetState.PSI2, prepare_psi2(finite_rabi=20.0))):
        res = tomography(prog, system, lab, RelaxationParams())
        assert fidelity(res.rho, ideal_target(state)) > 0.9


@given(seeds, seeds)
def test_fidelity_symmetric_and_bounded(s1, s2):
    a = random_density(np.random.default_rng(s1))
    b = random_density(np.random.default_rng(s2))
    f = fidelity(a, b)
    assert 0.0 <= f <= 1.0
    assert f == pytest.approx(fidelity(b, a), abs=1e-7)


@given(seeds, seeds)
def test_fidelity_with_pure_state_is_expectation(s1, s2):
    rho = random_density(np.random.default_rng(s1))
    g = np.random.default_rng(s2)
    psi = g.normal(size=3) + 1j * g.normal(size=3)
    psi /= np.linalg.norm(psi)
    expected = np.real(psi.conj() @ rho @ psi)
    assert fidelity(rho, projector(psi)) == pytest.approx(expected, abs=1e-7)


def test_fidelity_rejects_non_psd():
    with pytest.raises(InvalidStateError):
        fidelity(np.diag([1.2, -0.2, 0.0]), ground_state())


def test_measured_matrices():
    r1, r2 = ingest_measured(RHO1_MEASURED), ingest_measured(RHO2_MEASURED)
    assert fidelity(r1, ideal_superposition(TargetState.PSI1)) == pytest.approx(0.766, abs=0.02)
    assert fidelity(r2, ideal_superposition(TargetState.PSI2)) == pytest.approx(0.890, abs=0.02)
    for r in (r1, r2):
        assert np.trace(r).real == pytest.approx(1.0)
        assert np.min(np.linalg.eigvalsh(r)) > 0
