"""Superposition-state preparation, population readout and density-matrix tomography."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from numpy.typing import NDArray

from .pulse_engine import (
    InvalidStateError,
    PulseSpec,
    RelaxationParams,
    SequenceProgram,
    Transition,
    apply_relaxation,
    dephase,
    ground_state,
    projector,
    pulse_propagator,
    run_sequence,
)
from .spin_core import LabTensor, SpinSystem

READOUT_DELAY_US = 40.0
PSI2_TIP = float(np.arccos(1.0 / 3.0))

# Measured tomography results for the two prepared states, rounded to 0.01.
RHO1_MEASURED = np.array([
    [0.50, -0.05 + 0.02j, 0.29],
    [-0.05 - 0.02j, 0.04, -0.02 + 0.04j],
    [0.29, -0.02 - 0.04j, 0.45],
])
RHO2_MEASURED = np.array([
    [0.37, 0.27 + 0.03j, 0.28 + 0.04j],
    [0.27 - 0.03j, 0.31, 0.29 + 0.01j],
    [0.28 - 0.04j, 0.29 - 0.01j, 0.33],
])


class TargetState(enum.Enum):
    PSI1 = "psi1"
    PSI2 = "psi2"


class SettingsIncompleteError(RuntimeError):
    pass


def _pulse(transition, tip, finite_rabi):
    if finite_rabi is None:
        return PulseSpec(transition, tip)
    return PulseSpec.finite(transition, tip, rabi=finite_rabi)


def prepare_psi1(finite_rabi: Optional[float] = None,
                 relaxation: Optional[RelaxationParams] = None) -> SequenceProgram:
    """pi/2 on 0<->+ then pi on 0<->-: (|+> + |->)/sqrt(2) up to phases."""
    return SequenceProgram(
        (_pulse(Transition.PLUS, np.pi / 2, finite_rabi),
         _pulse(Transition.MINUS, np.pi, finite_rabi)),
        relaxation,
    )


def prepare_psi2(finite_rabi: Optional[float] = None,
                 relaxation: Optional[RelaxationParams] = None,
                 first_tip: float = PSI2_TIP) -> SequenceProgram:
    """arccos(1/3) on 0<->+ then pi/2 on 0<->-: equal-weight superposition."""
    return SequenceProgram(
        (_pulse(Transition.PLUS, first_tip, finite_rabi),
         _pulse(Transition.MINUS, np.pi / 2, finite_rabi)),
        relaxation,
    )


def preparation(state: TargetState, **kwargs) -> SequenceProgram:
    return prepare_psi1(**kwargs) if state is TargetState.PSI1 else prepare_psi2(**kwargs)


def ideal_target(state: TargetState) -> NDArray:
    """Projector reached by the noiseless ideal-pulse preparation from |0>."""
    rho = run_sequence(ground_state(), preparation(state))
    w, v = np.linalg.eigh(rho)
    return projector(v[:, -1])


def measure_population_difference(rho: NDArray, transition: Transition,
                                  relax: Optional[RelaxationParams] = None,
                                  delay: float = READOUT_DELAY_US) -> float:
    """Readout after a decoherence delay: (p_upper - p_lower)/2.

    For the 0<->+ transition this is M0+ = (p+ - p0)/2. Without relaxation
    parameters the delay only removes coherences.
    """
    rho = dephase(rho) if relax is None else apply_relaxation(rho, delay, relax)
    up, low = transition.upper_lower
    return 0.5 * float(np.real(rho[up, up] - rho[low, low]))


@dataclass(frozen=True)
class MeasurementSetting:
    """Analysis pulses applied before a population-difference readout."""

    pulses: tuple
    readout: Transition
    label: str = ""

    def describe(self) -> str:
        return self.label or "none"


def default_settings() -> list[MeasurementSetting]:
    P, M = Transition.PLUS, Transition.MINUS
    half = np.pi / 2
    out = [
        MeasurementSetting((), P, "pop/plus"),
        MeasurementSetting((), M, "pop/minus"),
    ]
    for tr in (P, M):
        for tip in (half, -half):
            for phase in (0.0, half):
                out.append(MeasurementSetting(
                    (PulseSpec(tr, tip, phase),), tr,
                    f"{tr.value}:{'+' if tip > 0 else '-'}pi/2@{np.degrees(phase):.0f}"))
    # pi on one transition moves rho_{+-} onto the other transition's coherence.
    for first, second in ((P, M), (M, P)):
        for phase in (0.0, half):
            out.append(MeasurementSetting(
                (PulseSpec(first, np.pi), PulseSpec(second, half, phase)), second,
                f"{first.value}:pi,{second.value}:pi/2@{np.degrees(phase):.0f}"))
    return out


def _hermitian_basis() -> list[NDArray]:
    """Eight traceless Hermitian matrices spanning the free parameters of rho."""
    basis = []
    for i in range(3):
        for j in range(i + 1, 3):
            m = np.zeros((3, 3), dtype=complex)
            m[i, j] = m[j, i] = 1.0
            basis.append(m)
            m = np.zeros((3, 3), dtype=complex)
            m[i, j], m[j, i] = 1j, -1j
            basis.append(m)
    basis.append(np.diag([1.0, -1.0, 0.0]).astype(complex))
    basis.append(np.diag([1.0, 1.0, -2.0]).astype(complex) / np.sqrt(3.0))
    return basis


def _params_to_rho(x: NDArray) -> NDArray:
    rho = np.eye(3, dtype=complex) / 3.0
    for xi, g in zip(x, _hermitian_basis()):
        rho = rho + 0.5 * xi * g
    return rho


def _signal(rho, setting, relax, sys=None, lab=None):
    for p in setting.pulses:
        u = pulse_propagator(p, sys, lab)
        rho = u @ rho @ u.conj().T
    return measure_population_difference(rho, setting.readout, relax)


def design_matrix(settings: Sequence[MeasurementSetting],
                  relax: Optional[RelaxationParams] = None) -> tuple[NDArray, NDArray]:
    """Linear readout model s = A x + b, assuming ideal analysis pulses."""
    centre = np.eye(3, dtype=complex) / 3.0
    offset = np.array([_signal(centre, s, relax) for s in settings])
    cols = [
        np.array([_signal(centre + 0.5 * g, s, relax) for s in settings]) - offset
        for g in _hermitian_basis()
    ]
    return np.array(cols).T, offset


def project_to_density(rho: NDArray) -> NDArray:
    """Nearest-by-eigenvalue-clipping density matrix: Hermitian, PSD, unit trace."""
    rho = 0.5 * (rho + rho.conj().T)
    w, v = np.linalg.eigh(rho)
    w = np.clip(w, 0.0, None)
    if w.sum() <= 0:
        return np.eye(3, dtype=complex) / 3.0
    w = w / w.sum()
    return (v * w) @ v.conj().T


@dataclass
class TomographyResult:
    rho: NDArray
    settings_used: list = field(default_factory=list)
    residual: float = 0.0
    raw: Optional[NDArray] = None


def reconstruct(signals: Sequence[float], settings: Sequence[MeasurementSetting],
                relax: Optional[RelaxationParams] = None) -> TomographyResult:
    a, b = design_matrix(settings, relax)
    if np.linalg.matrix_rank(a, tol=1e-9) < 8:
        raise SettingsIncompleteError("measurement settings do not determine all 8 parameters")
    y = np.asarray(signals, dtype=float) - b
    x, *_ = np.linalg.lstsq(a, y, rcond=None)
    raw = _params_to_rho(x)
    residual = float(np.linalg.norm(a @ x - y))
    return TomographyResult(project_to_density(raw), [s.describe() for s in settings], residual, raw)


def tomography_of_state(rho: NDArray, relax: Optional[RelaxationParams] = None,
                        settings: Optional[Sequence[MeasurementSetting]] = None) -> TomographyResult:
    """Round trip with ideal analysis pulses for an injected state."""
    settings = list(settings or default_settings())
    signals = [_signal(rho, s, relax) for s in settings]
    return reconstruct(signals, settings, relax)


def tomography(prep: SequenceProgram, sys: Optional[SpinSystem] = None,
               lab: Optional[LabTensor] = None, relax: Optional[RelaxationParams] = None,
               settings: Optional[Sequence[MeasurementSetting]] = None,
               rho0: Optional[NDArray] = None) -> TomographyResult:
    """Replay the preparation once per setting and fit the readouts.

    Analysis pulses take the pulse model of the preparation's first pulse
    (so FINITE preparations are analysed with FINITE pulses); reconstruction
    always assumes ideal analysis pulses and the known readout relaxation.
    """
    settings = list(settings or default_settings())
    rho0 = ground_state() if rho0 is None else rho0
    rabi = next((p.rabi_frequency for p in prep.steps
                 if isinstance(p, PulseSpec) and p.is_finite), None)
    signals = []
    for s in settings:
        rho = run_sequence(rho0, prep, sys, lab)
        if rabi is not None:
            pulses = tuple(PulseSpec.finite(p.transition, p.tip_angle, p.phase, rabi)
                           for p in s.pulses)
            s = MeasurementSetting(pulses, s.readout, s.label)
        signals.append(_signal(rho, s, relax, sys, lab))
    return reconstruct(signals, settings, relax)


EIGEN_FLOOR = 1e-12


def _sqrtm_psd(m: NDArray) -> NDArray:
    # Eigenvalues at rounding level would contribute ~1e-8 after the sqrt.
    w, v = np.linalg.eigh(0.5 * (m + m.conj().T))
    w = np.where(w < EIGEN_FLOOR, 0.0, w)
    return (v * np.sqrt(w)) @ v.conj().T


def fidelity(rho: NDArray, sigma: NDArray, psd_atol: float = 1e-9) -> float:
    """Uhlmann fidelity [Tr sqrt(sqrt(sigma) rho sqrt(sigma))]^2."""
    for m in (rho, sigma):
        if np.min(np.linalg.eigvalsh(0.5 * (m + m.conj().T))) < -psd_atol:
            raise InvalidStateError("fidelity needs positive semidefinite inputs")
    s = _sqrtm_psd(sigma)
    inner = _sqrtm_psd(s @ rho @ s)
    f = float(np.real(np.trace(inner)) ** 2)
    if f > 1.0 + 1e-9 or f < -1e-9:
        raise InvalidStateError(f"fidelity {f} outside [0, 1]")
    return min(max(f, 0.0), 1.0)


def ingest_measured(rho: NDArray) -> NDArray:
    """Symmetrise and trace-normalise a rounded measured density matrix."""
    rho = 0.5 * (np.asarray(rho, dtype=complex) + np.asarray(rho, dtype=complex).conj().T)
    return rho / np.trace(rho).real


def ideal_superposition(state: TargetState) -> NDArray:
    if state is TargetState.PSI1:
        return projector([1, 0, 1])
    return projector([1, 1, 1])
