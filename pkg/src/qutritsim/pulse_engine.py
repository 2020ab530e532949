"""Transition-selective pulses, delays and phenomenological T1/T2 relaxation.

Density matrices are plain 3x3 complex arrays in the (|+>, |0>, |->) basis and
are kept in the interaction frame of the level energies: free evolution is the
identity there and delays only relax the state.

Pulse phase convention: each transition's 2x2 subspace is ordered
(|m>, |0>) with m = + or -. A pulse of phase phi rotates about
cos(p) X + sin(p) Y of that subspace with p = s*phi - pi/2, where s = +1 on
0<->+ and -1 on 0<->-. Two consequences:

* a zero-phase pulse is the real rotation |0> -> cos|0> + sin|m>, so the
  preparations land exactly on (|+> + |->)/sqrt2 and (|+> + |0> + |->)/sqrt3;
* on both transitions the generator is the restriction of
  cos(q) Sx + sin(q) Sy with the same-signed drive phase q = phi - s*pi/2,
  which makes the (|+> + |->) interference depend on phi_plus + phi_minus.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence, Union

import numpy as np
from numpy.typing import NDArray
from scipy.linalg import expm

from .spin_core import SX, SY, SZ, LabTensor, SpinSystem, labelled_levels, hamiltonian

TWO_PI = 2.0 * np.pi
MAX_STEPS = 10_000_000
MAX_STEP_PHASE = 0.05  # rad, bound on ||H|| dt
DEFAULT_RABI_MHZ = 20.0

# Triplet relaxation times, microseconds.
T1_US = 10_700.0
T2_US = 9.4


class ConfigurationError(ValueError):
    pass


class InvalidStateError(ValueError):
    pass


class Transition(enum.Enum):
    PLUS = "plus"
    MINUS = "minus"

    @property
    def levels(self) -> tuple[int, int]:
        """(index of |m>, index of |0>)."""
        return (0, 1) if self is Transition.PLUS else (2, 1)

    @property
    def phase_sign(self) -> int:
        return 1 if self is Transition.PLUS else -1

    @property
    def upper_lower(self) -> tuple[int, int]:
        """Basis indices of the upper and lower level of the pair (high field)."""
        return (0, 1) if self is Transition.PLUS else (1, 2)


@dataclass(frozen=True)
class PulseSpec:
    """A rotation on one allowed transition.

    With ``rabi_frequency`` and ``duration`` unset the pulse is IDEAL
    (instantaneous). For a FINITE pulse both are given and must satisfy
    |tip| = 2*pi*rabi*duration.
    """

    transition: Transition
    tip_angle: float
    phase: float = 0.0
    rabi_frequency: Optional[float] = None
    duration: Optional[float] = None

    def __post_init__(self):
        if (self.rabi_frequency is None) != (self.duration is None):
            raise ConfigurationError("finite pulses need both rabi_frequency and duration")
        if self.is_finite:
            if self.duration <= 0 or not math.isfinite(self.duration):
                raise ConfigurationError("pulse duration must be positive and finite")
            implied = TWO_PI * self.rabi_frequency * self.duration
            if abs(implied - abs(self.tip_angle)) > 1e-6:
                raise ConfigurationError(
                    f"tip angle {self.tip_angle} inconsistent with rabi*duration ({implied})"
                )

    @property
    def is_finite(self) -> bool:
        return self.rabi_frequency is not None

    @classmethod
    def finite(cls, transition, tip_angle, phase=0.0, rabi=DEFAULT_RABI_MHZ) -> "PulseSpec":
        return cls(transition, tip_angle, phase, rabi, abs(tip_angle) / (TWO_PI * rabi))

    def as_ideal(self) -> "PulseSpec":
        return PulseSpec(self.transition, self.tip_angle, self.phase)

    def with_phase(self, phase: float) -> "PulseSpec":
        return PulseSpec(self.transition, self.tip_angle, phase, self.rabi_frequency, self.duration)

    def reversed(self) -> "PulseSpec":
        """Opposite tip angle, zero phase."""
        return PulseSpec(self.transition, -self.tip_angle, 0.0, self.rabi_frequency, self.duration)


@dataclass(frozen=True)
class Delay:
    duration: float

    def __post_init__(self):
        if self.duration < 0 or not math.isfinite(self.duration):
            raise ConfigurationError("delay duration must be finite and >= 0")


@dataclass(frozen=True)
class RelaxationParams:
    t1: float = T1_US
    t2: float = T2_US

    def __post_init__(self):
        if self.t1 <= 0 or self.t2 <= 0:
            raise ConfigurationError("T1 and T2 must be positive")
        if self.t2 > 2 * self.t1:
            raise ConfigurationError("T2 cannot exceed 2*T1")


Step = Union[PulseSpec, Delay]


@dataclass(frozen=True)
class SequenceProgram:
    steps: tuple = ()
    relaxation: Optional[RelaxationParams] = None

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))
        if not self.steps:
            raise ConfigurationError("a sequence needs at least one step")
        for s in self.steps:
            if not isinstance(s, (PulseSpec, Delay)):
                raise ConfigurationError(f"unknown step {s!r}")

    def then(self, *steps: Step) -> "SequenceProgram":
        return SequenceProgram(self.steps + tuple(steps), self.relaxation)

    def with_relaxation(self, relaxation: Optional[RelaxationParams]) -> "SequenceProgram":
        return SequenceProgram(self.steps, relaxation)


# --- states ---------------------------------------------------------------

def projector(ket: Sequence[complex]) -> NDArray:
    v = np.asarray(ket, dtype=complex)
    v = v / np.linalg.norm(v)
    return np.outer(v, v.conj())


def ground_state() -> NDArray:
    """Pseudopure |0><0| left by photoexcitation."""
    return projector([0, 1, 0])


def maximally_mixed() -> NDArray:
    return np.eye(3, dtype=complex) / 3.0


def validate_density(rho: NDArray, atol: float = 1e-10, psd_atol: Optional[float] = None) -> NDArray:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (3, 3):
        raise InvalidStateError("density matrix must be 3x3")
    if np.max(np.abs(rho - rho.conj().T)) > atol:
        raise InvalidStateError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1.0) > atol:
        raise InvalidStateError(f"trace {np.trace(rho).real:.6g} != 1")
    if np.min(np.linalg.eigvalsh(rho)) < -(atol if psd_atol is None else psd_atol):
        raise InvalidStateError("density matrix has negative eigenvalues")
    return rho


def purity(rho: NDArray) -> float:
    return float(np.real(np.trace(rho @ rho)))


# --- propagators ------------------------------------------------------------

def _generators(transition: Transition) -> tuple[NDArray, NDArray]:
    m, z = transition.levels
    x = np.zeros((3, 3), dtype=complex)
    y = np.zeros((3, 3), dtype=complex)
    x[m, z] = x[z, m] = 1.0
    y[m, z], y[z, m] = -1j, 1j
    return x, y


def subspace_phase(transition: Transition, phase: float) -> float:
    return transition.phase_sign * phase - np.pi / 2


def drive_phase(transition: Transition, phase: float) -> float:
    """Phase q of the physical drive cos(q) Sx + sin(q) Sy for a pulse phase."""
    return phase - transition.phase_sign * np.pi / 2


def ideal_rotation(transition: Transition, tip_angle: float, phase: float) -> NDArray:
    x, y = _generators(transition)
    p = subspace_phase(transition, phase)
    return expm(-0.5j * tip_angle * (np.cos(p) * x + np.sin(p) * y))


def rotating_frame_levels(sys: SpinSystem, lab: LabTensor) -> NDArray:
    """Level energies (MHz) in the frame rotating at f0, secular approximation."""
    e_plus, e_zero, e_minus = labelled_levels(hamiltonian(sys, lab))
    return np.array([e_plus - sys.f0, e_zero, e_minus + sys.f0]) - e_zero


def _drive_frequency(sys: SpinSystem, transition: Transition) -> float:
    return sys.f_plus if transition is Transition.PLUS else sys.f_minus


@lru_cache(maxsize=256)
def _integrate(levels: tuple, offset: float, rabi: float, duration: float, phase: float) -> NDArray:
    """f0-frame propagator of H0 + drive, midpoint fixed-step exponentials."""
    h0 = TWO_PI * np.diag(levels).astype(complex)
    amp = np.sqrt(2.0) * np.pi * rabi
    bound = np.max(np.abs(levels)) * TWO_PI + amp
    n = max(1, math.ceil(duration * bound / MAX_STEP_PHASE))
    if n > MAX_STEPS:
        raise ConfigurationError(f"finite pulse needs {n} steps (> {MAX_STEPS})")
    dt = duration / n
    u = np.eye(3, dtype=complex)
    w = TWO_PI * offset
    for k in range(n):
        t = (k + 0.5) * dt
        arg = w * t + phase
        h = h0 + amp * (np.cos(arg) * SX + np.sin(arg) * SY)
        u = expm(-1j * h * dt) @ u
    u.setflags(write=False)
    return u


def finite_pulse_propagator(sys: SpinSystem, lab: LabTensor, p: PulseSpec) -> NDArray:
    """Propagator over a finite pulse in the frame rotating at f0.

    The drive sits at the system's drive frequency for the addressed
    transition, so it oscillates at (f_drive - f0) in this frame. A negative
    tip angle is realised as a phase shift of pi.
    """
    if not p.is_finite:
        raise ConfigurationError("finite_pulse_propagator needs a FINITE pulse")
    levels = tuple(float(x) for x in rotating_frame_levels(sys, lab))
    offset = _drive_frequency(sys, p.transition) - sys.f0
    phase = drive_phase(p.transition, p.phase) + (np.pi if p.tip_angle < 0 else 0.0)
    # The drive phase is a z-rotation of the whole Hamiltonian: integrate once
    # at zero phase and conjugate.
    base = _integrate(levels, offset, float(p.rabi_frequency), float(p.duration), 0.0)
    rz = np.diag(np.exp(-1j * phase * np.diag(SZ).real))
    return rz @ base @ rz.conj()


def to_interaction_frame(u: NDArray, sys: SpinSystem, lab: LabTensor, duration: float) -> NDArray:
    """Remove free evolution under the level energies accumulated over ``duration``."""
    levels = rotating_frame_levels(sys, lab)
    return np.diag(np.exp(1j * TWO_PI * levels * duration)) @ u


def pulse_propagator(p: PulseSpec, sys: Optional[SpinSystem] = None,
                     lab: Optional[LabTensor] = None) -> NDArray:
    """Interaction-frame propagator for either pulse model."""
    if not p.is_finite:
        return ideal_rotation(p.transition, p.tip_angle, p.phase)
    if sys is None or lab is None:
        raise ConfigurationError("finite pulses need a spin system and ZFS tensor")
    return to_interaction_frame(finite_pulse_propagator(sys, lab, p), sys, lab, p.duration)


# --- relaxation -------------------------------------------------------------

def apply_relaxation(rho: NDArray, t: float, r: RelaxationParams) -> NDArray:
    """Coherences decay with T2; populations level towards 1/3 with T1."""
    if t < 0:
        raise ValueError("relaxation time must be >= 0")
    a = np.exp(-t / r.t2)
    b = np.exp(-t / r.t1)
    pops = np.real(np.diag(rho))
    out = np.asarray(rho, dtype=complex) * a
    np.fill_diagonal(out, 1.0 / 3.0 + (pops - 1.0 / 3.0) * b)
    return out


def dephase(rho: NDArray) -> NDArray:
    """Infinite-T2 limit with populations untouched."""
    return np.diag(np.diag(rho)).astype(complex)


# --- sequences ----------------------------------------------------------------

def _finite_pulse_with_relaxation(rho, p, sys, lab, r):
    levels = tuple(float(x) for x in rotating_frame_levels(sys, lab))
    offset = _drive_frequency(sys, p.transition) - sys.f0
    phase = drive_phase(p.transition, p.phase) + (np.pi if p.tip_angle < 0 else 0.0)
    h0 = TWO_PI * np.diag(levels)
    amp = np.sqrt(2.0) * np.pi * p.rabi_frequency
    n = max(1, math.ceil(p.duration * (np.max(np.abs(levels)) * TWO_PI + amp) / MAX_STEP_PHASE))
    dt = p.duration / n
    for k in range(n):
        arg = TWO_PI * offset * (k + 0.5) * dt + phase
        u = expm(-1j * (h0 + amp * (np.cos(arg) * SX + np.sin(arg) * SY)) * dt)
        rho = apply_relaxation(u @ rho @ u.conj().T, dt, r)
    back = np.diag(np.exp(1j * TWO_PI * np.array(levels) * p.duration))
    return back @ rho @ back.conj().T


def run_sequence(rho0: NDArray, prog: SequenceProgram, sys: Optional[SpinSystem] = None,
                 lab: Optional[LabTensor] = None, relax_during_pulses: bool = False) -> NDArray:
    """Apply the program's steps left to right.

    Delays relax the state when the program carries relaxation parameters and
    are otherwise the identity. Relaxation during FINITE pulses is off unless
    ``relax_during_pulses`` is set.
    """
    rho = np.array(rho0, dtype=complex)
    for step in prog.steps:
        if isinstance(step, Delay):
            if prog.relaxation is not None:
                rho = apply_relaxation(rho, step.duration, prog.relaxation)
        elif step.is_finite and relax_during_pulses and prog.relaxation is not None:
            rho = _finite_pulse_with_relaxation(rho, step, sys, lab, prog.relaxation)
        else:
            u = pulse_propagator(step, sys, lab)
            rho = u @ rho @ u.conj().T
    return rho
