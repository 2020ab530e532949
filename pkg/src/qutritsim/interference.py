"""Quantum-phase interference patterns, their 2D Fourier peaks, TPPI time maps
and evolution paths on the phase torus.

Phase/time convention: phi = 2*pi * delta_f * t with delta_f in MHz and t in
microseconds. Free evolution for a time t advances the |+> and |-> phases
(relative to |0>) by 2*pi*delta_f_plus*t and 2*pi*delta_f_minus*t. In the
pulse-phase coordinates of the pattern this is the point
(phi_plus, phi_minus) = (2*pi*delta_f_plus*t, -2*pi*delta_f_minus*t), i.e.
t0+ = +phi_plus/delta_f_plus and t0- = -phi_minus/delta_f_minus.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np
from numpy.typing import NDArray

from .prep_tomo import TargetState, measure_population_difference, preparation
from .pulse_engine import (
    TWO_PI,
    PulseSpec,
    RelaxationParams,
    SequenceProgram,
    Transition,
    ground_state,
    run_sequence,
)
from .spin_core import LabTensor, SpinSystem

DEFAULT_GRID = 64
DEFAULT_DZZ_MHZ = -60.0
RATIONAL_MAX_DENOMINATOR = 1_000_000
RATIONAL_TOLERANCE = 1e-14  # relative


class RemapError(ValueError):
    """Time coordinates are undefined for a zero offset frequency."""


class DegenerateEngineeringError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class PhasePattern:
    """M0+ sampled on a uniform (phi_plus, phi_minus) grid; rows index phi_plus."""

    grid: NDArray
    phases: NDArray

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        n = grid.shape[0]
        if grid.shape != (n, n) or n < 8 or n & (n - 1):
            raise ValueError(f"pattern must be N x N with N >= 8 a power of two, got {grid.shape}")
        if np.any(np.abs(grid) > 1.0 + 1e-12):
            raise ValueError("pattern entries must lie in [-1, 1]")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "phases", np.asarray(self.phases, dtype=float))

    @property
    def n(self) -> int:
        return self.grid.shape[0]


def phase_axis(n: int) -> NDArray:
    return TWO_PI * np.arange(n) / n


def normalized(grid: NDArray) -> NDArray:
    """Mean removed and scaled to unit maximum magnitude."""
    g = np.asarray(grid, dtype=float) - np.mean(grid)
    peak = np.max(np.abs(g))
    return g / peak if peak > 0 else g


# --- patterns ----------------------------------------------------------------

def ideal_magnetization(state: TargetState, phi_plus, phi_minus):
    if state is TargetState.PSI1:
        return -0.5 * np.cos(phi_plus + phi_minus)
    return (-4.0 / 9.0 * np.cos(phi_plus) - 1.0 / 9.0 * np.cos(phi_minus)
            - 4.0 / 9.0 * np.cos(phi_plus + phi_minus))


def analytic_pattern(state: TargetState, n: int = DEFAULT_GRID) -> PhasePattern:
    ax = phase_axis(n)
    pp, pm = np.meshgrid(ax, ax, indexing="ij")
    return PhasePattern(ideal_magnetization(state, pp, pm), ax)


def interference_program(prep: SequenceProgram, phi_plus: float, phi_minus: float) -> SequenceProgram:
    """Phase-shifted preparation followed by the reversion pulses.

    Reversion pulses carry opposite tip angles and zero phase and run in
    reverse order.
    """
    shifted = []
    for p in prep.steps:
        if isinstance(p, PulseSpec):
            p = p.with_phase(phi_plus if p.transition is Transition.PLUS else phi_minus)
        shifted.append(p)
    reversion = [p.reversed() for p in reversed(prep.steps) if isinstance(p, PulseSpec)]
    return SequenceProgram(shifted + reversion, prep.relaxation)


def interference_pattern(state: TargetState, n: int = DEFAULT_GRID,
                         noise: Optional[float] = None, relax: Optional[RelaxationParams] = None,
                         finite_rabi: Optional[float] = None, sys: Optional[SpinSystem] = None,
                         lab: Optional[LabTensor] = None, seed: int = 0,
                         relax_during_pulses: bool = False) -> PhasePattern:
    """Simulated M0+ over the phase grid.

    ``noise`` is the standard deviation of additive Gaussian readout noise
    drawn from a generator seeded with ``seed``.
    """
    prep = preparation(state, finite_rabi=finite_rabi, relaxation=relax)
    ax = phase_axis(n)
    rho0 = ground_state()
    grid = np.empty((n, n))
    for i, pp in enumerate(ax):
        for j, pm in enumerate(ax):
            rho = run_sequence(rho0, interference_program(prep, pp, pm), sys, lab,
                               relax_during_pulses=relax_during_pulses)
            grid[i, j] = measure_population_difference(rho, Transition.PLUS, relax)
    if noise:
        rng = np.random.default_rng(seed)
        grid = np.clip(grid + rng.normal(0.0, noise, grid.shape), -1.0, 1.0)
    return PhasePattern(grid, ax)


# --- Fourier analysis ------------------------------------------------------------

@dataclass(frozen=True)
class FourierPeaks:
    entries: dict  # (k_plus, k_minus) -> normalized magnitude

    def magnitude(self, k_plus: int, k_minus: int) -> float:
        return self.entries.get((k_plus, k_minus), 0.0)

    def as_records(self) -> list[dict]:
        return [{"k_plus": int(kp), "k_minus": int(km), "magnitude": float(m)}
                for (kp, km), m in sorted(self.entries.items())]


def fourier_spectrum(p: PhasePattern) -> tuple[NDArray, NDArray]:
    """Normalized |2D DFT| and the signed integer frequency of each bin."""
    mag = np.abs(np.fft.fft2(p.grid)) / p.n ** 2
    top = mag.max()
    if top > 0:
        mag = mag / top
    return mag, np.rint(np.fft.fftfreq(p.n, d=1.0 / p.n)).astype(int)


def fourier_peaks(p: PhasePattern, threshold: float = 1e-3) -> FourierPeaks:
    mag, k = fourier_spectrum(p)
    idx = np.argwhere(mag >= threshold)
    return FourierPeaks({(int(k[i]), int(k[j])): float(mag[i, j]) for i, j in idx})


# --- TPPI and evolution -------------------------------------------------------------

@dataclass(frozen=True)
class EvolutionSchedule:
    delta_f_plus: float
    delta_f_minus: float

    @property
    def ratio(self) -> float:
        return self.delta_f_plus / self.delta_f_minus

    @property
    def theta_mix(self) -> float:
        return math.atan(self.ratio)

    @property
    def total(self) -> float:
        """delta_f_plus + delta_f_minus, equal to -3*D_zz for a bound system."""
        return self.delta_f_plus + self.delta_f_minus

    @classmethod
    def from_ratio(cls, ratio: float, d_zz: float = DEFAULT_DZZ_MHZ) -> "EvolutionSchedule":
        """Offsets with the given ratio that still address the same molecules."""
        if ratio == -1:
            raise ValueError("ratio -1 cannot satisfy the -3*D_zz constraint")
        minus = -3.0 * d_zz / (1.0 + ratio)
        return cls(ratio * minus, minus)

    @classmethod
    def from_system(cls, sys: SpinSystem) -> "EvolutionSchedule":
        return cls(sys.delta_f_plus, sys.delta_f_minus)


@dataclass(frozen=True, eq=False)
class TimeGrid:
    """Pattern values on (t0+, t0-) axes in microseconds; rows index t0+."""

    t_plus: NDArray
    t_minus: NDArray
    values: NDArray


def tppi_remap(p: PhasePattern, s: EvolutionSchedule) -> TimeGrid:
    """Relabel the pattern axes as fictitious evolution times.

    Phases are periodic, so the phi_minus axis is read through its
    representatives -2*pi*j/N; the columns are reordered accordingly and the
    values are otherwise untouched.
    """
    if s.delta_f_plus == 0 or s.delta_f_minus == 0:
        raise RemapError("offset frequencies must be non-zero to map phases onto times")
    n = p.n
    t_plus = p.phases / (TWO_PI * s.delta_f_plus)
    phi_minus = -p.phases
    t_minus = -phi_minus / (TWO_PI * s.delta_f_minus)
    cols = (-np.arange(n)) % n
    return TimeGrid(t_plus, t_minus, p.grid[:, cols])


def sample_periodic(p: PhasePattern, phi_plus, phi_minus) -> NDArray:
    """Bilinear interpolation with periodic wrap in both phases."""
    n = p.n
    u = np.mod(np.asarray(phi_plus, dtype=float), TWO_PI) * n / TWO_PI
    v = np.mod(np.asarray(phi_minus, dtype=float), TWO_PI) * n / TWO_PI
    i0 = np.floor(u).astype(int) % n
    j0 = np.floor(v).astype(int) % n
    fu, fv = u - np.floor(u), v - np.floor(v)
    i1, j1 = (i0 + 1) % n, (j0 + 1) % n
    g = p.grid
    return ((1 - fu) * (1 - fv) * g[i0, j0] + fu * (1 - fv) * g[i1, j0]
            + (1 - fu) * fv * g[i0, j1] + fu * fv * g[i1, j1])


def evolution_phases(s: EvolutionSchedule, t) -> tuple[NDArray, NDArray]:
    """Pattern coordinates visited by free evolution after time ``t``."""
    t = np.asarray(t, dtype=float)
    return TWO_PI * s.delta_f_plus * t, -TWO_PI * s.delta_f_minus * t


def evolution_trace(p: PhasePattern, s: EvolutionSchedule, t_max: float,
                    n_samples: int) -> tuple[NDArray, NDArray]:
    if n_samples < 2:
        raise ValueError("need at least two samples")
    t = np.linspace(0.0, t_max, n_samples)
    return t, sample_periodic(p, *evolution_phases(s, t))


# --- torus -------------------------------------------------------------------------

@dataclass(frozen=True)
class Rationalization:
    terms: tuple
    fraction: Optional[Fraction]  # None when the expansion outgrows the cap

    @property
    def is_rational(self) -> bool:
        return self.fraction is not None


def continued_fraction(x: float, max_denominator: int = RATIONAL_MAX_DENOMINATOR,
                       tol: float = RATIONAL_TOLERANCE) -> Rationalization:
    """Continued-fraction expansion of the exact binary value of ``x``.

    Expansion stops at the first convergent h/k with |x - h/k| <= tol*|x|;
    the value counts as rational only if that happens before k exceeds
    ``max_denominator``. Integer arithmetic keeps the terms exact, so any p/q
    with q <= max_denominator is found even though x itself is rounded.
    """
    exact = abs(Fraction(float(x)))
    sign = -1 if x < 0 else 1
    num, den = exact.numerator, exact.denominator
    h_prev, h = 0, 1
    k_prev, k = 1, 0
    terms = []
    while den:
        a, rem = divmod(num, den)
        h_prev, h = h, a * h + h_prev
        k_prev, k = k, a * k + k_prev
        if k > max_denominator:
            return Rationalization(tuple(terms), None)
        terms.append(a)
        if abs(exact - Fraction(h, k)) <= tol * exact:
            break
        num, den = den, rem
    return Rationalization(tuple(terms), Fraction(sign * h, k))


@dataclass(frozen=True)
class ClosureReport:
    ratio: float
    commensurate: bool
    winding: Optional[tuple] = None  # (p, q) with ratio == p/q
    closure_time: Optional[float] = None  # microseconds
    min_return_distance: Optional[float] = None  # radians, incommensurate case
    windings_checked: int = 0


def return_distances(s: EvolutionSchedule, windings: int) -> NDArray:
    """Distance of phi2 from 0 each time phi1 completes a winding."""
    k = np.arange(1, windings + 1)
    frac = np.mod(k * s.delta_f_minus / s.delta_f_plus, 1.0)
    return TWO_PI * np.minimum(frac, 1.0 - frac)


def torus_path(s: EvolutionSchedule, t_max: float, n_samples: int = 2000
               ) -> tuple[NDArray, NDArray, NDArray, ClosureReport]:
    """Winding line (phi1, phi2) mod 2*pi and whether it closes."""
    if t_max <= 0:
        raise ValueError("t_max must be positive")
    t = np.linspace(0.0, t_max, n_samples)
    phi1 = np.mod(TWO_PI * s.delta_f_plus * t, TWO_PI)
    phi2 = np.mod(TWO_PI * s.delta_f_minus * t, TWO_PI)
    rat = continued_fraction(s.ratio)
    if rat.is_rational:
        p, q = rat.fraction.numerator, rat.fraction.denominator
        report = ClosureReport(s.ratio, True, (p, q), abs(q / s.delta_f_minus))
    else:
        windings = int(math.floor(t_max * abs(s.delta_f_plus)))
        dmin = float(return_distances(s, windings).min()) if windings else math.pi
        report = ClosureReport(s.ratio, False, min_return_distance=dmin, windings_checked=windings)
    return t, phi1, phi2, report


def phase_engineering(phi1: float, phi2: float, d_zz: float) -> tuple[float, float, float]:
    """Offsets (MHz) and waiting time (us) that imprint phases phi1, phi2 on |+>, |->.

    Delta f_(+,-) = -3 D_zz phi_(1,2) / (phi1 + phi2), t = -(phi1 + phi2) / (2 pi 3 D_zz).
    """
    total = phi1 + phi2
    if total == 0:
        raise DegenerateEngineeringError("phi1 + phi2 = 0 leaves the offsets undefined")
    if d_zz == 0:
        raise DegenerateEngineeringError("D_zz = 0 leaves the offsets undefined")
    df_plus = -3.0 * d_zz * phi1 / total
    df_minus = -3.0 * d_zz - df_plus
    t = -total / (TWO_PI * 3.0 * d_zz)
    return df_plus, df_minus, t
