"""Synthetic relaxation traces and least-squares exponential fits for T1 and T2."""

from __future__ import annotations

from typing import Optional

import numpy as np
from numpy.typing import NDArray
from scipy.optimize import curve_fit

from .prep_tomo import measure_population_difference
from .pulse_engine import (
    Delay,
    PulseSpec,
    RelaxationParams,
    SequenceProgram,
    Transition,
    ground_state,
    run_sequence,
)


def echo_decay_trace(taus: NDArray, relax: RelaxationParams, noise: float = 0.0,
                     seed: int = 0) -> NDArray:
    """Echo amplitude 2|rho_{+0}| after pi/2 - tau - pi - tau on the 0<->+ transition."""
    out = []
    for tau in taus:
        prog = SequenceProgram((PulseSpec(Transition.PLUS, np.pi / 2), Delay(tau),
                                PulseSpec(Transition.PLUS, np.pi), Delay(tau)), relax)
        rho = run_sequence(ground_state(), prog)
        out.append(2.0 * abs(rho[0, 1]))
    return _add_noise(np.array(out), noise, seed)


def inversion_recovery_trace(times: NDArray, relax: RelaxationParams, noise: float = 0.0,
                             seed: int = 0) -> NDArray:
    """M0+ readout after a pi pulse on 0<->+ and a recovery delay."""
    out = []
    for t in times:
        prog = SequenceProgram((PulseSpec(Transition.PLUS, np.pi), Delay(t)), relax)
        rho = run_sequence(ground_state(), prog)
        out.append(measure_population_difference(rho, Transition.PLUS, relax))
    return _add_noise(np.array(out), noise, seed)


def _add_noise(y: NDArray, noise: float, seed: int) -> NDArray:
    if not noise:
        return y
    rng = np.random.default_rng(seed)
    return y + rng.normal(0.0, noise * np.max(np.abs(y)), y.shape)


def fit_echo_decay(taus: NDArray, amplitude: NDArray) -> tuple[float, float]:
    """Fit a*exp(-2 tau / T2). Returns (T2, a)."""
    taus = np.asarray(taus, dtype=float)
    amplitude = np.asarray(amplitude, dtype=float)
    guess_t2 = _decay_guess(2.0 * taus, amplitude)
    popt, _ = curve_fit(lambda t, a, t2: a * np.exp(-2.0 * t / t2), taus, amplitude,
                        p0=(amplitude[0], guess_t2))
    return float(popt[1]), float(popt[0])


def fit_recovery(times: NDArray, signal: NDArray, offset: Optional[float] = None
                 ) -> tuple[float, float, float]:
    """Fit c + a*exp(-t / T1). Returns (T1, a, c)."""
    times = np.asarray(times, dtype=float)
    signal = np.asarray(signal, dtype=float)
    c0 = signal[-1] if offset is None else offset
    guess = _decay_guess(times, signal - c0)
    popt, _ = curve_fit(lambda t, a, t1, c: c + a * np.exp(-t / t1), times, signal,
                        p0=(signal[0] - c0, guess, c0))
    return float(popt[1]), float(popt[0]), float(popt[2])


def _decay_guess(t: NDArray, y: NDArray) -> float:
    """Time at which |y| first drops below 1/e of its start."""
    y = np.abs(y)
    below = np.nonzero(y < y[0] / np.e)[0]
    return float(t[below[0]]) if len(below) else float(t[-1])
