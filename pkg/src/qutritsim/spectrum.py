"""Echo-detected field-sweep powder spectrum and orientation selection.

Populations are the pseudopure |0> state, so the 0<->+ line absorbs (+1) and
the 0<->- line emits (-1). Transition-probability weighting is omitted.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numpy.typing import NDArray

from .spin_core import (
    LABEL_OVERLAP_THRESHOLD,
    MUB_OVER_H,
    SZ,
    RegimeError,
    SpinSystem,
    ZfsParameters,
    build_principal_tensor,
    resonance_field,
    zfs_operator,
)

DEFAULT_ORIENTATIONS = 5000
DEFAULT_FWHM_G = 15.0
FWHM_TO_SIGMA = 1.0 / (2.0 * np.sqrt(2.0 * np.log(2.0)))


class EmptySpectrumWarning(UserWarning):
    pass


def fibonacci_sphere(n: int) -> tuple[NDArray, NDArray]:
    """Equal-area (theta, phi) grid of ``n`` field directions."""
    i = np.arange(n)
    z = 1.0 - (2.0 * i + 1.0) / n
    phi = np.mod(i * np.pi * (3.0 - np.sqrt(5.0)), 2.0 * np.pi)
    return np.arccos(z), phi


def lab_dzz(zfs: ZfsParameters, theta: NDArray, phi: NDArray) -> NDArray:
    d = np.diag(build_principal_tensor(zfs).matrix)
    st = np.sin(theta)
    n2 = np.stack([(st * np.cos(phi)) ** 2, (st * np.sin(phi)) ** 2, np.cos(theta) ** 2])
    return d @ n2


def lab_tensors(zfs: ZfsParameters, theta: NDArray, phi: NDArray) -> NDArray:
    """(n, 3, 3) lab tensors; the lab z axis is the field direction."""
    d = build_principal_tensor(zfs).matrix
    ct, st = np.cos(theta), np.sin(theta)
    cp, sp = np.cos(phi), np.sin(phi)
    # Rows of the rotation: lab x, y, z axes in molecular coordinates.
    r = np.empty((len(theta), 3, 3))
    r[:, 0] = np.stack([ct * cp, ct * sp, -st], axis=1)
    r[:, 1] = np.stack([-sp, cp, np.zeros_like(sp)], axis=1)
    r[:, 2] = np.stack([st * cp, st * sp, ct], axis=1)
    return r @ d @ np.transpose(r, (0, 2, 1))


def _labelled(h: NDArray) -> tuple[NDArray, NDArray]:
    """Batched energies and Sz expectations ordered (+, 0, -)."""
    w, v = np.linalg.eigh(h)
    ov = np.abs(v) ** 2
    labels = np.argmax(ov, axis=1)  # (n, eigvec) -> basis index
    best = np.take_along_axis(ov, labels[:, None, :], axis=1)[:, 0, :]
    if np.any(best <= LABEL_OVERLAP_THRESHOLD):
        raise RegimeError("orientation outside the high-field regime")
    order = np.argsort(labels, axis=1)
    energies = np.take_along_axis(w, order, axis=1)
    sz = np.real(np.einsum("nji,jk,nki->ni", v.conj(), SZ, v))
    return energies, np.take_along_axis(sz, order, axis=1)


def resonance_fields(g: float, f0: float, tensors: NDArray, tol: float = 1e-9,
                     max_iter: int = 50) -> NDArray:
    """Fields (G) where 0<->+ and 0<->- match f0; shape (n, 2).

    Newton iteration on f_transition(B) - f0 per orientation, derivatives from
    Hellmann-Feynman. The transition frequencies are monotone in B at high field.
    """
    gamma = g * MUB_OVER_H
    zfs_ops = zfs_operator(tensors)
    dzz = tensors[:, 2, 2]
    fields = np.stack([(f0 - 1.5 * dzz) / gamma, (f0 + 1.5 * dzz) / gamma], axis=1)
    for _ in range(max_iter):
        out = np.empty_like(fields)
        worst = 0.0
        for col in range(2):
            b = fields[:, col]
            e, sz = _labelled(zfs_ops + gamma * b[:, None, None] * SZ)
            if col == 0:
                f, df = e[:, 0] - e[:, 1], gamma * (sz[:, 0] - sz[:, 1])
            else:
                f, df = e[:, 1] - e[:, 2], gamma * (sz[:, 1] - sz[:, 2])
            out[:, col] = b - (f - f0) / df
            worst = max(worst, float(np.max(np.abs(f - f0))))
        fields = out
        if worst < tol:
            return fields
    raise RuntimeError("resonance field iteration did not converge")


@dataclass(frozen=True, eq=False)
class SpectrumResult:
    field_axis: NDArray
    intensity: NDArray
    broadening: float
    lines: Optional[NDArray] = None  # (n, 2) unbroadened resonance fields

    @property
    def centre(self) -> float:
        return float(np.mean(self.lines)) if self.lines is not None else float(np.mean(self.field_axis))


def default_field_range(sys: SpinSystem, zfs: ZfsParameters, broadening: float) -> tuple[float, float]:
    centre = resonance_field(sys.f0, sys.g_factor)
    reach = 1.5 * np.max(np.abs(np.diag(build_principal_tensor(zfs).matrix))) / (sys.g_factor * MUB_OVER_H)
    half = 1.1 * reach + 6.0 * broadening + 5.0
    return centre - half, centre + half


def _gaussian_lines(axis: NDArray, lines: NDArray, sigma: float, chunk: int = 2000) -> NDArray:
    """Sum of unit Gaussians, + for the 0<->+ column and - for the 0<->- column."""
    out = np.zeros_like(axis)
    for start in range(0, len(lines), chunk):
        block = lines[start:start + chunk]
        out += np.exp(-0.5 * ((axis[:, None] - block[:, 0]) / sigma) ** 2).sum(axis=1)
        out -= np.exp(-0.5 * ((axis[:, None] - block[:, 1]) / sigma) ** 2).sum(axis=1)
    return out


def powder_spectrum(sys: SpinSystem, zfs: ZfsParameters, field_range: Optional[tuple] = None,
                    n_orientations: int = DEFAULT_ORIENTATIONS, broadening: float = DEFAULT_FWHM_G,
                    n_points: int = 1024) -> SpectrumResult:
    if n_orientations < 100:
        raise ValueError("powder averaging needs at least 100 orientations")
    lo, hi = field_range or default_field_range(sys, zfs, broadening)
    theta, phi = fibonacci_sphere(n_orientations)
    lines = resonance_fields(sys.g_factor, sys.f0, lab_tensors(zfs, theta, phi))
    axis = np.linspace(lo, hi, n_points)
    if not np.any((lines >= lo) & (lines <= hi)):
        warnings.warn("field range contains no resonances", EmptySpectrumWarning, stacklevel=2)
    if broadening > 0:
        intensity = _gaussian_lines(axis, lines, broadening * FWHM_TO_SIGMA)
    else:
        step = axis[1] - axis[0]
        edges = np.append(axis - 0.5 * step, axis[-1] + 0.5 * step)
        intensity = (np.histogram(lines[:, 0], bins=edges)[0]
                     - np.histogram(lines[:, 1], bins=edges)[0]).astype(float)
    intensity /= n_orientations
    return SpectrumResult(axis, intensity, broadening, lines)


def antisymmetry_error(spec: SpectrumResult, centre: Optional[float] = None) -> float:
    """max |I(c+x) + I(c-x)| relative to the peak magnitude."""
    c = spec.centre if centre is None else centre
    half = min(c - spec.field_axis[0], spec.field_axis[-1] - c)
    x = np.linspace(0.0, half, 1000)
    right = np.interp(c + x, spec.field_axis, spec.intensity)
    left = np.interp(c - x, spec.field_axis, spec.intensity)
    return float(np.max(np.abs(right + left)) / np.max(np.abs(spec.intensity)))


@dataclass(frozen=True, eq=False)
class OrientationSelection:
    window: tuple
    theta: NDArray
    phi: NDArray
    dzz: NDArray

    def __len__(self) -> int:
        return len(self.theta)

    def histogram(self, bins: int = 60, absolute: bool = True) -> tuple[NDArray, NDArray]:
        values = np.abs(self.dzz) if absolute else self.dzz
        return np.histogram(values, bins=bins)

    def mode(self, bins: int = 60, absolute: bool = True) -> float:
        counts, edges = self.histogram(bins, absolute)
        k = int(np.argmax(counts))
        return float(0.5 * (edges[k] + edges[k + 1]))


def orientation_selection(sys: SpinSystem, zfs: ZfsParameters, window: tuple,
                          n_orientations: int = DEFAULT_ORIENTATIONS) -> OrientationSelection:
    """Orientations with a 0<->+ or 0<->- resonance at f0 inside the field window."""
    lo, hi = window
    if not hi > lo:
        raise ValueError("window must be a non-empty interval")
    theta, phi = fibonacci_sphere(n_orientations)
    lines = resonance_fields(sys.g_factor, sys.f0, lab_tensors(zfs, theta, phi))
    hit = np.any((lines >= lo) & (lines <= hi), axis=1)
    return OrientationSelection((lo, hi), theta[hit], phi[hit], lab_dzz(zfs, theta[hit], phi[hit]))


def addressed_orientations(sys: SpinSystem, zfs: ZfsParameters, bandwidth: float,
                           n_orientations: int = DEFAULT_ORIENTATIONS) -> OrientationSelection:
    """Orientations whose two transitions at ``sys.b0`` lie within ``bandwidth``
    (MHz) of the drive frequencies f_plus and f_minus."""
    theta, phi = fibonacci_sphere(n_orientations)
    tensors = lab_tensors(zfs, theta, phi)
    gamma = sys.g_factor * MUB_OVER_H
    e, _ = _labelled(zfs_operator(tensors) + gamma * sys.b0 * SZ)
    hit = (np.abs(e[:, 0] - e[:, 1] - sys.f_plus) <= bandwidth) & (
        np.abs(e[:, 1] - e[:, 2] - sys.f_minus) <= bandwidth)
    gauss = (sys.b0 - bandwidth / gamma, sys.b0 + bandwidth / gamma)
    return OrientationSelection(gauss, theta[hit], phi[hit], lab_dzz(zfs, theta[hit], phi[hit]))
