"""Spin-1 Hamiltonian, zero-field-splitting tensor and level structure.

Units: frequencies/energies in MHz, fields in Gauss, angles in radians.
Basis ordering is fixed to (|+>, |0>, |->) everywhere in the package.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray
from scipy import constants

# Bohr magneton over Planck constant, MHz per Gauss (~1.39962).
MUB_OVER_H = constants.physical_constants["Bohr magneton"][0] / constants.h * 1e-4 * 1e-6

_R2 = 1.0 / np.sqrt(2.0)
SX = _R2 * np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=complex)
SY = _R2 * np.array([[0, -1j, 0], [1j, 0, -1j], [0, 1j, 0]], dtype=complex)
SZ = np.diag([1.0, 0.0, -1.0]).astype(complex)
SPIN_OPS = (SX, SY, SZ)

LABEL_OVERLAP_THRESHOLD = 0.7


class ConventionError(ValueError):
    """ZFS parameters violate the |E| <= |D|/3 ordering."""


class RegimeError(RuntimeError):
    """Eigenstates cannot be labelled by M_S (not in the high-field regime)."""


@dataclass(frozen=True)
class ZfsParameters:
    d_value: float
    e_value: float

    def __post_init__(self):
        if abs(self.e_value) > abs(self.d_value) / 3.0 + 1e-12:
            raise ConventionError(
                f"|E| = {abs(self.e_value)} exceeds |D|/3 = {abs(self.d_value) / 3.0}"
            )


@dataclass(frozen=True)
class Orientation:
    """Direction of B0 in the molecular frame.

    ``theta`` is the tilt of the molecular z axis away from B0 and ``phi`` the
    azimuth of B0 around the molecular z axis.
    """

    theta: float
    phi: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.theta <= np.pi + 1e-12:
            raise ValueError(f"theta={self.theta} outside [0, pi]")
        object.__setattr__(self, "phi", float(np.mod(self.phi, 2 * np.pi)))

    @classmethod
    def from_degrees(cls, theta_deg: float, phi_deg: float = 0.0) -> "Orientation":
        return cls(np.radians(theta_deg), np.radians(phi_deg))

    def field_direction(self) -> NDArray:
        """Unit vector of B0 expressed in molecular coordinates."""
        st = np.sin(self.theta)
        return np.array([st * np.cos(self.phi), st * np.sin(self.phi), np.cos(self.theta)])


@dataclass(frozen=True, eq=False)
class LabTensor:
    matrix: NDArray = field(repr=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.shape != (3, 3):
            raise ValueError("ZFS tensor must be 3x3")
        if np.max(np.abs(m - m.T)) > 1e-12 * max(1.0, np.max(np.abs(m))):
            raise ValueError("ZFS tensor is not symmetric")
        if abs(np.trace(m)) > 1e-9:
            raise ValueError(f"ZFS tensor trace {np.trace(m)} is not zero")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def d_zz(self) -> float:
        return float(self.matrix[2, 2])

    def key(self) -> tuple:
        return tuple(np.round(self.matrix.ravel(), 12))


@dataclass(frozen=True)
class SpinSystem:
    """Static experiment context. The offsets ``delta_f_plus/minus`` are derived."""

    g_factor: float
    b0: float
    f0: float
    f_plus: float
    f_minus: float

    def __post_init__(self):
        if self.b0 < 0:
            raise ValueError("b0 must be non-negative")

    @property
    def delta_f_plus(self) -> float:
        return self.f0 - self.f_plus

    @property
    def delta_f_minus(self) -> float:
        return -(self.f0 - self.f_minus)

    @property
    def larmor(self) -> float:
        return self.g_factor * MUB_OVER_H * self.b0


def build_principal_tensor(zfs: ZfsParameters) -> LabTensor:
    d, e = zfs.d_value, zfs.e_value
    return LabTensor(np.diag([-d / 3.0 + e, -d / 3.0 - e, 2.0 * d / 3.0]))


def rotation_matrix(o: Orientation) -> NDArray:
    """Rotation taking molecular-frame components to lab-frame components.

    The third row is the field direction in molecular coordinates, so the lab
    zz element of a rotated tensor is n.T.n.
    """
    ct, st = np.cos(o.theta), np.sin(o.theta)
    cp, sp = np.cos(o.phi), np.sin(o.phi)
    rz = np.array([[cp, -sp, 0.0], [sp, cp, 0.0], [0.0, 0.0, 1.0]])
    ry = np.array([[ct, 0.0, st], [0.0, 1.0, 0.0], [-st, 0.0, ct]])
    return (rz @ ry).T


def rotate_to_lab(tensor: LabTensor, o: Orientation) -> LabTensor:
    r = rotation_matrix(o)
    m = r @ tensor.matrix @ r.T
    m = 0.5 * (m + m.T)
    m -= np.eye(3) * np.trace(m) / 3.0
    return LabTensor(m)


def zfs_operator(tensor: NDArray) -> NDArray:
    """S^T . D . S for a (..., 3, 3) stack of Cartesian tensors."""
    t = np.asarray(tensor)
    out = np.zeros(t.shape[:-2] + (3, 3), dtype=complex)
    for i in range(3):
        for j in range(3):
            out = out + t[..., i, j, None, None] * (SPIN_OPS[i] @ SPIN_OPS[j])
    return out


def hamiltonian(sys: SpinSystem, lab: LabTensor) -> NDArray:
    """Zeeman (isotropic g, B0 along lab z) plus ZFS, in MHz."""
    return sys.larmor * SZ + zfs_operator(lab.matrix)


def hamiltonian_at_field(b0: float, g: float, lab: LabTensor) -> NDArray:
    return g * MUB_OVER_H * b0 * SZ + zfs_operator(lab.matrix)


def labelled_levels(h: NDArray) -> NDArray:
    """Eigenvalues of ``h`` ordered as (E+, E0, E-) by dominant overlap."""
    w, v = np.linalg.eigh(h)
    overlaps = np.abs(v) ** 2  # rows: basis states, cols: eigenvectors
    labels = np.argmax(overlaps, axis=0)
    if np.any(overlaps[labels, range(3)] <= LABEL_OVERLAP_THRESHOLD) or len(set(labels)) != 3:
        raise RegimeError("eigenstates are not dominated by single M_S components")
    energies = np.empty(3)
    energies[labels] = w
    return energies


def transition_frequencies(h: NDArray) -> tuple[float, float]:
    """Return (E+ - E0, E0 - E-) in MHz."""
    e_plus, e_zero, e_minus = labelled_levels(h)
    return float(e_plus - e_zero), float(e_zero - e_minus)


def resonance_field(f0: float, g: float) -> float:
    if f0 < 0:
        raise ValueError("f0 must be positive")
    return f0 / (g * MUB_OVER_H)


def operating_point(g: float, b0: float, lab: LabTensor) -> SpinSystem:
    """System whose drive frequencies sit on the two exact transitions.

    The detection frequency is taken as their midpoint, which is the
    symmetric condition delta_f_plus == delta_f_minus.
    """
    h = hamiltonian_at_field(b0, g, lab)
    f_p, f_m = transition_frequencies(h)
    return SpinSystem(g_factor=g, b0=b0, f0=0.5 * (f_p + f_m), f_plus=f_p, f_minus=f_m)


def level_diagram(g: float, lab: LabTensor, fields: NDArray) -> NDArray:
    """Rows of (B0, E+, E0, E-) with levels followed by eigenvector continuity.

    Dominant-overlap labels are meaningless near zero field, so each level is
    tracked from high field downwards by maximal overlap with the previous
    eigenvectors.
    """
    fields = np.asarray(fields, dtype=float)
    order = np.argsort(fields)[::-1]
    rows = np.empty((len(fields), 4))
    prev = np.eye(3, dtype=complex)
    for idx in order:
        w, v = np.linalg.eigh(hamiltonian_at_field(fields[idx], g, lab))
        ov = np.abs(prev.conj().T @ v) ** 2
        perm = np.empty(3, dtype=int)
        taken: set[int] = set()
        for lab_idx in np.argsort(-ov.max(axis=1)):
            cand = [j for j in np.argsort(-ov[lab_idx]) if j not in taken]
            perm[lab_idx] = cand[0]
            taken.add(cand[0])
        prev = v[:, perm]
        rows[idx] = (fields[idx], *w[perm])
    return rows
