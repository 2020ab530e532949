"""Experiment configuration: a validated JSON document driving the CLI."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .interference import EvolutionSchedule
from .prep_tomo import TargetState
from .pulse_engine import RelaxationParams
from .spin_core import (
    LabTensor,
    Orientation,
    SpinSystem,
    ZfsParameters,
    build_principal_tensor,
    hamiltonian_at_field,
    rotate_to_lab,
    transition_frequencies,
)


class _Block(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class SystemBlock(_Block):
    g: float = Field(2.0037, gt=0)
    B0_gauss: float = Field(3299.0, ge=0)
    f0_MHz: Optional[float] = Field(None, gt=0)  # None: midpoint of the two transitions
    D_MHz: float = -152.0
    E_MHz: float = -50.4
    theta_deg: float = 40.0
    phi_deg: float = 0.0

    @model_validator(mode="after")
    def _rhombicity(self):
        ZfsParameters(self.D_MHz, self.E_MHz)
        return self


class RelaxationBlock(_Block):
    t1_us: float = Field(10700.0, gt=0)
    t2_us: float = Field(9.4, gt=0)


class PulsesBlock(_Block):
    model: Literal["ideal", "finite"] = "ideal"
    rabi_MHz: float = Field(20.0, gt=0)


class PatternBlock(_Block):
    grid_n: int = 64
    state: Literal["psi1", "psi2"] = "psi2"
    noise: float = Field(0.0, ge=0)
    relaxation: bool = False

    @field_validator("grid_n")
    @classmethod
    def _power_of_two(cls, n):
        if n < 8 or n & (n - 1):
            raise ValueError("grid_n must be a power of two >= 8")
        return n


class ScheduleBlock(_Block):
    ratio: Optional[float] = None
    delta_f_plus_MHz: Optional[float] = None
    delta_f_minus_MHz: Optional[float] = None
    t_max_us: float = Field(0.1, gt=0)
    n_samples: int = Field(2000, ge=2)

    @model_validator(mode="after")
    def _one_form(self):
        explicit = (self.delta_f_plus_MHz, self.delta_f_minus_MHz)
        if self.ratio is not None and any(v is not None for v in explicit):
            raise ValueError("give either ratio or explicit offsets, not both")
        if (explicit[0] is None) != (explicit[1] is None):
            raise ValueError("explicit offsets need both delta_f_plus_MHz and delta_f_minus_MHz")
        return self


class SpectrumBlock(_Block):
    n_orientations: int = Field(5000, ge=100)
    broadening_G: float = Field(15.0, ge=0)
    n_points: int = Field(1024, ge=16)
    window_gauss: tuple[float, float] = (3235.0, 3363.0)


class LevelsBlock(_Block):
    b_max_gauss: Optional[float] = Field(None, gt=0)  # None: 1.25 * B0
    n_points: int = Field(401, ge=2)


class OutputBlock(_Block):
    directory: str = "out"
    format: Literal["csv", "json"] = "csv"


class ExperimentConfig(_Block):
    system: SystemBlock = SystemBlock()
    relaxation: Optional[RelaxationBlock] = RelaxationBlock()
    pulses: PulsesBlock = PulsesBlock()
    pattern: PatternBlock = PatternBlock()
    schedule: ScheduleBlock = ScheduleBlock()
    spectrum: SpectrumBlock = SpectrumBlock()
    levels: LevelsBlock = LevelsBlock()
    output: OutputBlock = OutputBlock()
    seed: int = Field(0, ge=0, lt=2 ** 64)

    # --- derived objects -------------------------------------------------

    def zfs(self) -> ZfsParameters:
        return ZfsParameters(self.system.D_MHz, self.system.E_MHz)

    def lab_tensor(self) -> LabTensor:
        o = Orientation.from_degrees(self.system.theta_deg, self.system.phi_deg)
        return rotate_to_lab(build_principal_tensor(self.zfs()), o)

    def spin_system(self) -> SpinSystem:
        s = self.system
        f_p, f_m = transition_frequencies(hamiltonian_at_field(s.B0_gauss, s.g, self.lab_tensor()))
        f0 = 0.5 * (f_p + f_m) if s.f0_MHz is None else s.f0_MHz
        return SpinSystem(s.g, s.B0_gauss, f0, f_p, f_m)

    def relaxation_params(self) -> Optional[RelaxationParams]:
        if self.relaxation is None:
            return None
        return RelaxationParams(self.relaxation.t1_us, self.relaxation.t2_us)

    def finite_rabi(self) -> Optional[float]:
        return self.pulses.rabi_MHz if self.pulses.model == "finite" else None

    def target_state(self) -> TargetState:
        return TargetState(self.pattern.state)

    def evolution_schedule(self) -> EvolutionSchedule:
        sc = self.schedule
        if sc.delta_f_plus_MHz is not None:
            return EvolutionSchedule(sc.delta_f_plus_MHz, sc.delta_f_minus_MHz)
        if sc.ratio is not None:
            return EvolutionSchedule.from_ratio(sc.ratio, self.lab_tensor().d_zz)
        return EvolutionSchedule.from_system(self.spin_system())

    def level_fields(self) -> np.ndarray:
        b0 = self.system.B0_gauss
        top = self.levels.b_max_gauss or max(1.25 * b0, 1.0)
        return np.unique(np.append(np.linspace(0.0, top, self.levels.n_points), b0))

    # --- (de)serialisation --------------------------------------------------

    @classmethod
    def parse(cls, text: str) -> "ExperimentConfig":
        return cls.model_validate_json(text)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        return cls.parse(Path(path).read_text())

    def dump(self) -> str:
        return json.dumps(self.model_dump(mode="json"), indent=2, sort_keys=True) + "\n"

    def updated(self, **blocks) -> "ExperimentConfig":
        """Copy with selected top-level fields or block fields replaced.

        Block updates are given as dicts and merged into the existing block.
        """
        data = self.model_dump()
        for key, value in blocks.items():
            if isinstance(value, dict) and isinstance(data.get(key), dict):
                data[key] = {**data[key], **value}
            else:
                data[key] = value
        return type(self).model_validate(data)
