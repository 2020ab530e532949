"""Spin-1 qutrit pulsed-EPR simulator: state preparation, tomography,
phase interference and powder spectra."""

from .prep_tomo import TargetState, fidelity, preparation, tomography
from .pulse_engine import (
    Delay,
    PulseSpec,
    RelaxationParams,
    SequenceProgram,
    Transition,
    ground_state,
    run_sequence,
)
from .spin_core import (
    LabTensor,
    Orientation,
    SpinSystem,
    ZfsParameters,
    build_principal_tensor,
    operating_point,
    rotate_to_lab,
)

__version__ = "0.1.0"
