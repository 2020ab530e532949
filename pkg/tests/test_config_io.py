import json
import math

import numpy as np
import pytest
from pydantic import ValidationError

from qutritsim import io
from qutritsim.config import ExperimentConfig
from qutritsim.interference import (
    EvolutionSchedule,
    analytic_pattern,
    fourier_peaks,
    torus_path,
)
from qutritsim.prep_tomo import TargetState, prepare_psi2
from qutritsim.pulse_engine import Delay, PulseSpec, RelaxationParams, SequenceProgram, Transition


def test_config_round_trip():
    cfg = ExperimentConfig().updated(seed=42, pattern={"state": "psi1", "grid_n": 32})
    text = cfg.dump()
    again = ExperimentConfig.parse(text)
    assert again == cfg
    assert again.dump() == text


@pytest.mark.parametrize("doc", [
    {"bogus": 1},
    {"system": {"g": 2.0, "extra": 1}},
    {"system": {"g": -2.0}},
    {"relaxation": {"t1_us": 0.0, "t2_us": 1.0}},
    {"pulses": {"model": "gaussian"}},
    {"pattern": {"grid_n": 48}},
    {"schedule": {"ratio": 1.0, "delta_f_plus_MHz": 80.0, "delta_f_minus_MHz": 90.0}},
    {"schedule": {"delta_f_plus_MHz": 80.0}},
    {"system": {"D_MHz": 100.0, "E_MHz": 40.0}},
    {"seed": -1},
])
def test_config_rejects_invalid(doc):
    with pytest.raises(ValidationError):
        ExperimentConfig.parse(json.dumps(doc))


def test_config_derived_objects():
    cfg = ExperimentConfig()
    assert cfg.lab_tensor().d_zz == pytest.approx(-59.35, abs=0.01)
    s = cfg.spin_system()
    assert s.f0 == pytest.approx(0.5 * (s.f_plus + s.f_minus))
    assert cfg.relaxation_params() == RelaxationParams(10700.0, 9.4)
    assert cfg.finite_rabi() is None
    assert cfg.updated(pulses={"model": "finite"}).finite_rabi() == 20.0
    assert cfg.target_state() is TargetState.PSI2
    sched = cfg.updated(schedule={"ratio": 2.0}).evolution_schedule()
    assert sched.ratio == pytest.approx(2.0)
    explicit = cfg.updated(schedule={"delta_f_plus_MHz": 60.0, "delta_f_minus_MHz": 120.0})
    assert explicit.evolution_schedule() == EvolutionSchedule(60.0, 120.0)
    assert 3299.0 in cfg.level_fields()
    assert ExperimentConfig.parse('{"relaxation": null}').relaxation_params() is None


def test_explicit_detection_frequency():
    cfg = ExperimentConfig().updated(system={"f0_MHz": 9250.5})
    s = cfg.spin_system()
    assert s.f0 == 9250.5
    assert s.delta_f_plus + s.delta_f_minus == pytest.approx(178.05, abs=0.01)


def test_program_json_round_trip():
    prog = SequenceProgram([
        PulseSpec(Transition.PLUS, math.pi / 2, 0.3),
        Delay(40.0),
        PulseSpec.finite(Transition.MINUS, math.pi, 1.0, rabi=10.0),
    ])
    data = json.loads(json.dumps(io.program_to_json(prog)))
    assert data[1] == {"delay_us": 40.0}
    assert data[0]["pulse"]["tip_deg"] == pytest.approx(90.0)
    back = io.program_from_json(data)
    assert len(back.steps) == 3
    for a, b in zip(prog.steps, back.steps):
        assert type(a) is type(b)
        if isinstance(a, PulseSpec):
            assert a.transition is b.transition and a.is_finite == b.is_finite
            assert a.tip_angle == pytest.approx(b.tip_angle)
            assert a.phase == pytest.approx(b.phase)


def test_program_json_documented_example():
    prog = io.program_from_json([
        {"pulse": {"transition": "plus", "tip_deg": 90, "phase_deg": 0, "model": "ideal"}},
        {"delay_us": 40.0},
    ])
    assert prog.steps[0] == PulseSpec(Transition.PLUS, math.pi / 2, 0.0)


@pytest.mark.parametrize("bad", [
    {"steps": []},
    [{"pulse": {"transition": "sideways", "tip_deg": 90}}],
    [{"pulse": {"transition": "plus"}}],
    [{"pulse": {"transition": "plus", "tip_deg": 90, "colour": "red"}}],
    [{"wait": 3}],
    [{"delay_us": 1.0, "pulse": {}}],
])
def test_program_json_errors(bad):
    with pytest.raises(io.FormatError):
        io.program_from_json(bad)


def test_density_json_round_trip():
    rho = np.array([[0.5, 0.1 + 0.2j, 0], [0.1 - 0.2j, 0.3, 0], [0, 0, 0.2]])
    back = io.density_from_json(json.loads(io.dump_json(io.density_to_json(rho, purity=0.5))))
    assert np.array_equal(back, rho)
    with pytest.raises(io.FormatError):
        io.density_from_json({"re": [[1]]})


def test_pattern_csv_round_trip_is_exact():
    p = analytic_pattern(TargetState.PSI2, 16)
    text = io.pattern_to_csv(p)
    header = text.splitlines()[0].split(",")
    assert len(header) == 17
    back = io.pattern_from_csv(text)
    assert np.array_equal(back.grid, p.grid) and np.array_equal(back.phases, p.phases)
    assert io.pattern_to_csv(back) == text


def test_pattern_csv_errors():
    with pytest.raises(io.FormatError):
        io.pattern_from_csv("x\n")
    with pytest.raises(io.FormatError):
        io.pattern_from_csv("a,0,1\n0,x,1\n1,0,0\n")


def test_small_writers():
    peaks = io.peaks_to_json(fourier_peaks(analytic_pattern(TargetState.PSI1, 8)))
    assert {(r["k_plus"], r["k_minus"]) for r in peaks} == {(1, 1), (-1, -1)}
    t, phi1, phi2, rep = torus_path(EvolutionSchedule.from_ratio(0.5), 0.05, 5)
    assert io.path_to_csv(t, phi1, phi2).splitlines()[0] == "t_us,phi1_rad,phi2_rad"
    assert io.closure_to_json(rep)["winding"] == [1, 2]
    assert io.trace_to_csv(t, phi1).splitlines()[0] == "t_us,M0plus"
    table = io.tomography_table(np.eye(3) / 3, np.eye(3) / 3)
    assert table.splitlines()[0] == "row,col,re,im,ideal_re,ideal_im"
    assert len(table.splitlines()) == 10


def test_read_errors_carry_path(tmp_path):
    missing = tmp_path / "nope.csv"
    with pytest.raises(OSError, match="nope.csv"):
        io.read_text(missing)
