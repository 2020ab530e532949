"""CSV / JSON readers and writers for sequences, states and simulation outputs.

Floats are written with ``repr`` so files round-trip exactly and reruns are
byte-identical.
"""

from __future__ import annotations

import csv
import io as _io
import json
import math
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np
from numpy.typing import NDArray

from .interference import ClosureReport, FourierPeaks, PhasePattern, TimeGrid
from .pulse_engine import (
    DEFAULT_RABI_MHZ,
    ConfigurationError,
    Delay,
    PulseSpec,
    RelaxationParams,
    SequenceProgram,
    Transition,
)
from .spectrum import OrientationSelection, SpectrumResult


class FormatError(ValueError):
    """A file does not follow the expected layout."""


def _num(x) -> str:
    return repr(float(x))


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([v if isinstance(v, str) else _num(v) for v in row])
    return buf.getvalue()


def write_text(path, text: str) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from exc
    return path


def read_text(path) -> str:
    path = Path(path)
    try:
        return path.read_text()
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc.strerror}") from exc


# --- sequences --------------------------------------------------------------

def program_to_json(prog: SequenceProgram) -> list:
    out = []
    for step in prog.steps:
        if isinstance(step, Delay):
            out.append({"delay_us": float(step.duration)})
            continue
        pulse = {
            "transition": step.transition.value,
            "tip_deg": math.degrees(step.tip_angle),
            "phase_deg": math.degrees(step.phase),
            "model": "finite" if step.is_finite else "ideal",
        }
        if step.is_finite:
            pulse["rabi_MHz"] = float(step.rabi_frequency)
        out.append({"pulse": pulse})
    return out


def program_from_json(data, relaxation: Optional[RelaxationParams] = None) -> SequenceProgram:
    if not isinstance(data, list):
        raise FormatError("a sequence must be a JSON array")
    steps = []
    for i, item in enumerate(data):
        if not isinstance(item, dict) or len(item) != 1:
            raise FormatError(f"step {i}: expected a single 'pulse' or 'delay_us' entry")
        if "delay_us" in item:
            steps.append(Delay(float(item["delay_us"])))
        elif "pulse" in item:
            p = dict(item["pulse"])
            unknown = set(p) - {"transition", "tip_deg", "phase_deg", "model", "rabi_MHz"}
            if unknown:
                raise FormatError(f"step {i}: unknown pulse keys {sorted(unknown)}")
            try:
                tr = Transition(p["transition"])
                tip = math.radians(float(p["tip_deg"]))
            except (KeyError, ValueError) as exc:
                raise FormatError(f"step {i}: {exc}") from exc
            phase = math.radians(float(p.get("phase_deg", 0.0)))
            model = p.get("model", "ideal")
            if model == "ideal":
                steps.append(PulseSpec(tr, tip, phase))
            elif model == "finite":
                steps.append(PulseSpec.finite(tr, tip, phase, float(p.get("rabi_MHz", DEFAULT_RABI_MHZ))))
            else:
                raise ConfigurationError(f"step {i}: unknown pulse model {model!r}")
        else:
            raise FormatError(f"step {i}: expected 'pulse' or 'delay_us'")
    return SequenceProgram(tuple(steps), relaxation)


# --- densities ----------------------------------------------------------------

def density_to_json(rho: NDArray, **extra) -> dict:
    rho = np.asarray(rho, dtype=complex)
    out = {"re": rho.real.tolist(), "im": rho.imag.tolist()}
    out.update({k: (float(v) if isinstance(v, (float, np.floating)) else v) for k, v in extra.items()})
    return out


def density_from_json(data: dict) -> NDArray:
    try:
        re = np.asarray(data["re"], dtype=float)
        im = np.asarray(data["im"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"density JSON needs 3x3 're' and 'im' arrays: {exc}") from exc
    if re.shape != (3, 3) or im.shape != (3, 3):
        raise FormatError("density JSON needs 3x3 're' and 'im' arrays")
    return re + 1j * im


def tomography_table(rho: NDArray, ideal: NDArray) -> str:
    rows = [(str(i), str(j), rho[i, j].real, rho[i, j].imag, ideal[i, j].real, ideal[i, j].imag)
            for i in range(3) for j in range(3)]
    return _csv_text(("row", "col", "re", "im", "ideal_re", "ideal_im"), rows)


# --- patterns and derived data ---------------------------------------------------

def pattern_to_csv(p: PhasePattern) -> str:
    header = ["phi_plus\\phi_minus"] + [_num(v) for v in p.phases]
    rows = ([_num(pp)] + [_num(v) for v in row] for pp, row in zip(p.phases, p.grid))
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def pattern_from_csv(text: str) -> PhasePattern:
    rows = list(csv.reader(_io.StringIO(text)))
    if len(rows) < 2:
        raise FormatError("pattern CSV needs a header row and data rows")
    try:
        cols = np.array([float(v) for v in rows[0][1:]])
        body = np.array([[float(v) for v in r] for r in rows[1:] if r])
    except ValueError as exc:
        raise FormatError(f"pattern CSV has a non-numeric cell: {exc}") from exc
    if body.ndim != 2 or body.shape[1] != len(cols) + 1:
        raise FormatError("pattern CSV rows do not match the header length")
    if not np.allclose(body[:, 0], cols):
        raise FormatError("pattern CSV must use the same phase axis on both sides")
    return PhasePattern(body[:, 1:], cols)


def peaks_to_json(peaks: FourierPeaks) -> list:
    return peaks.as_records()


def timegrid_to_csv(g: TimeGrid) -> str:
    header = ["t_plus_us\\t_minus_us"] + [_num(v) for v in g.t_minus]
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for tp, row in zip(g.t_plus, g.values):
        w.writerow([_num(tp)] + [_num(v) for v in row])
    return buf.getvalue()


def trace_to_csv(t: NDArray, m: NDArray) -> str:
    return _csv_text(("t_us", "M0plus"), zip(t, m))


def path_to_csv(t: NDArray, phi1: NDArray, phi2: NDArray) -> str:
    return _csv_text(("t_us", "phi1_rad", "phi2_rad"), zip(t, phi1, phi2))


def closure_to_json(r: ClosureReport) -> dict:
    return {
        "ratio": r.ratio,
        "commensurate": r.commensurate,
        "winding": list(r.winding) if r.winding else None,
        "closure_time_us": r.closure_time,
        "min_return_distance_rad": r.min_return_distance,
        "windings_checked": r.windings_checked,
    }


def levels_to_csv(rows: NDArray) -> str:
    return _csv_text(("B0_gauss", "E_plus_MHz", "E_zero_MHz", "E_minus_MHz"), rows)


def spectrum_to_csv(s: SpectrumResult) -> str:
    return _csv_text(("B_gauss", "intensity"), zip(s.field_axis, s.intensity))


def selection_to_json(sel: OrientationSelection) -> dict:
    return {
        "window_gauss": [float(sel.window[0]), float(sel.window[1])],
        "orientations": [
            {"theta_deg": math.degrees(t), "phi_deg": math.degrees(p), "dzz_MHz": float(d)}
            for t, p, d in zip(sel.theta, sel.phi, sel.dzz)
        ],
    }


def dump_json(obj) -> str:
    return _json_text(obj)
