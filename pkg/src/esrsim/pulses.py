"""Pulse-sequence primitives: drive segments, ideal rotations, windows.

A sequence is an ordered list of elements.  Drive segments advance time
and feed the cavity input with a rectangular pulse of amplitude beta
(sqrt(photons/s)) and fixed phase; waits are zero-amplitude segments.
Ideal rotations are instantaneous collective Bloch rotations used for
oracle comparisons against closed-form results, where pulses are assumed
perfect; they act on the spins only and leave the cavity field untouched.
Acquisition windows mark the spans later reduced to echo observables.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Union

from .errors import InvalidInputError


@dataclass(frozen=True)
class DriveSegment:
    """Rectangular cavity drive: ``amplitude`` in sqrt(photons/s)."""

    duration_s: float
    amplitude: float = 0.0
    phase_rad: float = 0.0

    def __post_init__(self):
        if self.duration_s <= 0:
            raise InvalidInputError("segment duration must be positive")


@dataclass(frozen=True)
class IdealRotation:
    """Instantaneous collective rotation about an axis in the xy plane.

    ``axis_phase_rad`` is the axis angle from +x; a drive pulse of phase
    chi acts like an ideal rotation with axis angle -chi.
    """

    angle_rad: float
    axis_phase_rad: float = 0.0


@dataclass(frozen=True)
class AcquisitionWindow:
    t_start_s: float
    t_end_s: float
    label: str = ""

    def __post_init__(self):
        if self.t_end_s <= self.t_start_s:
            raise InvalidInputError("window end must exceed its start")

    @property
    def center_s(self) -> float:
        return 0.5 * (self.t_start_s + self.t_end_s)

    @property
    def duration_s(self) -> float:
        return self.t_end_s - self.t_start_s


Element = Union[DriveSegment, IdealRotation]


@dataclass
class PulseSequence:
    """Ordered drive elements plus acquisition windows.

    Attributes:
        elements: Drive segments and ideal rotations, executed in order.
        windows: Non-overlapping acquisition windows inside the sequence.
        repetition_rate_hz: Sequence repetition rate (sets the effective
            initial polarisation of slowly relaxing spins).
    """

    elements: list = field(default_factory=list)
    windows: list = field(default_factory=list)
    repetition_rate_hz: float = 1.0

    def __post_init__(self):
        if self.repetition_rate_hz <= 0:
            raise InvalidInputError("repetition rate must be positive")
        total = self.duration_s
        last_end = None
        for win in sorted(self.windows, key=lambda w: w.t_start_s):
            if win.t_start_s < -1e-15 or win.t_end_s > total + 1e-12:
                raise InvalidInputError("acquisition window outside the sequence")
            if last_end is not None and win.t_start_s < last_end - 1e-15:
                raise InvalidInputError("acquisition windows overlap")
            last_end = win.t_end_s

    @property
    def duration_s(self) -> float:
        return sum(
            el.duration_s for el in self.elements if isinstance(el, DriveSegment)
        )

    @property
    def drive_pulses(self) -> list:
        """Drive segments with non-zero amplitude."""
        return [
            el
            for el in self.elements
            if isinstance(el, DriveSegment) and el.amplitude != 0.0
        ]

    def inverted_excitation(self) -> "PulseSequence":
        """Copy with the first pulse phase-inverted (phase-cycling partner).

        The first non-trivial element (drive pulse or rotation) gets its
        phase shifted by pi, flipping the sign of the excited coherence and
        hence of the echo, while instrumental offsets are unaffected.
        """
        elements = list(self.elements)
        for k, el in enumerate(elements):
            if isinstance(el, DriveSegment) and el.amplitude != 0.0:
                elements[k] = replace(el, phase_rad=el.phase_rad + 3.141592653589793)
                break
            if isinstance(el, IdealRotation) and el.angle_rad != 0.0:
                elements[k] = replace(
                    el, axis_phase_rad=el.axis_phase_rad + 3.141592653589793
                )
                break
        else:
            raise InvalidInputError("sequence has no excitation pulse to invert")
        return PulseSequence(
            elements=elements,
            windows=list(self.windows),
            repetition_rate_hz=self.repetition_rate_hz,
        )

    def to_json(self) -> str:
        def encode(el):
            if isinstance(el, DriveSegment):
                return {
                    "type": "drive",
                    "duration_s": el.duration_s,
                    "amplitude": el.amplitude,
                    "phase_rad": el.phase_rad,
                }
            return {
                "type": "rotation",
                "angle_rad": el.angle_rad,
                "axis_phase_rad": el.axis_phase_rad,
            }

        return json.dumps(
            {
                "elements": [encode(el) for el in self.elements],
                "windows": [
                    {
                        "t_start_s": w.t_start_s,
                        "t_end_s": w.t_end_s,
                        "label": w.label,
                    }
                    for w in self.windows
                ],
                "repetition_rate_hz": self.repetition_rate_hz,
            },
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str) -> "PulseSequence":
        raw = json.loads(text)
        elements = []
        for el in raw["elements"]:
            if el["type"] == "drive":
                elements.append(
                    DriveSegment(
                        duration_s=el["duration_s"],
                        amplitude=el["amplitude"],
                        phase_rad=el["phase_rad"],
                    )
                )
            elif el["type"] == "rotation":
                elements.append(
                    IdealRotation(
                        angle_rad=el["angle_rad"],
                        axis_phase_rad=el["axis_phase_rad"],
                    )
                )
            else:
                raise InvalidInputError(f"unknown element type {el['type']!r}")
        windows = [
            AcquisitionWindow(w["t_start_s"], w["t_end_s"], w.get("label", ""))
            for w in raw["windows"]
        ]
        return cls(
            elements=elements,
            windows=windows,
            repetition_rate_hz=raw.get("repetition_rate_hz", 1.0),
        )
