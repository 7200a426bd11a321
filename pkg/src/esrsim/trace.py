"""Uniformly sampled complex time traces and their CSV round trip.

A trace holds the demodulated cavity field (or the propagating field after
the detection chain) on a uniform time grid.  The real part is the I
quadrature and the imaginary part the Q quadrature.  Files are written with
17 significant digits so that reading a trace back reproduces the in-memory
floats exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import InvalidInputError

_FLOAT_FMT = "%.17g"


@dataclass
class TimeTrace:
    """Complex field samples on a uniform grid starting at ``t0_s``.

    Attributes:
        t0_s: Time of the first sample (s).
        dt_s: Sample step (s), strictly positive.
        values: Complex samples; ``values.real`` is I, ``values.imag`` is Q.
        units: Free-text unit tag, e.g. ``"sqrt_photons"`` for the
            intracavity field or ``"sqrt_photons_per_s"`` for propagating
            fields.
        seed: RNG seed used to generate any noise in the trace, if noisy.
    """

    t0_s: float
    dt_s: float
    values: np.ndarray
    units: str = "sqrt_photons"
    seed: Optional[int] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.dt_s <= 0:
            raise InvalidInputError("sample step must be positive")
        self.values = np.asarray(self.values, dtype=complex)

    @property
    def n_samples(self) -> int:
        return len(self.values)

    @property
    def times_s(self) -> np.ndarray:
        return self.t0_s + self.dt_s * np.arange(self.n_samples)

    @property
    def i(self) -> np.ndarray:
        return self.values.real

    @property
    def q(self) -> np.ndarray:
        return self.values.imag

    @property
    def amplitude(self) -> np.ndarray:
        return np.abs(self.values)

    def scaled(self, factor: complex, units: Optional[str] = None) -> "TimeTrace":
        """Return a copy with values multiplied by ``factor``."""
        return replace(
            self, values=self.values * factor, units=units or self.units
        )

    def window(self, t_start_s: float, t_end_s: float) -> "TimeTrace":
        """Return the sub-trace with ``t_start_s <= t < t_end_s``."""
        if t_end_s <= t_start_s:
            raise InvalidInputError("window end must exceed window start")
        t = self.times_s
        sel = (t >= t_start_s - 1e-15) & (t < t_end_s - 1e-15)
        if not np.any(sel):
            raise InvalidInputError("window contains no samples")
        first = int(np.argmax(sel))
        return replace(self, t0_s=t[first], values=self.values[sel])

    def __add__(self, other: "TimeTrace") -> "TimeTrace":
        self._check_compatible(other)
        return replace(self, values=self.values + other.values)

    def __sub__(self, other: "TimeTrace") -> "TimeTrace":
        self._check_compatible(other)
        return replace(self, values=self.values - other.values)

    def _check_compatible(self, other: "TimeTrace"):
        if (
            self.n_samples != other.n_samples
            or abs(self.dt_s - other.dt_s) > 1e-18
            or abs(self.t0_s - other.t0_s) > 1e-15
        ):
            raise InvalidInputError("traces are not sampled on the same grid")

    def to_csv(self, path, header: Optional[dict] = None):
        """Write ``t_s, re, im`` columns preceded by ``# key=value`` lines."""
        meta = {"units": self.units, "dt_s": repr(self.dt_s), "t0_s": repr(self.t0_s)}
        if self.seed is not None:
            meta["seed"] = str(self.seed)
        if header:
            meta.update({k: str(v) for k, v in header.items()})
        with open(path, "w") as fh:
            for key, value in meta.items():
                fh.write(f"# {key}={value}\n")
            fh.write("t_s,re,im\n")
            for t, v in zip(self.times_s, self.values):
                fh.write(
                    f"{_FLOAT_FMT % t},{_FLOAT_FMT % v.real},{_FLOAT_FMT % v.imag}\n"
                )

    @classmethod
    def from_csv(cls, path) -> "TimeTrace":
        meta = {}
        rows = []
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if line.startswith("#"):
                    key, _, value = line[1:].strip().partition("=")
                    meta[key.strip()] = value
                elif line and not line.startswith("t_s"):
                    rows.append([float(x) for x in line.split(",")])
        data = np.array(rows)
        seed = int(meta["seed"]) if "seed" in meta else None
        return cls(
            t0_s=float(meta["t0_s"]),
            dt_s=float(meta["dt_s"]),
            values=data[:, 1] + 1j * data[:, 2],
            units=meta.get("units", "sqrt_photons"),
            seed=seed,
            meta=meta,
        )
