"""Spin frequency distributions on a discrete detuning grid.

The inhomogeneous spin line is orders of magnitude wider than the cavity,
so simulations only track the spectral window the pulses actually address.
The window is discretised into bins of detuning from the cavity (default
450 bins of 1 kHz) with one of several weight shapes:

    square         flat over the window
    tilted-square  flat with a linear slope (local slope of a wide line)
    lorentzian     Lorentzian of given FWHM, sampled per bin
    two-peak       sum of two Lorentzians split symmetrically about centre
    tabulated      user-supplied (offset, weight) pairs

A Lorentzian can alternatively be sampled at equal-weight quantile
midpoints ("quantile" sampling).  The resulting non-uniform node spacing
suppresses the spurious periodic revivals a uniform grid produces at
multiples of 1/spacing, which matters for long multi-echo sequences.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import InvalidInputError

KINDS = ("square", "tilted-square", "lorentzian", "two-peak", "tabulated")


def _lorentzian_pdf(offset_hz, fwhm_hz):
    half = fwhm_hz / 2
    return half / np.pi / (offset_hz**2 + half**2)


@dataclass
class FrequencyDistribution:
    """Weights over a grid of detunings from the cavity (Hz).

    Window-limited kinds (``square``, ``tilted-square``) have weights
    summing to one: the ensemble's total spin count refers to the window.
    Density kinds (``lorentzian``, ``two-peak``) carry ``pdf * spacing``
    weights, so the few percent of line mass falling outside the grid is
    simply not simulated rather than folded back onto the grid; the total
    spin count then refers to the full line.

    Attributes:
        kind: One of ``square``, ``tilted-square``, ``lorentzian``,
            ``two-peak``, ``tabulated``.
        n_bins: Number of detuning bins.
        bin_spacing_hz: Uniform grid spacing (ignored for quantile or
            tabulated sampling).
        fwhm_hz: Full width at half maximum for the Lorentzian kinds.
        tilt: Total relative weight variation across the window for
            ``tilted-square`` (0.1 means +-5% at the window edges).
        peak_splitting_hz: Centre-to-centre separation of the two peaks.
        sampling: ``uniform`` or ``quantile`` (Lorentzian only).
        coverage: Probability mass enclosed by the quantile nodes.
        offsets_hz / weights: Populated on construction (or supplied
            directly for the ``tabulated`` kind).
    """

    kind: str = "tilted-square"
    n_bins: int = 450
    bin_spacing_hz: float = 1e3
    fwhm_hz: float = 25e3
    tilt: float = 0.10
    peak_splitting_hz: float = 2e6
    sampling: str = "uniform"
    coverage: float = 0.98
    offsets_hz: Optional[np.ndarray] = None
    weights: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidInputError(f"unknown distribution kind {self.kind!r}")
        if self.kind == "tabulated":
            if self.offsets_hz is None or self.weights is None:
                raise InvalidInputError("tabulated kind needs offsets and weights")
            self.offsets_hz = np.asarray(self.offsets_hz, dtype=float)
            self.weights = np.asarray(self.weights, dtype=float)
        else:
            if self.n_bins < 1:
                raise InvalidInputError("need at least one frequency bin")
            if self.bin_spacing_hz <= 0:
                raise InvalidInputError("bin spacing must be positive")
            if self.kind in ("lorentzian", "two-peak") and self.fwhm_hz <= 0:
                raise InvalidInputError("distribution width must be positive")
            if not 0 <= self.tilt < 2:
                raise InvalidInputError("tilt must lie in [0, 2) to keep weights >= 0")
            self.offsets_hz, self.weights = self._build()
        if np.any(self.weights < 0) or not np.all(np.isfinite(self.weights)):
            raise InvalidInputError("weights must be finite and non-negative")
        if self.weights.sum() <= 0:
            raise InvalidInputError("distribution has zero total weight")

    def _build(self):
        if self.kind == "lorentzian" and self.sampling == "quantile":
            if not 0 < self.coverage < 1:
                raise InvalidInputError("coverage must lie in (0, 1)")
            # Equal-weight nodes at quantile midpoints of the central
            # `coverage` mass; quantile of a Lorentzian is a tangent.
            u = (np.arange(self.n_bins) + 0.5) / self.n_bins
            u = 0.5 + self.coverage * (u - 0.5)
            offsets = self.fwhm_hz / 2 * np.tan(np.pi * (u - 0.5))
            return offsets, np.full(self.n_bins, self.coverage / self.n_bins)
        if self.sampling != "uniform":
            raise InvalidInputError(
                "quantile sampling is only defined for the lorentzian kind"
            )
        offsets = (np.arange(self.n_bins) - (self.n_bins - 1) / 2) * self.bin_spacing_hz
        if self.kind == "square":
            w = np.full(self.n_bins, 1.0 / self.n_bins)
        elif self.kind == "tilted-square":
            span = max(self.n_bins * self.bin_spacing_hz, self.bin_spacing_hz)
            w = (1.0 + self.tilt * offsets / span) / self.n_bins
        elif self.kind == "lorentzian":
            w = _lorentzian_pdf(offsets, self.fwhm_hz) * self.bin_spacing_hz
        elif self.kind == "two-peak":
            w = (
                0.5
                * (
                    _lorentzian_pdf(offsets - self.peak_splitting_hz / 2, self.fwhm_hz)
                    + _lorentzian_pdf(offsets + self.peak_splitting_hz / 2, self.fwhm_hz)
                )
                * self.bin_spacing_hz
            )
        else:  # pragma: no cover
            raise InvalidInputError(self.kind)
        return offsets, w

    @property
    def n(self) -> int:
        return len(self.offsets_hz)

    def validate(self):
        """Re-check the invariants (used by config validation)."""
        if np.any(self.weights < 0) or not np.all(np.isfinite(self.weights)):
            raise InvalidInputError("weights must be finite and non-negative")
        if self.weights.sum() <= 0:
            raise InvalidInputError("distribution has zero total weight")
        return self
