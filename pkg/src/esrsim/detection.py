"""Amplification chain, noise, matched filtering, and sensitivity figures.

The echo leaves the cavity through the output coupler and meets the first
amplifier of the chain.  Referred to the amplifier input, the quadrature
noise spectral density is n/2 with n = n_eq + n_sp + n_amp (G-1)/G:
equilibrium vacuum fluctuations (n_eq = 1/2 in the quantum regime), spin
spontaneous-emission noise n_sp, and the idler contribution of a
phase-insensitive amplifier.  A phase-sensitive (degenerate) amplifier
amplifies one quadrature noiselessly (G_X = 1/G_Y), leaving n_eq + n_sp on
the amplified quadrature.

On a sampled trace, white quadrature noise of spectral density n/2 becomes
an independent Gaussian of variance n/(2 dt) per sample, which makes the
discrete matched-filter signal-to-noise converge to the continuous-time
expression as dt -> 0.

For the closed-form Lorentzian echo (``ensemble.analytic_echo``) filtered
by its own normalised shape, the amplitude signal-to-noise ratio is

    SNR = 2 g p N / (kappa + w) * sqrt(kappa2 (kappa + 2 w) / (n w kappa))

and the spin-count sensitivity (spins at unit SNR) follows as

    N_min = (kappa + w)/(2 g p) * sqrt(n w kappa / (kappa2 (kappa + 2 w))).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import InvalidInputError
from .trace import TimeTrace

MODES = ("off", "degenerate", "nondegenerate")
N_AMP_DEFAULTS = {"off": 50.0, "nondegenerate": 0.5, "degenerate": 0.0}


@dataclass(frozen=True)
class NoiseModel:
    """Amplifier mode, gain, and photon-number noise occupations.

    Attributes:
        mode: ``off`` (no preamplifier, unity gain), ``nondegenerate``
            (phase-insensitive, both quadratures), or ``degenerate``
            (phase-sensitive, amplifies I and deamplifies Q).
        gain: Linear power gain G (forced to 1 when ``mode='off'``).
        n_eq: Equilibrium field occupation factor (1/2 at the quantum limit).
        n_amp: Amplifier added-noise occupation; ``None`` selects the mode
            default (off: 50 for the following-stage amplifier it stands
            for, nondegenerate: 1/2, degenerate: 0).
        n_sp: Spin spontaneous-emission noise occupation.
        n_syst: System noise photon number with the preamplifier off, used
            by the gain-dependence model :func:`snr_vs_gain`.
    """

    mode: str = "degenerate"
    gain: float = 1.0
    n_eq: float = 0.5
    n_amp: Optional[float] = None
    n_sp: float = 0.0
    n_syst: float = 36.0

    def __post_init__(self):
        if self.mode not in MODES:
            raise InvalidInputError(f"unknown amplifier mode {self.mode!r}")
        if self.n_amp is None:
            object.__setattr__(self, "n_amp", N_AMP_DEFAULTS[self.mode])
        if min(self.n_eq, self.n_amp, self.n_sp, self.n_syst) < 0:
            raise InvalidInputError("noise occupations must be non-negative")
        if self.gain < 1:
            raise InvalidInputError("power gain must be at least 1")
        if self.mode == "off" and self.gain != 1.0:
            raise InvalidInputError("mode 'off' implies unit gain")

    @classmethod
    def from_gain_db(cls, gain_db: float, **kwargs) -> "NoiseModel":
        return cls(gain=10 ** (gain_db / 10), **kwargs)

    def with_gain(self, gain: float) -> "NoiseModel":
        return replace(self, gain=gain)

    def input_referred_noise(self) -> tuple[float, float]:
        """Noise occupations (n_I, n_Q) referred to the amplifier input.

        The idler term carries the (G-1)/G factor of the input-output
        relation, so G = 1 adds nothing; a degenerate amplifier adds
        nothing on either quadrature.
        """
        base = self.n_eq + self.n_sp
        if self.mode == "degenerate":
            return base, base
        added = self.n_amp * (self.gain - 1) / self.gain
        return base + added, base + added

    def snr_squared_gain_ratio(self) -> float:
        """Squared-SNR transfer, output over input, of the amplifier.

        Phase-insensitive: G (n_eq + n_sp) / (G (n_eq + n_sp) + (G-1) n_amp),
        the well-known 3 dB penalty at the quantum limit for large gain.
        Degenerate amplification is noiseless on I: the ratio is 1.
        """
        if self.mode == "degenerate":
            return 1.0
        signal = self.gain * (self.n_eq + self.n_sp)
        return signal / (signal + (self.gain - 1) * self.n_amp)


def amplify(trace: TimeTrace, model: NoiseModel, seed: int) -> TimeTrace:
    """Amplify a propagating-field trace and add the chain noise.

    The deterministic part maps I -> sqrt(G) I; Q -> sqrt(G) Q for a
    phase-insensitive amplifier, or Q -> Q/sqrt(G) for a degenerate one.
    Gaussian noise of per-sample variance n/(2 dt), with n referred to the
    input, rides on each quadrature; the draw is reproducible from
    ``seed``.
    """
    if seed is None:
        raise InvalidInputError("amplification requires an explicit seed")
    rng = np.random.default_rng(seed)
    n_i, n_q = model.input_referred_noise()
    dt = trace.dt_s
    n_samples = trace.n_samples
    noise_i = rng.normal(0.0, math.sqrt(n_i / (2 * dt)), n_samples)
    noise_q = rng.normal(0.0, math.sqrt(n_q / (2 * dt)), n_samples)
    root_g = math.sqrt(model.gain)
    i_out = root_g * (trace.i + noise_i)
    if model.mode == "degenerate":
        q_out = (trace.q + noise_q) / root_g
    else:
        q_out = root_g * (trace.q + noise_q)
    return TimeTrace(
        t0_s=trace.t0_s,
        dt_s=dt,
        values=i_out + 1j * q_out,
        units=trace.units,
        seed=seed,
        meta={**trace.meta, "gain": model.gain, "mode": model.mode},
    )


@dataclass
class MatchedFilter:
    """Real template u(t) with unit energy, ``sum(u^2) dt = 1``."""

    dt_s: float
    template: np.ndarray

    def __post_init__(self):
        if self.dt_s <= 0:
            raise InvalidInputError("template sample step must be positive")
        self.template = np.asarray(self.template, dtype=float)
        norm_sq = float(np.sum(self.template**2) * self.dt_s)
        if norm_sq <= 0:
            raise InvalidInputError("matched-filter template has zero norm")
        self.template = self.template / math.sqrt(norm_sq)

    @classmethod
    def from_trace(cls, trace: TimeTrace) -> "MatchedFilter":
        """Optimal template: the I-quadrature shape of the expected echo."""
        return cls(dt_s=trace.dt_s, template=trace.i.copy())

    def norm_sq(self) -> float:
        return float(np.sum(self.template**2) * self.dt_s)


def snr_matched_filter(trace: TimeTrace, filt: MatchedFilter, n: float) -> float:
    """Amplitude SNR of the filtered I quadrature against noise number n.

    ``trace`` and ``n`` must be referred to the same plane (both at the
    amplifier input or both at its output).  The filtered noise variance is
    n/2 for a unit-energy template, so SNR = |integral(I u dt)|/sqrt(n/2).
    """
    if n <= 0:
        raise InvalidInputError("noise photon number must be positive")
    if len(filt.template) != trace.n_samples or abs(filt.dt_s - trace.dt_s) > 1e-18:
        raise InvalidInputError("filter and trace are not on the same grid")
    signal = float(np.sum(trace.i * filt.template) * trace.dt_s)
    return abs(signal) / math.sqrt(n / 2)


def matched_filter_signal_energy(
    g_rad_s, polarization, n_spins, kappa_per_s, kappa2_per_s, w_rad_s
) -> float:
    """Closed-form integral of <X_in(t)>^2 dt for the Lorentzian echo."""
    k, w = kappa_per_s, w_rad_s
    return (
        2
        * g_rad_s**2
        * polarization**2
        * n_spins**2
        * kappa2_per_s
        * (k + 2 * w)
        / ((k + w) ** 2 * w * k)
    )


def snr_lorentzian_echo(
    g_rad_s, polarization, n_spins, kappa_per_s, kappa2_per_s, w_rad_s, n
) -> float:
    """Optimal-template amplitude SNR of the closed-form Lorentzian echo."""
    if n <= 0:
        raise InvalidInputError("noise photon number must be positive")
    k, w = kappa_per_s, w_rad_s
    return (
        2
        * g_rad_s
        * polarization
        * n_spins
        / (k + w)
        * math.sqrt(kappa2_per_s * (k + 2 * w) / (n * w * k))
    )


def nmin(
    g_rad_s, polarization, kappa_per_s, kappa2_per_s, w_rad_s, n
) -> float:
    """Minimum detectable spin number (unit echo SNR), exact expression."""
    _check_positive(
        g_rad_s=g_rad_s, kappa_per_s=kappa_per_s, kappa2_per_s=kappa2_per_s,
        w_rad_s=w_rad_s, n=n,
    )
    if not 0 < polarization <= 1:
        raise InvalidInputError("polarization must lie in (0, 1]")
    k, w = kappa_per_s, w_rad_s
    return (
        (k + w)
        / (2 * g_rad_s * polarization)
        * math.sqrt(n * w * k / (kappa2_per_s * (k + 2 * w)))
    )


def nmin_critical_coupling(
    g_rad_s, polarization, kappa_per_s, n, echo_duration_s
) -> float:
    """Sensitivity in the critically coupled, kappa >> w regime.

    Convenience form (1/(g p)) sqrt(kappa n / T_E) with the echo duration
    T_E standing in for the inverse linewidth of the emitting subset.
    """
    _check_positive(
        g_rad_s=g_rad_s, kappa_per_s=kappa_per_s, n=n, echo_duration_s=echo_duration_s
    )
    if not 0 < polarization <= 1:
        raise InvalidInputError("polarization must lie in (0, 1]")
    return math.sqrt(kappa_per_s * n / echo_duration_s) / (g_rad_s * polarization)


def cpmg_snr_gain(m, period_s: float, t_cpmg_s: float):
    """SNR of an m-echo train over a single echo, for echo decay t_cpmg.

    ratio = sqrt( (t_cpmg / 2 T) (1 - exp(-2 m T / t_cpmg)) ), which grows
    as sqrt(m) while 2 m T << t_cpmg and saturates at sqrt(t_cpmg / 2 T).

    Returns:
        ``(ratio, valid)`` where ``valid`` is False when the echo period
        is not small compared to t_cpmg and the formula loses accuracy.
    """
    _check_positive(period_s=period_s, t_cpmg_s=t_cpmg_s)
    m_arr = np.asarray(m)
    if np.any(m_arr < 1):
        raise InvalidInputError("echo count must be at least 1")
    ratio = np.sqrt(
        t_cpmg_s / (2 * period_s) * (1 - np.exp(-2 * m_arr * period_s / t_cpmg_s))
    )
    valid = bool(period_s < t_cpmg_s)
    if ratio.ndim == 0:
        return float(ratio), valid
    return ratio, valid


def snr_vs_gain(gains, n: float, n_syst: float):
    """SNR versus preamplifier gain, normalised to the high-gain limit.

    SNR(G) is proportional to sqrt(G / ((G-1) n + n_syst)); normalising by
    the G -> infinity asymptote sqrt(1/n) gives
    sqrt(G n / ((G-1) n + n_syst)), so the curve runs from sqrt(n/n_syst)
    at G = 1 up to 1.
    """
    _check_positive(n=n, n_syst=n_syst)
    g = np.asarray(gains, dtype=float)
    if np.any(g < 1):
        raise InvalidInputError("gains must be at least 1")
    out = np.sqrt(g * n / ((g - 1) * n + n_syst))
    return out if out.ndim else float(out)


def _check_positive(**kwargs):
    for name, value in kwargs.items():
        if value <= 0:
            raise InvalidInputError(f"{name} must be positive")
