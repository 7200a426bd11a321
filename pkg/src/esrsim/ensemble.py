"""Mean-field dynamics of an inhomogeneous spin ensemble in a cavity.

The ensemble is split into homogeneous sub-ensembles, one per (frequency,
coupling) bin.  Sub-ensemble m holds N_m spins at detuning Delta_m from the
cavity with coupling g_m and collective operators S_(x,y,z) (Pauli
convention, so |<S>| <= N_m and S_- = (S_x - i S_y)/2).  In the frame
rotating at the cavity frequency the mean-field equations of motion are

    d<a>/dt   = sqrt(kappa1/2) beta(t) - (kappa/2) <a> - i sum_m g_m <S->_m
    d<S->_m   = -(i Delta_m + gamma_perp + gamma_par_m/2) <S->_m
                + i g_m <Sz>_m <a>
    d<Sz>_m   = -gamma_par_m (<Sz>_m + N_m) + 2 i g_m (<a>* <S->_m - <a> <S+>_m)

with <Sz a> factorised as <Sz><a> (products of means).  Here g_m is in
rad/s.  Energy relaxation is cavity-mediated (Purcell) with

    gamma_par_m = kappa g_m^2 / (Delta_m^2 + kappa^2/4),

so detuned spins relax slower; since sequences repeat at a finite rate
gamma_rep, detuned spins do not fully re-polarise between shots and start
with the effective polarisation 1 - exp(-gamma_par_m / gamma_rep).

For a Lorentzian detuning distribution of FWHM w, ideal pulses and no
decoherence, the echo emitted at weak cooperativity C = 4 g^2 N/(kappa w)
has the closed form implemented in :func:`analytic_echo`; it serves as the
oracle for the numerical integrator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .distributions import FrequencyDistribution
from .errors import InvalidInputError, SolverFailureError
from .field_geometry import CouplingDistribution
from .pulses import AcquisitionWindow, DriveSegment, IdealRotation, PulseSequence
from .trace import TimeTrace

TWO_PI = 2 * np.pi


@dataclass(frozen=True)
class CavityParams:
    """Cavity frequency and rates.

    kappa1/kappa2 are the input/output antenna couplings, kappa_loss the
    internal loss; the total linewidth is their sum.
    """

    omega0_rad_s: float = TWO_PI * 7.24e9
    kappa1_per_s: float = 1.2e4
    kappa2_per_s: float = 5.6e4
    kappa_loss_per_s: float = 8.363e4

    def __post_init__(self):
        if self.omega0_rad_s <= 0:
            raise InvalidInputError("cavity frequency must be positive")
        if min(self.kappa1_per_s, self.kappa2_per_s, self.kappa_loss_per_s) < 0:
            raise InvalidInputError("cavity rates must be non-negative")
        if self.kappa_per_s <= 0:
            raise InvalidInputError("total cavity linewidth must be positive")

    @property
    def kappa_per_s(self) -> float:
        return self.kappa1_per_s + self.kappa2_per_s + self.kappa_loss_per_s

    @property
    def quality_factor(self) -> float:
        return self.omega0_rad_s / self.kappa_per_s


@dataclass
class SubEnsemble:
    """One homogeneous (frequency, coupling) bin of the ensemble.

    Attributes:
        size: Number of spins N_m (real-valued).
        detuning_rad_s: Delta_m, spin frequency minus cavity frequency.
        g_hz: Coupling constant in Hz (multiply by 2 pi for rad/s).
        gamma_perp_per_s: Transverse dephasing rate.
        gamma_par_per_s: Energy relaxation rate (Purcell).
        bloch: Collective (<Sx>, <Sy>, <Sz>).
    """

    size: float
    detuning_rad_s: float
    g_hz: float
    gamma_perp_per_s: float
    gamma_par_per_s: float
    bloch: tuple[float, float, float]

    def __post_init__(self):
        if self.size < 0:
            raise InvalidInputError("sub-ensemble size must be non-negative")
        sx, sy, sz = self.bloch
        norm2 = sx * sx + sy * sy + sz * sz
        if norm2 > self.size**2 * (1 + 1e-9) + 1e-12:
            raise InvalidInputError("Bloch vector exceeds the mean-field bound N_m")


def purcell_rate_per_s(g_hz, detuning_rad_s, kappa_per_s):
    """Cavity-mediated relaxation rate kappa g^2/(Delta^2 + kappa^2/4)."""
    g_rad = TWO_PI * np.asarray(g_hz, dtype=float)
    delta = np.asarray(detuning_rad_s, dtype=float)
    return kappa_per_s * g_rad**2 / (delta**2 + kappa_per_s**2 / 4)


def effective_polarization(gamma_par_per_s, repetition_rate_hz):
    """Initial polarisation of spins re-pumped at a finite repetition rate."""
    return 1.0 - np.exp(-np.asarray(gamma_par_per_s) / repetition_rate_hz)


def discretize_ensemble(
    coupling: CouplingDistribution,
    freq: FrequencyDistribution,
    n_spins_total: float,
    repetition_rate_hz: float,
    gamma_perp_per_s: float,
    cavity: CavityParams,
    center_offset_hz: float = 0.0,
    initial_polarization: Optional[float] = None,
    purcell: bool = True,
) -> list[SubEnsemble]:
    """Split the ensemble into (coupling x frequency) sub-ensembles.

    Bin populations are ``n_spins_total * rho(g_k) * rho(f_i)``; each bin
    gets the Purcell rate for its detuning and starts fully along -z with
    the effective polarisation for the given repetition rate (or with
    ``initial_polarization`` when supplied, e.g. 1.0 for oracle scenarios).

    ``center_offset_hz`` shifts the whole frequency grid, i.e. the detuning
    of the line centre from the cavity.
    """
    if n_spins_total < 0:
        raise InvalidInputError("total spin count must be non-negative")
    if repetition_rate_hz <= 0:
        raise InvalidInputError("repetition rate must be positive")
    if gamma_perp_per_s < 0:
        raise InvalidInputError("dephasing rate must be non-negative")
    weights = np.outer(coupling.weight, freq.weights)
    if weights.sum() <= 0:
        raise InvalidInputError("zero total ensemble weight")

    out = []
    for k, g_hz in enumerate(coupling.g_hz):
        for i, f_off in enumerate(freq.offsets_hz):
            n_m = float(n_spins_total * weights[k, i])
            delta = TWO_PI * (f_off + center_offset_hz)
            g_par = (
                float(purcell_rate_per_s(g_hz, delta, cavity.kappa_per_s))
                if purcell
                else 0.0
            )
            pol = (
                initial_polarization
                if initial_polarization is not None
                else float(effective_polarization(g_par, repetition_rate_hz))
            )
            out.append(
                SubEnsemble(
                    size=n_m,
                    detuning_rad_s=float(delta),
                    g_hz=float(g_hz),
                    gamma_perp_per_s=float(gamma_perp_per_s),
                    gamma_par_per_s=g_par,
                    bloch=(0.0, 0.0, -n_m * pol),
                )
            )
    return out


@dataclass
class EnsembleState:
    """Cavity amplitude plus packed sub-ensemble arrays at one instant.

    ``sminus`` follows S_- = (S_x - i S_y)/2, so a fully tipped bin has
    |sminus| = N_m/2.
    """

    cavity_amp: complex = 0.0
    time_s: float = 0.0
    size: np.ndarray = field(default_factory=lambda: np.zeros(0))
    detuning_rad_s: np.ndarray = field(default_factory=lambda: np.zeros(0))
    g_hz: np.ndarray = field(default_factory=lambda: np.zeros(0))
    gamma_perp_per_s: np.ndarray = field(default_factory=lambda: np.zeros(0))
    gamma_par_per_s: np.ndarray = field(default_factory=lambda: np.zeros(0))
    sminus: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=complex))
    sz: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @classmethod
    def from_subensembles(
        cls, subs: Sequence[SubEnsemble], cavity_amp: complex = 0.0, time_s: float = 0.0
    ) -> "EnsembleState":
        n = len(subs)
        state = cls(
            cavity_amp=complex(cavity_amp),
            time_s=time_s,
            size=np.array([s.size for s in subs], dtype=float),
            detuning_rad_s=np.array([s.detuning_rad_s for s in subs], dtype=float),
            g_hz=np.array([s.g_hz for s in subs], dtype=float),
            gamma_perp_per_s=np.array([s.gamma_perp_per_s for s in subs], dtype=float),
            gamma_par_per_s=np.array([s.gamma_par_per_s for s in subs], dtype=float),
            sminus=np.array(
                [0.5 * (s.bloch[0] - 1j * s.bloch[1]) for s in subs], dtype=complex
            ),
            sz=np.array([s.bloch[2] for s in subs], dtype=float),
        )
        if n == 0:
            state.sminus = np.zeros(0, dtype=complex)
        return state

    @property
    def n_subensembles(self) -> int:
        return len(self.size)

    def subensembles(self) -> list[SubEnsemble]:
        return [
            SubEnsemble(
                size=float(self.size[m]),
                detuning_rad_s=float(self.detuning_rad_s[m]),
                g_hz=float(self.g_hz[m]),
                gamma_perp_per_s=float(self.gamma_perp_per_s[m]),
                gamma_par_per_s=float(self.gamma_par_per_s[m]),
                bloch=(
                    float(2 * self.sminus[m].real),
                    float(-2 * self.sminus[m].imag),
                    float(self.sz[m]),
                ),
            )
            for m in range(self.n_subensembles)
        ]

    def bloch_totals(self) -> tuple[float, float, float]:
        return (
            float(2 * np.sum(self.sminus.real)),
            float(-2 * np.sum(self.sminus.imag)),
            float(np.sum(self.sz)),
        )

    def bloch_norms_sq(self) -> np.ndarray:
        """Per-bin <Sx>^2 + <Sy>^2 + <Sz>^2."""
        return 4 * np.abs(self.sminus) ** 2 + self.sz**2

    def collective_coupling_rad_s(self) -> float:
        """Ensemble coupling sqrt(sum_m N_m g_m^2) in rad/s."""
        return float(np.sqrt(np.sum(self.size * (TWO_PI * self.g_hz) ** 2)))

    def copy(self) -> "EnsembleState":
        return replace(
            self,
            size=self.size.copy(),
            detuning_rad_s=self.detuning_rad_s.copy(),
            g_hz=self.g_hz.copy(),
            gamma_perp_per_s=self.gamma_perp_per_s.copy(),
            gamma_par_per_s=self.gamma_par_per_s.copy(),
            sminus=self.sminus.copy(),
            sz=self.sz.copy(),
        )


@dataclass(frozen=True)
class SolverConfig:
    """Adaptive integrator contract and output sampling."""

    rtol: float = 1e-8
    atol: float = 1e-10
    method: str = "DOP853"
    max_step_s: float = math.inf
    sample_step_s: float = 5e-7


@dataclass
class BlochCheckpoint:
    time_s: float
    sx_total: float
    sy_total: float
    sz_total: float


@dataclass
class IntegrationResult:
    """Sampled cavity field, aggregate inversion, and final ensemble state."""

    trace: TimeTrace
    sz_total: np.ndarray
    final_state: EnsembleState
    checkpoints: list


def _rotate(sminus, sz, angle_rad, axis_phase_rad):
    """Collective Bloch rotation about an equatorial axis (vectorised)."""
    sx = 2 * sminus.real
    sy = -2 * sminus.imag
    ux, uy = np.cos(axis_phase_rad), np.sin(axis_phase_rad)
    c, s = np.cos(angle_rad), np.sin(angle_rad)
    # Rodrigues rotation for axis (ux, uy, 0).
    dot = ux * sx + uy * sy
    rx = sx * c + uy * sz * s + ux * dot * (1 - c)
    ry = sy * c - ux * sz * s + uy * dot * (1 - c)
    rz = sz * c + (ux * sy - uy * sx) * s
    return 0.5 * (rx - 1j * ry), rz


def _pack(state: EnsembleState) -> np.ndarray:
    m = state.n_subensembles
    y = np.empty(2 + 3 * m)
    y[0] = state.cavity_amp.real
    y[1] = state.cavity_amp.imag
    y[2 : 2 + m] = state.sminus.real
    y[2 + m : 2 + 2 * m] = state.sminus.imag
    y[2 + 2 * m :] = state.sz
    return y


def _unpack_into(state: EnsembleState, y: np.ndarray, time_s: float):
    m = state.n_subensembles
    state.cavity_amp = complex(y[0], y[1])
    state.sminus = y[2 : 2 + m] + 1j * y[2 + m : 2 + 2 * m]
    state.sz = y[2 + 2 * m :].copy()
    state.time_s = time_s


def integrate(
    state: EnsembleState,
    sequence: PulseSequence,
    cavity: CavityParams,
    solver: SolverConfig = SolverConfig(),
    drive_scale: float = 1.0,
) -> IntegrationResult:
    """Integrate the driven cavity + ensemble through a pulse sequence.

    The input state is not modified.  The returned trace samples the
    intracavity amplitude <a> on a uniform grid of ``solver.sample_step_s``
    covering the whole sequence; ``sz_total`` carries the summed inversion
    on the same grid.  Ideal rotations are applied instantaneously between
    segments and recorded as Bloch checkpoints.

    Args:
        drive_scale: Multiplier on drive *power* (amplitudes are scaled by
            its square root), the input-line calibration factor.

    Raises:
        SolverFailureError: on step-size underflow or non-finite state; the
            exception carries the time of the last good state.
    """
    work = state.copy()
    m = work.n_subensembles
    g_rad = TWO_PI * work.g_hz
    delta = work.detuning_rad_s
    gamma_t = work.gamma_perp_per_s + 0.5 * work.gamma_par_per_s
    gamma_par = work.gamma_par_per_s
    n_m = work.size
    kappa = cavity.kappa_per_s
    drive_coeff = np.sqrt(cavity.kappa1_per_s / 2) * np.sqrt(drive_scale)

    def make_rhs(beta_re, beta_im):
        def rhs(_t, y):
            dy = np.empty_like(y)
            a_re, a_im = y[0], y[1]
            sm_re = y[2 : 2 + m]
            sm_im = y[2 + m : 2 + 2 * m]
            sz = y[2 + 2 * m :]
            # Fixed-order dot products keep the back-action sum deterministic.
            coup_re = g_rad @ sm_re if m else 0.0
            coup_im = g_rad @ sm_im if m else 0.0
            dy[0] = beta_re - 0.5 * kappa * a_re + coup_im
            dy[1] = beta_im - 0.5 * kappa * a_im - coup_re
            gsz = g_rad * sz
            dy[2 : 2 + m] = -gamma_t * sm_re + delta * sm_im - gsz * a_im
            dy[2 + m : 2 + 2 * m] = -gamma_t * sm_im - delta * sm_re + gsz * a_re
            dy[2 + 2 * m :] = -gamma_par * (sz + n_m) - 4 * g_rad * (
                a_re * sm_im - a_im * sm_re
            )
            return dy

        return rhs

    dt = solver.sample_step_s
    total = sequence.duration_s
    n_samples = int(np.floor(total / dt + 1e-9)) + 1
    a_out = np.zeros(n_samples, dtype=complex)
    sz_out = np.zeros(n_samples)

    y = _pack(work)
    a_out[0] = complex(y[0], y[1])
    sz_out[0] = y[2 + 2 * m :].sum()
    checkpoints = [BlochCheckpoint(0.0, *work.bloch_totals())]

    t_cursor = 0.0
    filled = 0  # highest grid index already written
    for element in sequence.elements:
        if isinstance(element, IdealRotation):
            sm = y[2 : 2 + m] + 1j * y[2 + m : 2 + 2 * m]
            sm, sz_new = _rotate(
                sm, y[2 + 2 * m :], element.angle_rad, element.axis_phase_rad
            )
            y[2 : 2 + m] = sm.real
            y[2 + m : 2 + 2 * m] = sm.imag
            y[2 + 2 * m :] = sz_new
            _unpack_into(work, y, t_cursor)
            checkpoints.append(BlochCheckpoint(t_cursor, *work.bloch_totals()))
            continue

        t_end = t_cursor + element.duration_s
        k_lo = int(np.floor(t_cursor / dt + 1e-9)) + 1
        k_hi = min(int(np.floor(t_end / dt + 1e-9)), n_samples - 1)
        grid = dt * np.arange(k_lo, k_hi + 1)
        t_eval = np.clip(grid, t_cursor, t_end)
        extra_end = len(t_eval) == 0 or t_eval[-1] < t_end - 1e-15
        if extra_end:
            t_eval = np.append(t_eval, t_end)

        beta = element.amplitude * np.exp(1j * element.phase_rad)
        rhs = make_rhs(drive_coeff * beta.real, drive_coeff * beta.imag)
        res = solve_ivp(
            rhs,
            (t_cursor, t_end),
            y,
            method=solver.method,
            rtol=solver.rtol,
            atol=solver.atol,
            max_step=solver.max_step_s,
            t_eval=t_eval,
        )
        if not res.success:
            raise SolverFailureError(
                f"integrator failed: {res.message}",
                time_s=float(res.t[-1]) if len(res.t) else t_cursor,
            )
        if not np.all(np.isfinite(res.y[:, -1])):
            bad = np.argmax(~np.all(np.isfinite(res.y), axis=0))
            raise SolverFailureError(
                "non-finite state encountered", time_s=float(res.t[bad])
            )
        n_grid = len(t_eval) - (1 if extra_end else 0)
        if n_grid > 0:
            a_out[k_lo : k_lo + n_grid] = res.y[0, :n_grid] + 1j * res.y[1, :n_grid]
            sz_out[k_lo : k_lo + n_grid] = res.y[2 + 2 * m :, :n_grid].sum(axis=0)
            filled = k_lo + n_grid - 1
        y = res.y[:, -1].copy()
        t_cursor = t_end
        _unpack_into(work, y, t_cursor)
        checkpoints.append(BlochCheckpoint(t_cursor, *work.bloch_totals()))

    # Grid points past the last filled index (possible only through float
    # round-off at the sequence end) inherit the final state.
    if filled < n_samples - 1:
        a_out[filled + 1 :] = complex(y[0], y[1])
        sz_out[filled + 1 :] = y[2 + 2 * m :].sum()

    _unpack_into(work, y, t_cursor)
    trace = TimeTrace(t0_s=0.0, dt_s=dt, values=a_out, units="sqrt_photons")
    return IntegrationResult(
        trace=trace, sz_total=sz_out, final_state=work, checkpoints=checkpoints
    )


def analytic_sminus(polarization, n_spins, w_rad_s, t_s):
    """Collective <S_-(t)> of a Lorentzian line refocusing at t = 0.

    A perfectly refocused ensemble of polarisation p gives
    -i p N/2 exp(-w|t|/2) for a Lorentzian detuning distribution of FWHM w.
    """
    if w_rad_s <= 0:
        raise InvalidInputError("Lorentzian width must be positive")
    t = np.asarray(t_s, dtype=float)
    out = -0.5j * polarization * n_spins * np.exp(-w_rad_s * np.abs(t) / 2)
    return out if out.ndim else complex(out)


def analytic_echo(
    g_rad_s, polarization, n_spins, w_rad_s, kappa_per_s, t_s, limit_tol=1e-6
):
    """Closed-form cavity field <a(t)> of the echo at weak cooperativity.

    Echo centre at t = 0.  For t < 0 the field rises as exp(w t/2); for
    t > 0 it is a difference of exp(-w t/2) and exp(-kappa t/2) terms, with
    the degenerate kappa -> w limit (1 + w t) exp(-w t/2) used when the two
    rates agree to ``limit_tol`` relatively.
    """
    if w_rad_s <= 0 or kappa_per_s <= 0:
        raise InvalidInputError("rates must be positive")
    t = np.asarray(t_s, dtype=float)
    w, kappa = w_rad_s, kappa_per_s
    amp = -g_rad_s * polarization * n_spins / (kappa + w)
    out = np.empty(t.shape)
    neg = t < 0
    out[neg] = np.exp(w * t[neg] / 2)
    pos = ~neg
    if abs(kappa - w) < limit_tol * kappa:
        out[pos] = (1 + w * t[pos]) * np.exp(-w * t[pos] / 2)
    else:
        out[pos] = (kappa + w) / (kappa - w) * np.exp(-w * t[pos] / 2) - (
            2 * w / (kappa - w)
        ) * np.exp(-kappa * t[pos] / 2)
    out = amp * out
    return out if out.ndim else float(out)


def cooperativity(g_rad_s, n_spins, kappa_per_s, w_rad_s) -> float:
    """Ensemble cooperativity C = 4 g^2 N / (kappa w), all rates in rad/s."""
    if min(kappa_per_s, w_rad_s) <= 0 or n_spins < 0 or g_rad_s < 0:
        raise InvalidInputError("cooperativity arguments must be positive")
    return 4 * g_rad_s**2 * n_spins / (kappa_per_s * w_rad_s)


def hahn_windows(tau_s: float, echo_window_s: float, label: str = "echo"):
    """Acquisition window of duration ``echo_window_s`` centred on 2 tau."""
    return [
        AcquisitionWindow(
            2 * tau_s - echo_window_s / 2, 2 * tau_s + echo_window_s / 2, label
        )
    ]
