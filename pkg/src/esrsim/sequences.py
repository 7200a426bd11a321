"""Experiment protocols and trace reductions.

Builders assemble the standard pulsed-ESR protocols (Hahn echo, CPMG,
inversion recovery, Rabi, absorption) either with ideal instantaneous
rotations or with rectangular drive pulses through the cavity.  Reductions
turn raw traces into observables: quadrature/amplitude echo areas,
exponential decay fits, and field-swept spectra.

Timing convention for driven pulses: delays are measured centre to centre,
the pi/2 pulse has half the duration of the pi pulse at equal amplitude,
and the echo window is centred at twice the pi/2-to-pi delay.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import curve_fit

from .ensemble import (
    CavityParams,
    EnsembleState,
    IntegrationResult,
    SolverConfig,
    discretize_ensemble,
    integrate,
)
from .errors import FitFailureError, InvalidInputError
from .pulses import AcquisitionWindow, DriveSegment, IdealRotation, PulseSequence
from .spin_model import SpinSystem, build_hamiltonian, eigensystem
from .trace import TimeTrace

PI = math.pi


@dataclass
class EchoObservables:
    """Echo areas over one acquisition window.

    ``x_area``/``q_area`` integrate the I/Q quadratures, ``amp_area`` the
    modulus; all by the rectangle rule, in (trace units) * s.
    """

    x_area: float
    q_area: float
    amp_area: float
    window_s: float


def _pulse_pair(ideal: bool, amplitude: float, pi_duration_s: float, phase: float):
    """Excitation (pi/2) and refocusing (pi) elements for both pulse styles."""
    if ideal:
        return (
            IdealRotation(PI / 2, 0.0),
            IdealRotation(PI, PI / 2 + phase),
        )
    return (
        DriveSegment(pi_duration_s / 2, amplitude, 0.0),
        DriveSegment(pi_duration_s, amplitude, -PI / 2 + phase),
    )


def build_sequence(kind: str, **params) -> PulseSequence:
    """Construct a named protocol as a :class:`PulseSequence`.

    Kinds and their parameters (defaults in brackets):

    * ``hahn``: ``tau_s``; pi/2 - tau - pi - tau - acquire.
    * ``cpmg``: ``tau_s``, ``n_echoes``; a Hahn block followed by
      ``n_echoes - 1`` further pi pulses about the echo axis, spaced
      2 tau, with an acquisition window after every pi pulse.
    * ``inversion_recovery``: ``wait_s``, ``tau_s``; pi - wait - Hahn.
    * ``rabi``: ``tau_s``, ``refocus_scale``; Hahn with the refocusing
      amplitude (ideal: rotation angle) scaled by ``refocus_scale``.
    * ``absorption``: ``probe_duration_s`` [500e-6], ``probe_amplitude``,
      ``saturation_scale`` [10], ``saturation_duration_s`` [50e-6]; probe,
      saturating pulse, probe, with windows on both probes.

    Common parameters: ``ideal`` [True] to use instantaneous rotations;
    ``pulse_amplitude`` and ``pi_duration_s`` for driven pulses;
    ``echo_window_s`` [20e-6]; ``repetition_rate_hz`` [1.0].
    """
    known = {
        "hahn": _build_hahn,
        "cpmg": _build_cpmg,
        "inversion_recovery": _build_inversion_recovery,
        "rabi": _build_rabi,
        "absorption": _build_absorption,
    }
    if kind not in known:
        raise InvalidInputError(f"unknown sequence kind {kind!r}")
    return known[kind](**params)


def _common(params):
    return (
        params.pop("ideal", True),
        params.pop("pulse_amplitude", 0.0),
        params.pop("pi_duration_s", 0.0),
        params.pop("echo_window_s", 20e-6),
        params.pop("repetition_rate_hz", 1.0),
    )


def _check_tau(tau_s, ideal, pi_duration_s):
    if tau_s <= 0:
        raise InvalidInputError("tau must be positive")
    if not ideal and tau_s <= pi_duration_s:
        raise InvalidInputError("tau must exceed the pulse duration")
    if not ideal and pi_duration_s <= 0:
        raise InvalidInputError("driven pulses need a positive duration")


def _build_hahn(
    tau_s: float,
    refocus_scale: float = 1.0,
    tail_s: Optional[float] = None,
    **params,
) -> PulseSequence:
    ideal, amp, t_pi, t_win, rep = _common(params)
    _check_tau(tau_s, ideal, t_pi)
    tail = t_win if tail_s is None else tail_s
    exc, ref = _pulse_pair(ideal, amp, t_pi, 0.0)
    elements = []
    if ideal:
        if refocus_scale != 1.0:
            ref = IdealRotation(PI * refocus_scale, ref.axis_phase_rad)
        elements += [exc, DriveSegment(tau_s), ref]
        echo_center = 2 * tau_s
        elements.append(DriveSegment(tau_s + tail))
    else:
        if refocus_scale != 1.0:
            ref = DriveSegment(ref.duration_s, amp * refocus_scale, ref.phase_rad)
        # centre-to-centre delay tau: pi/2 spans [0, t_pi/2],
        # pi spans [tau + t_pi/4 - t_pi/2, tau + t_pi/4 + t_pi/2].
        gap1 = tau_s - t_pi / 4 - t_pi / 2
        if gap1 <= 0:
            raise InvalidInputError("tau too short for the pulse durations")
        elements += [exc, DriveSegment(gap1), ref]
        echo_center = t_pi / 4 + 2 * tau_s
        elements.append(DriveSegment(echo_center - (tau_s + t_pi / 4 + t_pi / 2) + tail))
    windows = [
        AcquisitionWindow(echo_center - t_win / 2, echo_center + t_win / 2, "echo")
    ]
    return PulseSequence(elements=elements, windows=windows, repetition_rate_hz=rep)


def _build_cpmg(tau_s: float, n_echoes: int, **params) -> PulseSequence:
    if n_echoes < 1 or int(n_echoes) != n_echoes:
        raise InvalidInputError("n_echoes must be a positive integer")
    n_echoes = int(n_echoes)
    if n_echoes == 1:
        return _build_hahn(tau_s, **params)
    ideal, amp, t_pi, t_win, rep = _common(params)
    _check_tau(tau_s, ideal, t_pi)
    if 2 * tau_s <= t_win:
        raise InvalidInputError("echo window does not fit between pi pulses")
    exc, ref = _pulse_pair(ideal, amp, t_pi, 0.0)
    if not ideal and 2 * tau_s <= t_pi:
        raise InvalidInputError("pi pulses overlap at this tau")

    elements = [exc]
    windows = []
    # Element timing keeps every pi-pulse centre at (2k+1) tau and echo k
    # at 2 k tau (plus t_pi/4 start offset for driven pulses).
    offset = 0.0 if ideal else t_pi / 4
    t_cursor = 0.0 if ideal else t_pi / 2
    for k in range(1, n_echoes + 1):
        pi_center = offset + (2 * k - 1) * tau_s
        pi_start = pi_center if ideal else pi_center - t_pi / 2
        elements.append(DriveSegment(pi_start - t_cursor))
        elements.append(ref)
        t_cursor = pi_start if ideal else pi_start + t_pi
        echo_center = offset + 2 * k * tau_s
        windows.append(
            AcquisitionWindow(
                echo_center - t_win / 2, echo_center + t_win / 2, f"echo{k}"
            )
        )
    elements.append(DriveSegment(windows[-1].t_end_s - t_cursor + t_win))
    return PulseSequence(elements=elements, windows=windows, repetition_rate_hz=rep)


def _build_inversion_recovery(wait_s: float, tau_s: float, **params) -> PulseSequence:
    if wait_s <= 0:
        raise InvalidInputError("wait must be positive")
    ideal, amp, t_pi, t_win, rep = _common(params)
    readout = _build_hahn(
        tau_s,
        ideal=ideal,
        pulse_amplitude=amp,
        pi_duration_s=t_pi,
        echo_window_s=t_win,
        repetition_rate_hz=rep,
    )
    if ideal:
        head = [IdealRotation(PI, 0.0), DriveSegment(wait_s)]
        shift = wait_s
    else:
        head = [DriveSegment(t_pi, amp, 0.0), DriveSegment(wait_s)]
        shift = t_pi + wait_s
    windows = [
        AcquisitionWindow(w.t_start_s + shift, w.t_end_s + shift, w.label)
        for w in readout.windows
    ]
    return PulseSequence(
        elements=head + list(readout.elements), windows=windows, repetition_rate_hz=rep
    )


def _build_rabi(tau_s: float, refocus_scale: float, **params) -> PulseSequence:
    if refocus_scale < 0:
        raise InvalidInputError("refocusing scale must be non-negative")
    return _build_hahn(tau_s, refocus_scale=refocus_scale, **params)


def _build_absorption(
    probe_amplitude: float,
    probe_duration_s: float = 500e-6,
    saturation_scale: float = 10.0,
    saturation_duration_s: float = 50e-6,
    **params,
) -> PulseSequence:
    _, _, _, _, rep = _common(params)
    if probe_duration_s <= 0 or saturation_duration_s <= 0:
        raise InvalidInputError("durations must be positive")
    t1 = probe_duration_s
    t2 = t1 + saturation_duration_s
    elements = [
        DriveSegment(probe_duration_s, probe_amplitude, 0.0),
        DriveSegment(saturation_duration_s, probe_amplitude * saturation_scale, 0.0),
        DriveSegment(probe_duration_s, probe_amplitude, 0.0),
    ]
    windows = [
        AcquisitionWindow(0.0, t1, "probe1"),
        AcquisitionWindow(t2, t2 + probe_duration_s, "probe2"),
    ]
    return PulseSequence(elements=elements, windows=windows, repetition_rate_hz=rep)


def integrate_phase_cycled(
    state: EnsembleState,
    sequence: PulseSequence,
    cavity: CavityParams,
    solver: SolverConfig = SolverConfig(),
    drive_scale: float = 1.0,
) -> tuple[TimeTrace, IntegrationResult, IntegrationResult]:
    """Run a sequence twice with opposite excitation phase and subtract.

    Returns the half-difference trace (offsets cancel exactly, signal is
    preserved) together with both raw integration results.
    """
    res_plus = integrate(state, sequence, cavity, solver, drive_scale)
    res_minus = integrate(
        state, sequence.inverted_excitation(), cavity, solver, drive_scale
    )
    combined = (res_plus.trace - res_minus.trace).scaled(0.5)
    return combined, res_plus, res_minus


def echo_area(trace: TimeTrace, window: AcquisitionWindow) -> EchoObservables:
    """Quadrature and amplitude areas over one acquisition window."""
    sub = trace.window(window.t_start_s, window.t_end_s)
    dt = sub.dt_s
    return EchoObservables(
        x_area=float(np.sum(sub.i) * dt),
        q_area=float(np.sum(sub.q) * dt),
        amp_area=float(np.sum(sub.amplitude) * dt),
        window_s=window.duration_s,
    )


@dataclass
class DecayFit:
    """Single-exponential fit a exp(-t/T) + c with 1-sigma parameter errors."""

    amplitude: float
    time_constant_s: float
    offset: float
    stderr: tuple[float, float, float]


def fit_decay(times_s, values, model: str = "single-exponential") -> DecayFit:
    """Least-squares fit of a single-exponential decay to (t, y) points.

    Requires at least four strictly time-ordered points.  Raises
    :class:`FitFailureError` (carrying the residuals of the failed attempt)
    when the optimiser does not converge.
    """
    if model != "single-exponential":
        raise InvalidInputError(f"unsupported decay model {model!r}")
    t = np.asarray(times_s, dtype=float)
    y = np.asarray(values, dtype=float)
    if len(t) < 4:
        raise InvalidInputError("need at least four points to fit a decay")
    if np.any(np.diff(t) <= 0):
        raise InvalidInputError("times must be strictly increasing")

    c0 = y[-1]
    a0 = y[0] - c0
    if a0 == 0:
        a0 = max(np.ptp(y), 1e-30)
    # Initial time constant from the first 1/e crossing of |y - c0|.
    target = abs(a0) / math.e
    below = np.nonzero(np.abs(y - c0) < target)[0]
    t0_guess = t[below[0]] - t[0] if len(below) else (t[-1] - t[0]) / 3
    t0_guess = max(t0_guess, (t[1] - t[0]) / 10)

    def model_fn(tt, a, tc, c):
        return a * np.exp(-tt / tc) + c

    try:
        popt, pcov = curve_fit(
            model_fn,
            t,
            y,
            p0=(a0, t0_guess, c0),
            maxfev=20000,
        )
    except RuntimeError as err:
        residuals = y - model_fn(t, a0, t0_guess, c0)
        raise FitFailureError(f"decay fit did not converge: {err}", residuals) from err
    stderr = tuple(float(np.sqrt(max(v, 0.0))) for v in np.diag(pcov))
    return DecayFit(
        amplitude=float(popt[0]),
        time_constant_s=float(popt[1]),
        offset=float(popt[2]),
        stderr=stderr,
    )


def calibrate_pi_amplitude(
    state: EnsembleState,
    cavity: CavityParams,
    tau_s: float,
    pi_duration_s: float,
    amplitude_hi: float,
    solver: SolverConfig = SolverConfig(),
    n_scan: int = 9,
    tol: float = 1e-3,
    drive_scale: float = 1.0,
) -> float:
    """Pulse amplitude giving the first echo-area maximum.

    Scans echo area versus pulse amplitude up to ``amplitude_hi`` (the
    pi/2 pulse tracks the pi pulse at half duration), brackets the first
    local maximum, then refines it by golden-section search to relative
    tolerance ``tol``.  The result calibrates a pi rotation for the given
    pulse duration.
    """

    def area(amp_pi):
        seq = build_sequence(
            "hahn",
            tau_s=tau_s,
            ideal=False,
            pulse_amplitude=amp_pi,
            pi_duration_s=pi_duration_s,
        )
        res = integrate(state, seq, cavity, solver, drive_scale)
        return echo_area(res.trace, seq.windows[0]).amp_area

    amps = np.linspace(0.0, amplitude_hi, n_scan)
    values = [0.0] + [area(a) for a in amps[1:]]
    peak = None
    for k in range(1, n_scan - 1):
        if values[k] >= values[k - 1] and values[k] >= values[k + 1]:
            peak = k
            break
    if peak is None:
        peak = int(np.argmax(values))
        if peak in (0, n_scan - 1):
            raise InvalidInputError(
                "no echo-area maximum inside the amplitude bracket"
            )
    lo, hi = amps[peak - 1], amps[peak + 1]
    phi = (math.sqrt(5) - 1) / 2
    x1 = hi - phi * (hi - lo)
    x2 = lo + phi * (hi - lo)
    f1, f2 = area(x1), area(x2)
    while (hi - lo) > tol * amplitude_hi:
        if f1 < f2:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + phi * (hi - lo)
            f2 = area(x2)
        else:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - phi * (hi - lo)
            f1 = area(x1)
    return float(0.5 * (lo + hi))


def field_sweep(
    b_values_t: Sequence[float],
    spin_system: SpinSystem,
    transition_labels: Sequence[tuple[tuple[int, int], tuple[int, int]]],
    cavity: CavityParams,
    coupling,
    freq_dist,
    n_spins_total: float,
    gamma_perp_per_s: float,
    repetition_rate_hz: float,
    tau_s: float = 50e-6,
    echo_window_s: float = 20e-6,
    solver: SolverConfig = SolverConfig(),
    reference_sx: float = 0.47,
    detuning_cutoff_hz: float = 1.5e6,
) -> list[dict]:
    """Echo area versus static field (Hahn echo with ideal pulses).

    For every field value the labelled transitions are re-evaluated from
    the spin model; each transition within ``detuning_cutoff_hz`` of the
    cavity (plus the width of the frequency grid) contributes sub-ensembles
    centred at its detuning, with couplings rescaled by its matrix element
    relative to ``reference_sx``.  Transitions detuned further contribute
    nothing detectable and are skipped.

    Returns one dict per field value with keys ``b_t``, ``amp_area``,
    ``x_area``, ``q_area``.
    """
    f_cavity_hz = cavity.omega0_rad_s / (2 * PI)
    grid_half_span = (
        max(abs(freq_dist.offsets_hz[0]), abs(freq_dist.offsets_hz[-1]))
        if freq_dist.n
        else 0.0
    )
    seq = build_sequence("hahn", tau_s=tau_s, ideal=True, echo_window_s=echo_window_s)
    rows = []
    for b in b_values_t:
        levels = eigensystem(build_hamiltonian(float(b), spin_system), spin_system)
        subs = []
        for lower, upper in transition_labels:
            offset_hz = levels.transition_frequency_hz(lower, upper) - f_cavity_hz
            if abs(offset_hz) > detuning_cutoff_hz + grid_half_span:
                continue
            sx = abs(
                levels.state(lower).conj()
                @ _sx_operator(spin_system)
                @ levels.state(upper)
            )
            scaled = _scaled_coupling(coupling, sx / reference_sx)
            subs.extend(
                discretize_ensemble(
                    scaled,
                    freq_dist,
                    n_spins_total,
                    repetition_rate_hz,
                    gamma_perp_per_s,
                    cavity,
                    center_offset_hz=offset_hz,
                )
            )
        if subs:
            state = EnsembleState.from_subensembles(subs)
            res = integrate(state, seq, cavity, solver)
            obs = echo_area(res.trace, seq.windows[0])
        else:
            obs = EchoObservables(0.0, 0.0, 0.0, echo_window_s)
        rows.append(
            {
                "b_t": float(b),
                "amp_area": obs.amp_area,
                "x_area": obs.x_area,
                "q_area": obs.q_area,
            }
        )
    return rows


def _sx_operator(system: SpinSystem):
    from .spin_model import _joint_operators

    return _joint_operators(system.electron_spin, system.nuclear_spin)["sx"]


def _scaled_coupling(coupling, factor: float):
    from .field_geometry import CouplingDistribution

    return CouplingDistribution(
        g_hz=coupling.g_hz * factor, weight=coupling.weight.copy()
    )
