"""Named experiments wiring the physics modules end to end.

Each experiment takes a resolved :class:`~esrsim.config.RunConfig`, runs
the protocol, and writes plot-ready CSV/JSON files whose headers embed the
config hash, seed, and units.  Data outputs are bit-identical across
reruns with the same config and seed; only the manifest varies (it records
wall-clock time).
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig
from .detection import (
    MatchedFilter,
    amplify,
    cpmg_snr_gain,
    nmin,
    nmin_critical_coupling,
    snr_matched_filter,
    snr_vs_gain,
)
from .ensemble import (
    EnsembleState,
    cooperativity,
    discretize_ensemble,
    integrate,
)
from .errors import (
    ConfigError,
    CrossingNotFoundError,
    EsrSimError,
    InvalidInputError,
)
from .sequences import (
    build_sequence,
    calibrate_pi_amplitude,
    echo_area,
    field_sweep,
    fit_decay,
    integrate_phase_cycled,
)
from .spin_model import (
    build_hamiltonian,
    eigensystem,
    find_crossing_field,
    transition_table,
    transitions_to_csv,
)
from .units import drive_amplitude_dbm

TWO_PI = 2 * math.pi


@dataclass
class RunManifest:
    config_hash: str
    tool_version: str
    experiment: str
    seed: int
    wall_clock_s: float
    outputs: list[str]

    def to_dict(self) -> dict:
        return {
            "config_hash": self.config_hash,
            "tool_version": self.tool_version,
            "experiment": self.experiment,
            "seed": self.seed,
            "wall_clock_s": self.wall_clock_s,
            "outputs": self.outputs,
        }


def _meta(cfg: RunConfig, **extra) -> dict:
    meta = {"config_hash": cfg.config_hash(), "seed": cfg.seed}
    meta.update(extra)
    return meta


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_rows_csv(path, fieldnames, rows, meta):
    with open(path, "w") as fh:
        for key, value in meta.items():
            fh.write(f"# {key}={value}\n")
        fh.write(",".join(fieldnames) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(row[name]) for name in fieldnames) + "\n")


def read_rows_csv(path):
    """Round-trip reader for :func:`write_rows_csv` output."""
    meta, rows = {}, []
    with open(path) as fh:
        header = None
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                meta[key.strip()] = value
            elif header is None:
                header = line.split(",")
            elif line:
                values = []
                for text in line.split(","):
                    try:
                        num = float(text)
                        values.append(int(num) if num.is_integer() and "." not in text and "e" not in text.lower() else num)
                    except ValueError:
                        values.append(text)
                rows.append(dict(zip(header, values)))
    return meta, rows


def write_json(path, payload: dict):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


class _Setup:
    """Shared wiring: transition, coupling and frequency distributions."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.system = cfg.spin_system()
        self.cavity = cfg.cavity()
        self.lower, self.upper = cfg.coupling_transition()
        f0 = self.cavity.omega0_rad_s / TWO_PI
        try:
            self.b_cross_t, self.dfdb = find_crossing_field(
                self.lower, self.upper, f0, (1e-5, 10e-3), self.system
            )
        except CrossingNotFoundError as err:
            raise ConfigError(
                f"configured transition never crosses the cavity: {err}"
            ) from err
        levels = eigensystem(
            build_hamiltonian(self.b_cross_t, self.system), self.system
        )
        from .spin_model import _joint_operators

        sx_op = _joint_operators(self.system.electron_spin, self.system.nuclear_spin)[
            "sx"
        ]
        self.sx_element = float(
            abs(levels.state(self.lower).conj() @ sx_op @ levels.state(self.upper))
        )
        self.coupling = cfg.coupling_distribution(self.sx_element)
        self.freq = cfg.frequency_distribution()

    def subensembles(self, **kwargs):
        ens = self.cfg.data["ensemble"]
        return discretize_ensemble(
            self.coupling,
            self.freq,
            float(ens["n_spins_total"]),
            float(ens["repetition_rate_hz"]),
            float(ens["gamma_perp_per_s"]),
            self.cavity,
            **kwargs,
        )

    def state(self, **kwargs) -> EnsembleState:
        return EnsembleState.from_subensembles(self.subensembles(**kwargs))

    def sequence_kwargs(self) -> dict:
        seq = self.cfg.data["sequence"]
        kwargs = {
            "ideal": bool(seq["ideal_pulses"]),
            "echo_window_s": float(seq["echo_window_s"]),
            "repetition_rate_hz": float(self.cfg.data["ensemble"]["repetition_rate_hz"]),
        }
        if not kwargs["ideal"]:
            kwargs["pulse_amplitude"] = drive_amplitude_dbm(
                float(seq["pi_pulse_power_dbm"]), self.cavity.omega0_rad_s
            )
            kwargs["pi_duration_s"] = float(seq["pi_pulse_duration_s"])
        return kwargs

    @property
    def drive_scale(self) -> float:
        return float(self.cfg.data["ensemble"]["drive_power_scale"])


# -- experiments ---------------------------------------------------------


def experiment_transitions(cfg: RunConfig, out: Path) -> list[str]:
    system = cfg.spin_system()
    cavity = cfg.cavity()
    f0 = cavity.omega0_rad_s / TWO_PI
    probe = eigensystem(build_hamiltonian(5e-4, system), system)
    candidates = transition_table(probe, 5e-4, system)
    rows = []
    for tr in candidates:
        try:
            b_cross, _ = find_crossing_field(
                tr.lower, tr.upper, f0, (1e-5, 10e-3), system
            )
        except CrossingNotFoundError:
            continue
        levels = eigensystem(build_hamiltonian(b_cross, system), system)
        table = transition_table(levels, b_cross, system)
        match = [
            t for t in table if t.lower == tr.lower and t.upper == tr.upper
        ]
        if not match:
            continue
        t = match[0]
        rows.append(
            {
                "lowerF": t.lower[0],
                "lower_mF": t.lower[1],
                "upperF": t.upper[0],
                "upper_mF": t.upper[1],
                "freq_Hz": t.frequency_hz,
                "sx": t.sx_element,
                "dfdB_Hz_per_T": t.dfdb_hz_per_t,
                "crossing_field_T": b_cross,
            }
        )
    rows.sort(key=lambda r: r["crossing_field_T"])
    write_rows_csv(
        out / "crossings.csv",
        [
            "lowerF",
            "lower_mF",
            "upperF",
            "upper_mF",
            "crossing_field_T",
            "freq_Hz",
            "sx",
            "dfdB_Hz_per_T",
        ],
        rows,
        _meta(cfg, units="T;Hz;dimensionless;Hz_per_T"),
    )
    if rows:
        b_ref = rows[0]["crossing_field_T"]
        levels = eigensystem(build_hamiltonian(b_ref, system), system)
        transitions_to_csv(
            transition_table(levels, b_ref, system),
            out / "transitions.csv",
            header=_meta(cfg, field_T=repr(b_ref)),
        )
    return ["crossings.csv", "transitions.csv"] if rows else ["crossings.csv"]


def format_crossing_table(cfg: RunConfig) -> str:
    """Text table of cavity crossings for the CLI."""
    system = cfg.spin_system()
    cavity = cfg.cavity()
    f0 = cavity.omega0_rad_s / TWO_PI
    probe = eigensystem(build_hamiltonian(5e-4, system), system)
    lines = [
        f"cavity frequency: {f0 / 1e9:.5g} GHz",
        "transition              crossing field    df/dB         |<Sx>|",
    ]
    for tr in transition_table(probe, 5e-4, system):
        try:
            b_cross, dfdb = find_crossing_field(
                tr.lower, tr.upper, f0, (1e-5, 10e-3), system
            )
        except CrossingNotFoundError:
            continue
        levels = eigensystem(build_hamiltonian(b_cross, system), system)
        match = [
            t
            for t in transition_table(levels, b_cross, system)
            if t.lower == tr.lower and t.upper == tr.upper
        ]
        if not match:
            continue
        t = match[0]
        lines.append(
            f"{t.lower} -> {t.upper}   {b_cross * 1e3:7.3f} mT   "
            f"{t.dfdb_hz_per_t / 1e9:+8.2f} GHz/T   {t.sx_element:.3f}"
        )
    return "\n".join(lines)


def experiment_sensitivity(cfg: RunConfig, out: Path) -> list[str]:
    setup = _Setup(cfg)
    cavity = setup.cavity
    noise = cfg.noise_model()
    n_inf = noise.n_eq + noise.n_sp + (
        0.0 if noise.mode == "degenerate" else noise.n_amp
    )
    g_rad = TWO_PI * setup.coupling.mode_hz
    w_rad = TWO_PI * float(cfg.data["frequency"]["fwhm_hz"])
    kappa = cavity.kappa_per_s
    payload = {
        "config_hash": cfg.config_hash(),
        "seed": cfg.seed,
        "g_mode_hz": setup.coupling.mode_hz,
        "g_mean_hz": setup.coupling.mean_hz,
        "sx_element": setup.sx_element,
        "crossing_field_t": setup.b_cross_t,
        "noise_photons": n_inf,
        "kappa_per_s": kappa,
        "n_min": nmin_critical_coupling(g_rad, 1.0, kappa, n_inf, 1.0 / kappa),
        "n_min_exact": nmin(
            g_rad, 1.0, kappa, cavity.kappa2_per_s, w_rad, n_inf
        ),
        "units": {"n_min": "spins", "g": "Hz", "kappa": "1/s"},
    }
    write_json(out / "sensitivity.json", payload)
    return ["sensitivity.json"]


def _run_hahn_traces(setup: _Setup, cfg: RunConfig):
    seq_kwargs = setup.sequence_kwargs()
    tau = float(cfg.data["sequence"]["tau_s"])
    seq = build_sequence("hahn", tau_s=tau, **seq_kwargs)
    state = setup.state()
    combined, res_plus, _ = integrate_phase_cycled(
        state, seq, setup.cavity, cfg.solver(), setup.drive_scale
    )
    return seq, state, combined, res_plus


def experiment_hahn(cfg: RunConfig, out: Path) -> list[str]:
    setup = _Setup(cfg)
    seq, state, combined, res_plus = _run_hahn_traces(setup, cfg)
    cavity = setup.cavity
    window = seq.windows[0]
    obs = echo_area(combined, window)

    out_field = combined.scaled(
        math.sqrt(cavity.kappa2_per_s), units="sqrt_photons_per_s"
    )
    noise = cfg.noise_model()
    noisy = amplify(out_field, noise, cfg.seed)
    clean_window = out_field.window(window.t_start_s, window.t_end_s)
    noisy_window = noisy.window(window.t_start_s, window.t_end_s).scaled(
        1 / math.sqrt(noise.gain)
    )
    template = MatchedFilter.from_trace(clean_window)
    n_input = noise.input_referred_noise()[0]
    snr_expected = snr_matched_filter(clean_window, template, n_input)
    snr_measured = snr_matched_filter(noisy_window, template, n_input)

    ckpt = res_plus.checkpoints
    excited = 0.0
    for k in range(1, len(ckpt)):
        if ckpt[k].sz_total != ckpt[0].sz_total:
            excited = ckpt[k].sz_total - ckpt[0].sz_total
            break

    combined.to_csv(out / "hahn_cavity_trace.csv", header=_meta(cfg))
    noisy.to_csv(out / "hahn_noisy_trace.csv", header=_meta(cfg))
    write_json(
        out / "hahn_observables.json",
        {
            "config_hash": cfg.config_hash(),
            "seed": cfg.seed,
            "x_area": obs.x_area,
            "q_area": obs.q_area,
            "amp_area": obs.amp_area,
            "window_s": obs.window_s,
            "snr_expected": snr_expected,
            "snr_measured": snr_measured,
            "excited_spins": excited,
            "cooperativity": cooperativity(
                state.collective_coupling_rad_s(),
                1.0,
                cavity.kappa_per_s,
                TWO_PI * float(cfg.data["frequency"]["fwhm_hz"]),
            ),
            "units": {"areas": "sqrt_photons*s", "snr": "amplitude"},
        },
    )
    return ["hahn_cavity_trace.csv", "hahn_noisy_trace.csv", "hahn_observables.json"]


def experiment_rabi(cfg: RunConfig, out: Path) -> list[str]:
    setup = _Setup(cfg)
    seq_kwargs = setup.sequence_kwargs()
    tau = float(cfg.data["sequence"]["tau_s"])
    exp_cfg = cfg.data.get("rabi") or {}
    scales = np.linspace(
        0.0, float(exp_cfg.get("max_scale", 2.2)), int(exp_cfg.get("n_points", 23))
    )
    rows = []
    state = setup.state()
    solver = cfg.solver()
    for scale in scales:
        if scale == 0.0 and seq_kwargs["ideal"]:
            seq = build_sequence("rabi", tau_s=tau, refocus_scale=1e-12, **seq_kwargs)
        else:
            seq = build_sequence("rabi", tau_s=tau, refocus_scale=float(scale), **seq_kwargs)
        res = integrate(state, seq, setup.cavity, solver, setup.drive_scale)
        obs = echo_area(res.trace, seq.windows[0])
        rows.append(
            {
                "refocus_scale": float(scale),
                "amp_area": obs.amp_area,
                "x_area": obs.x_area,
                "q_area": obs.q_area,
            }
        )
    write_rows_csv(
        out / "rabi_sweep.csv",
        ["refocus_scale", "amp_area", "x_area", "q_area"],
        rows,
        _meta(cfg, units="dimensionless;sqrt_photons*s"),
    )
    outputs = ["rabi_sweep.csv"]
    if not seq_kwargs["ideal"]:
        calibrated = calibrate_pi_amplitude(
            state,
            setup.cavity,
            tau,
            seq_kwargs["pi_duration_s"],
            amplitude_hi=2.5 * seq_kwargs["pulse_amplitude"],
            solver=solver,
            drive_scale=setup.drive_scale,
        )
        write_json(
            out / "rabi_calibration.json",
            {
                "config_hash": cfg.config_hash(),
                "seed": cfg.seed,
                "pi_amplitude": calibrated,
                "pi_duration_s": seq_kwargs["pi_duration_s"],
                "units": {"pi_amplitude": "sqrt_photons_per_s"},
            },
        )
        outputs.append("rabi_calibration.json")
    return outputs


def _decay_experiment(cfg, out, kind):
    setup = _Setup(cfg)
    seq_kwargs = setup.sequence_kwargs()
    solver = cfg.solver()
    exp_cfg = cfg.data.get(kind) or {}
    rows = []
    if kind == "t2":
        taus = exp_cfg.get("tau_list_s") or np.geomspace(1e-3, 16e-3, 7).tolist()
        for tau in taus:
            seq = build_sequence("hahn", tau_s=float(tau), **seq_kwargs)
            res = integrate(setup.state(), seq, setup.cavity, solver, setup.drive_scale)
            obs = echo_area(res.trace, seq.windows[0])
            rows.append({"t_s": 2 * float(tau), "value": obs.amp_area})
        label = "t2"
    else:
        tau = float(cfg.data["sequence"]["tau_s"])
        waits = exp_cfg.get("wait_list_s") or np.geomspace(0.02, 1.2, 8).tolist()
        for wait in waits:
            seq = build_sequence(
                "inversion_recovery", wait_s=float(wait), tau_s=tau, **seq_kwargs
            )
            res = integrate(setup.state(), seq, setup.cavity, solver, setup.drive_scale)
            obs = echo_area(res.trace, seq.windows[0])
            rows.append({"t_s": float(wait), "value": obs.x_area})
        label = "t1"
    fit = fit_decay([r["t_s"] for r in rows], [r["value"] for r in rows])
    write_rows_csv(
        out / f"{label}_decay.csv",
        ["t_s", "value"],
        rows,
        _meta(cfg, units="s;sqrt_photons*s"),
    )
    write_json(
        out / f"{label}_fit.json",
        {
            "config_hash": cfg.config_hash(),
            "seed": cfg.seed,
            "amplitude": fit.amplitude,
            "time_constant_s": fit.time_constant_s,
            "offset": fit.offset,
            "stderr": list(fit.stderr),
            "units": {"time_constant_s": "s"},
        },
    )
    return [f"{label}_decay.csv", f"{label}_fit.json"]


def experiment_t2(cfg: RunConfig, out: Path) -> list[str]:
    return _decay_experiment(cfg, out, "t2")


def experiment_t1(cfg: RunConfig, out: Path) -> list[str]:
    return _decay_experiment(cfg, out, "t1")


def experiment_cpmg(cfg: RunConfig, out: Path) -> list[str]:
    setup = _Setup(cfg)
    seq_kwargs = setup.sequence_kwargs()
    seq_cfg = cfg.data["sequence"]
    tau = float(seq_cfg["tau_s"])
    m = int(seq_cfg["n_echoes"])
    seq = build_sequence("cpmg", tau_s=tau, n_echoes=m, **seq_kwargs)
    res = integrate(setup.state(), seq, setup.cavity, cfg.solver(), setup.drive_scale)

    period = 2 * tau
    rows = []
    energies = np.empty(m)
    for k, window in enumerate(seq.windows):
        sub = res.trace.window(window.t_start_s, window.t_end_s)
        obs = echo_area(res.trace, window)
        energies[k] = float(np.sum(sub.i**2) * sub.dt_s)
        rows.append(
            {
                "echo_index": k + 1,
                "t_s": window.center_s,
                "amp_area": obs.amp_area,
                "x_area": obs.x_area,
            }
        )
    fit = fit_decay(
        [r["t_s"] for r in rows], [r["amp_area"] for r in rows]
    )
    gain_sim = np.sqrt(np.cumsum(energies) / energies[0])
    m_axis = np.arange(1, m + 1)
    gain_formula, valid = cpmg_snr_gain(m_axis, period, fit.time_constant_s)

    write_rows_csv(
        out / "cpmg_echoes.csv",
        ["echo_index", "t_s", "amp_area", "x_area"],
        rows,
        _meta(cfg, units="index;s;sqrt_photons*s"),
    )
    write_rows_csv(
        out / "cpmg_gain.csv",
        ["m", "gain_simulated", "gain_formula"],
        [
            {
                "m": int(mm),
                "gain_simulated": float(gs),
                "gain_formula": float(gf),
            }
            for mm, gs, gf in zip(m_axis, gain_sim, gain_formula)
        ],
        _meta(cfg, units="count;amplitude_ratio"),
    )
    write_json(
        out / "cpmg_observables.json",
        {
            "config_hash": cfg.config_hash(),
            "seed": cfg.seed,
            "n_echoes": m,
            "period_s": period,
            "t_cpmg_s": fit.time_constant_s,
            "t_cpmg_stderr_s": fit.stderr[1],
            "snr_gain_final": float(gain_sim[-1]),
            "snr_gain_formula_final": float(gain_formula[-1]),
            "formula_valid": valid,
            "units": {"t_cpmg_s": "s"},
        },
    )
    return ["cpmg_echoes.csv", "cpmg_gain.csv", "cpmg_observables.json"]


def experiment_absorption(cfg: RunConfig, out: Path) -> list[str]:
    setup = _Setup(cfg)
    exp_cfg = cfg.data.get("absorption") or {}
    power_dbm = float(exp_cfg.get("probe_power_dbm", -95.0))
    amplitude = drive_amplitude_dbm(power_dbm, setup.cavity.omega0_rad_s)
    seq = build_sequence(
        "absorption",
        probe_amplitude=amplitude,
        probe_duration_s=float(exp_cfg.get("probe_duration_s", 500e-6)),
        saturation_scale=float(exp_cfg.get("saturation_scale", 10.0)),
        saturation_duration_s=float(exp_cfg.get("saturation_duration_s", 50e-6)),
    )
    res = integrate(setup.state(), seq, setup.cavity, cfg.solver(), setup.drive_scale)
    res.trace.to_csv(out / "absorption_trace.csv", header=_meta(cfg))
    first = res.trace.window(seq.windows[0].t_start_s, seq.windows[0].t_end_s)
    second = res.trace.window(seq.windows[1].t_start_s, seq.windows[1].t_end_s)
    n = min(first.n_samples, second.n_samples)
    write_json(
        out / "absorption_observables.json",
        {
            "config_hash": cfg.config_hash(),
            "seed": cfg.seed,
            "probe_amplitude": amplitude,
            "absorbed_area": float(
                np.sum(second.amplitude[:n] - first.amplitude[:n]) * first.dt_s
            ),
            "units": {"absorbed_area": "sqrt_photons*s"},
        },
    )
    return ["absorption_trace.csv", "absorption_observables.json"]


def experiment_spectrum(cfg: RunConfig, out: Path) -> list[str]:
    setup = _Setup(cfg)
    exp_cfg = cfg.data.get("spectrum") or {}
    if exp_cfg.get("b_list_t"):
        b_values = [float(b) for b in exp_cfg["b_list_t"]]
    else:
        b_values = np.linspace(
            float(exp_cfg.get("b_min_t", 4.9e-3)),
            float(exp_cfg.get("b_max_t", 7.0e-3)),
            int(exp_cfg.get("n_points", 43)),
        ).tolist()
    pairs_cfg = exp_cfg.get("transitions") or [
        [[4, -4], [5, -5]],
        [[4, -3], [5, -4]],
    ]
    pairs = [(tuple(lo), tuple(up)) for lo, up in pairs_cfg]
    ens = cfg.data["ensemble"]
    rows = field_sweep(
        b_values,
        setup.system,
        pairs,
        setup.cavity,
        setup.coupling,
        setup.freq,
        float(ens["n_spins_total"]),
        float(ens["gamma_perp_per_s"]),
        float(ens["repetition_rate_hz"]),
        tau_s=float(exp_cfg.get("tau_s", 5e-5)),
        echo_window_s=float(cfg.data["sequence"]["echo_window_s"]),
        solver=cfg.solver(),
        reference_sx=setup.sx_element,
    )
    write_rows_csv(
        out / "spectrum.csv",
        ["b_t", "amp_area", "x_area", "q_area"],
        rows,
        _meta(cfg, units="T;sqrt_photons*s"),
    )
    return ["spectrum.csv"]


def experiment_snr_vs_gain(cfg: RunConfig, out: Path) -> list[str]:
    noise = cfg.noise_model()
    gains_db = np.linspace(0.0, 30.0, 31)
    gains = 10 ** (gains_db / 10)
    n = noise.n_eq + noise.n_amp + noise.n_sp if noise.mode != "off" else 1.0
    curve = snr_vs_gain(gains, n, noise.n_syst)
    write_rows_csv(
        out / "snr_vs_gain.csv",
        ["gain_db", "gain", "snr_normalized"],
        [
            {"gain_db": float(gdb), "gain": float(g), "snr_normalized": float(v)}
            for gdb, g, v in zip(gains_db, gains, curve)
        ],
        _meta(cfg, units="dB;linear;ratio"),
    )
    write_json(
        out / "snr_vs_gain.json",
        {
            "config_hash": cfg.config_hash(),
            "seed": cfg.seed,
            "n": n,
            "n_syst": noise.n_syst,
            "improvement_high_gain": float(math.sqrt(noise.n_syst / n)),
        },
    )
    return ["snr_vs_gain.csv", "snr_vs_gain.json"]


EXPERIMENTS = {
    "transitions": experiment_transitions,
    "sensitivity": experiment_sensitivity,
    "hahn": experiment_hahn,
    "rabi": experiment_rabi,
    "t1": experiment_t1,
    "t2": experiment_t2,
    "cpmg": experiment_cpmg,
    "absorption": experiment_absorption,
    "spectrum": experiment_spectrum,
    "snr_vs_gain": experiment_snr_vs_gain,
}


def run_experiment(cfg: RunConfig, experiment: str, out_dir) -> RunManifest:
    """Execute one named experiment and write its outputs plus a manifest."""
    if experiment not in EXPERIMENTS:
        raise InvalidInputError(
            f"unknown experiment {experiment!r}; choose from {sorted(EXPERIMENTS)}"
        )
    resolved = cfg.for_experiment(experiment)
    problems = resolved.validate()
    if problems:
        raise ConfigError("; ".join(problems))
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    started = time.perf_counter()
    outputs = EXPERIMENTS[experiment](resolved, out)
    manifest = RunManifest(
        config_hash=resolved.config_hash(),
        tool_version=__version__,
        experiment=experiment,
        seed=resolved.seed,
        wall_clock_s=time.perf_counter() - started,
        outputs=outputs,
    )
    write_json(out / "manifest.json", manifest.to_dict())
    for name in outputs:
        if not (out / name).exists():
            raise EsrSimError(f"experiment output {name} was not written")
    return manifest
