"""Run configuration: layered YAML with SI-unit-suffixed keys.

Keys carry their units explicitly (``kappa1_per_s``, ``tau_s``,
``pi_pulse_power_dbm``) because the quantities involved mix Hz, rad/s,
seconds and dBm.  The ``experiments`` section holds per-experiment
overrides deep-merged over the base sections, so one file can hold both
the physics defaults and the knobs of every protocol.
"""

from __future__ import annotations

import copy
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np
import yaml

from .detection import NoiseModel
from .distributions import FrequencyDistribution
from .ensemble import CavityParams, SolverConfig
from .errors import ConfigError, EsrSimError
from .field_geometry import (
    CouplingDistribution,
    ImplantationProfile,
    StripGeometry,
    coupling_distribution,
)
from .spin_model import SpinSystem

_TWO_PI = 2 * math.pi

DEFAULTS: dict[str, Any] = {
    "spin": {
        "gamma_e_hz_per_t": 28e9,
        "gamma_n_hz_per_t": 7e6,
        "hyperfine_hz": 1.4739539e9,
        "electron_spin": 0.5,
        "nuclear_spin": 4.5,
    },
    "cavity": {
        "frequency_hz": 7.24e9,
        # Antenna couplings with the internal loss chosen to reproduce the
        # loaded quality factor below.
        "kappa1_per_s": 1.2e4,
        "kappa2_per_s": 5.6e4,
        "kappa_loss_per_s": 8.363e4,
        "quality_factor": 3e5,
    },
    "geometry": {
        "strip_width_m": 5e-6,
        "film_thickness_m": 50e-9,
        "penetration_depth_m": 90e-9,
        "impedance_ohm": 44.0,
    },
    "coupling": {
        "x_min_m": -2.5e-6,
        "x_max_m": 2.5e-6,
        "theta_deg": 0.0,
        "n_bins": 50,
        "profile_csv": None,
        "transition_lower": [4, -4],
        "transition_upper": [5, -5],
        # Overrides the computed distribution with a single coupling value
        # when set; useful for quick runs and idealised scenarios.
        "fixed_g_hz": None,
    },
    "frequency": {
        "kind": "tilted-square",
        "n_bins": 450,
        "bin_spacing_hz": 1e3,
        "fwhm_hz": 25e3,
        "tilt": 0.10,
        "peak_splitting_hz": 2e6,
        "sampling": "uniform",
        "coverage": 0.98,
    },
    "ensemble": {
        "n_spins_total": 2e5,
        "gamma_perp_per_s": 112.36,  # 1 / (8.9 ms)
        "repetition_rate_hz": 1.0,
        "drive_power_scale": 1.1,
    },
    "sequence": {
        "tau_s": 2e-4,
        "echo_window_s": 20e-6,
        "ideal_pulses": True,
        "pi_pulse_power_dbm": -85.0,
        "pi_pulse_duration_s": 5e-6,
        "n_echoes": 650,
        "wait_s": 0.1,
    },
    "noise": {
        "mode": "degenerate",
        "gain_db": 23.0,
        "n_eq": 0.5,
        "n_amp": None,
        "n_sp": 0.0,
        "n_syst": 36.0,
    },
    "solver": {
        "rtol": 1e-8,
        "atol": 1e-10,
        "method": "DOP853",
        "max_step_s": None,
        "sample_step_s": 5e-7,
    },
    "rabi": {
        "max_scale": 2.2,
        "n_points": 23,
    },
    "t1": {
        "wait_list_s": None,
    },
    "t2": {
        "tau_list_s": None,
    },
    "absorption": {
        "probe_power_dbm": -95.0,
        "probe_duration_s": 500e-6,
        "saturation_scale": 10.0,
        "saturation_duration_s": 50e-6,
    },
    "spectrum": {
        "b_min_t": 4.9e-3,
        "b_max_t": 7.0e-3,
        "n_points": 43,
        "b_list_t": None,
        "tau_s": 5e-5,
        "transitions": None,
    },
    "seed": 20160923,
    "output_dir": "runs",
    "threads": None,
    "experiments": {},
}


def _deep_merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _deep_merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def _parse_scalar(text: str):
    return yaml.safe_load(text)


@dataclass
class RunConfig:
    """Fully resolved configuration tree plus typed builders."""

    data: dict = field(default_factory=lambda: copy.deepcopy(DEFAULTS))
    source: Optional[str] = None

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        path = Path(path)
        try:
            raw = yaml.safe_load(path.read_text()) or {}
        except yaml.YAMLError as err:
            mark = getattr(err, "problem_mark", None)
            where = f" at line {mark.line + 1}" if mark else ""
            raise ConfigError(f"cannot parse {path}{where}: {err}") from err
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}: top level must be a mapping")
        unknown = set(raw) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"{path}: unknown top-level keys {sorted(unknown)}")
        return cls(data=_deep_merge(DEFAULTS, raw), source=str(path))

    def with_overrides(self, assignments: dict[str, Any]) -> "RunConfig":
        """Apply dotted-path overrides, e.g. ``{"sequence.tau_s": "1e-3"}``."""
        data = copy.deepcopy(self.data)
        for dotted, value in assignments.items():
            node = data
            parts = dotted.split(".")
            for part in parts[:-1]:
                if part not in node or not isinstance(node[part], dict):
                    node[part] = {}
                node = node[part]
            node[parts[-1]] = (
                _parse_scalar(value) if isinstance(value, str) else value
            )
        return RunConfig(data=data, source=self.source)

    def for_experiment(self, name: str) -> "RunConfig":
        """Config with the experiment's override section merged in."""
        overrides = self.data.get("experiments") or {}
        section = overrides.get(name) or {}
        merged = _deep_merge(self.data, section)
        merged["experiments"] = {}
        return RunConfig(data=merged, source=self.source)

    # -- typed builders -------------------------------------------------

    @property
    def seed(self) -> int:
        return int(self.data["seed"])

    @property
    def output_dir(self) -> str:
        return str(self.data["output_dir"])

    def config_hash(self) -> str:
        canonical = json.dumps(self.data, sort_keys=True, default=str)
        return hashlib.sha256(canonical.encode()).hexdigest()[:16]

    def spin_system(self) -> SpinSystem:
        s = self.data["spin"]
        return SpinSystem(
            gamma_e_hz_per_t=float(s["gamma_e_hz_per_t"]),
            gamma_n_hz_per_t=float(s["gamma_n_hz_per_t"]),
            hyperfine_hz=float(s["hyperfine_hz"]),
            electron_spin=float(s["electron_spin"]),
            nuclear_spin=float(s["nuclear_spin"]),
        )

    def cavity(self) -> CavityParams:
        c = self.data["cavity"]
        cav = CavityParams(
            omega0_rad_s=_TWO_PI * float(c["frequency_hz"]),
            kappa1_per_s=float(c["kappa1_per_s"]),
            kappa2_per_s=float(c["kappa2_per_s"]),
            kappa_loss_per_s=float(c["kappa_loss_per_s"]),
        )
        q_ref = c.get("quality_factor")
        if q_ref is not None:
            if abs(cav.quality_factor - float(q_ref)) > 0.01 * float(q_ref):
                raise ConfigError(
                    "CavityParams: rates give Q = "
                    f"{cav.quality_factor:.4g}, more than 1% away from the "
                    f"configured quality_factor {float(q_ref):.4g}"
                )
        return cav

    def geometry(self) -> StripGeometry:
        g = self.data["geometry"]
        return StripGeometry(
            width_m=float(g["strip_width_m"]),
            thickness_m=float(g["film_thickness_m"]),
            penetration_depth_m=float(g["penetration_depth_m"]),
            impedance_ohm=float(g["impedance_ohm"]),
            omega0_rad_s=_TWO_PI * float(self.data["cavity"]["frequency_hz"]),
        )

    def implantation_profile(self) -> ImplantationProfile:
        path = self.data["coupling"].get("profile_csv")
        if path:
            return ImplantationProfile.from_csv(path)
        return ImplantationProfile.default()

    def coupling_transition(self) -> tuple[tuple[int, int], tuple[int, int]]:
        c = self.data["coupling"]
        return tuple(c["transition_lower"]), tuple(c["transition_upper"])

    def coupling_distribution(self, sx_element: float) -> CouplingDistribution:
        c = self.data["coupling"]
        if c.get("fixed_g_hz") is not None:
            return CouplingDistribution.single(float(c["fixed_g_hz"]))
        return coupling_distribution(
            self.geometry(),
            self.implantation_profile(),
            region_m=(float(c["x_min_m"]), float(c["x_max_m"])),
            theta_rad=math.radians(float(c["theta_deg"])),
            sx_element=sx_element,
            n_bins=int(c["n_bins"]),
            gamma_e_hz_per_t=float(self.data["spin"]["gamma_e_hz_per_t"]),
        )

    def frequency_distribution(self) -> FrequencyDistribution:
        f = self.data["frequency"]
        return FrequencyDistribution(
            kind=str(f["kind"]),
            n_bins=int(f["n_bins"]),
            bin_spacing_hz=float(f["bin_spacing_hz"]),
            fwhm_hz=float(f["fwhm_hz"]),
            tilt=float(f["tilt"]),
            peak_splitting_hz=float(f["peak_splitting_hz"]),
            sampling=str(f.get("sampling", "uniform")),
            coverage=float(f.get("coverage", 0.98)),
        )

    def noise_model(self) -> NoiseModel:
        n = self.data["noise"]
        gain = 10 ** (float(n["gain_db"]) / 10)
        mode = str(n["mode"])
        if mode == "off":
            gain = 1.0
        return NoiseModel(
            mode=mode,
            gain=gain,
            n_eq=float(n["n_eq"]),
            n_amp=None if n.get("n_amp") is None else float(n["n_amp"]),
            n_sp=float(n["n_sp"]),
            n_syst=float(n["n_syst"]),
        )

    def solver(self) -> SolverConfig:
        s = self.data["solver"]
        max_step = s.get("max_step_s")
        return SolverConfig(
            rtol=float(s["rtol"]),
            atol=float(s["atol"]),
            method=str(s["method"]),
            max_step_s=math.inf if max_step is None else float(max_step),
            sample_step_s=float(s["sample_step_s"]),
        )

    # -- validation ------------------------------------------------------

    def validate(self) -> list[str]:
        """Every invariant violation, as ``TypeName: message (at path)``."""
        problems = []

        def check(builder, type_name, path):
            try:
                builder()
            except (EsrSimError, ValueError, TypeError, KeyError) as err:
                problems.append(f"{type_name}: {err} (at {path})")

        check(self.spin_system, "SpinSystem", "spin")
        check(self.cavity, "CavityParams", "cavity")
        check(self.geometry, "StripGeometry", "geometry")
        check(self.implantation_profile, "ImplantationProfile", "coupling.profile_csv")
        check(self.frequency_distribution, "FrequencyDistribution", "frequency")
        check(self.noise_model, "NoiseModel", "noise")
        check(self.solver, "SolverConfig", "solver")

        ens = self.data["ensemble"]
        if float(ens["n_spins_total"]) < 0:
            problems.append(
                "SubEnsemble: total spin count must be non-negative "
                "(at ensemble.n_spins_total)"
            )
        if float(ens["repetition_rate_hz"]) <= 0:
            problems.append(
                "SubEnsemble: repetition rate must be positive "
                "(at ensemble.repetition_rate_hz)"
            )
        if float(ens["gamma_perp_per_s"]) < 0:
            problems.append(
                "SubEnsemble: dephasing rate must be non-negative "
                "(at ensemble.gamma_perp_per_s)"
            )
        seq = self.data["sequence"]
        if float(seq["tau_s"]) <= 0:
            problems.append(
                "PulseSequence: tau must be positive (at sequence.tau_s)"
            )
        if float(seq["echo_window_s"]) <= 0:
            problems.append(
                "PulseSequence: echo window must be positive "
                "(at sequence.echo_window_s)"
            )
        if not isinstance(self.data["seed"], (int, np.integer)):
            problems.append("RunConfig: seed must be an integer (at seed)")
        return problems
