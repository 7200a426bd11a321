"""Unit conversions for drive powers and photon flux."""

import math

from scipy.constants import hbar


def dbm_to_watts(power_dbm: float) -> float:
    return 1e-3 * 10 ** (power_dbm / 10)


def watts_to_dbm(power_w: float) -> float:
    return 10 * math.log10(power_w / 1e-3)


def drive_amplitude(power_w: float, omega0_rad_s: float) -> float:
    """Input-field amplitude beta (sqrt(photons/s)) for a given power.

    The photon flux at the input line is beta^2 = P / (hbar omega0).
    """
    return math.sqrt(power_w / (hbar * omega0_rad_s))


def drive_amplitude_dbm(power_dbm: float, omega0_rad_s: float) -> float:
    return drive_amplitude(dbm_to_watts(power_dbm), omega0_rad_s)
