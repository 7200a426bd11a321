"""Electro-nuclear spin model of bismuth donors in silicon.

The donor couples an electron spin S = 1/2 to the I = 9/2 nuclear spin of
bismuth through an isotropic hyperfine interaction, giving a 20-level
system.  In frequency units (Hz) the Hamiltonian is

    H = B . (gamma_e S x 1  -  gamma_n 1 x I) + A S . I

with gyromagnetic ratios in Hz/T and the hyperfine constant A in Hz.  At
zero field the levels group into an F = 4 multiplet (9 states, energy
-11A/4) and an F = 5 multiplet (11 states, energy +9A/4) split by 5A.  For
a static field along z the total projection m_F stays a good quantum
number, so levels are labelled (F, m_F) with F assigned by adiabatic
continuation from the zero-field multiplets.

Only pairs with |Delta m_F| = 1 carry a sizeable S_x matrix element and are
therefore drivable by the resonator field, which lies perpendicular to the
static field.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from .errors import (
    AmbiguousCrossingError,
    CrossingNotFoundError,
    InvalidInputError,
)

# Calibrated so the (4,-4)->(5,-5) transition crosses 7.24 GHz at exactly
# 5.160 mT; this also places the (4,-3)->(5,-4) crossing at 6.683 mT.
# Published values of the Si:Bi hyperfine constant vary by a few MHz
# between sources, so the constant is a configuration parameter.
HYPERFINE_DEFAULT_HZ = 1.4739539e9

GAMMA_E_DEFAULT_HZ_PER_T = 28e9
GAMMA_N_DEFAULT_HZ_PER_T = 7e6


@dataclass(frozen=True)
class SpinSystem:
    """Parameters of the donor spin Hamiltonian.

    Attributes:
        gamma_e_hz_per_t: Electron gyromagnetic ratio (Hz/T).
        gamma_n_hz_per_t: Nuclear gyromagnetic ratio (Hz/T).
        hyperfine_hz: Isotropic hyperfine constant A (Hz).
        electron_spin: Electron spin quantum number (1/2 for a donor).
        nuclear_spin: Nuclear spin quantum number (9/2 for bismuth).
    """

    gamma_e_hz_per_t: float = GAMMA_E_DEFAULT_HZ_PER_T
    gamma_n_hz_per_t: float = GAMMA_N_DEFAULT_HZ_PER_T
    hyperfine_hz: float = HYPERFINE_DEFAULT_HZ
    electron_spin: float = 0.5
    nuclear_spin: float = 4.5

    def __post_init__(self):
        if self.hyperfine_hz <= 0:
            raise InvalidInputError("hyperfine constant must be positive")
        if not (self.gamma_e_hz_per_t > self.gamma_n_hz_per_t >= 0):
            raise InvalidInputError(
                "gyromagnetic ratios must satisfy gamma_e > gamma_n >= 0"
            )
        for j in (self.electron_spin, self.nuclear_spin):
            if j < 0 or round(2 * j) != 2 * j:
                raise InvalidInputError("spins must be non-negative half-integers")

    @property
    def dimension(self) -> int:
        return int(round((2 * self.electron_spin + 1) * (2 * self.nuclear_spin + 1)))


def angular_momentum(j: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return (Jx, Jy, Jz) for spin ``j`` in the descending-m basis."""
    d = int(round(2 * j + 1))
    m = j - np.arange(d)
    jp = np.zeros((d, d), dtype=complex)
    for k in range(1, d):
        jp[k - 1, k] = np.sqrt(j * (j + 1) - m[k] * (m[k] + 1))
    jx = (jp + jp.conj().T) / 2
    jy = (jp - jp.conj().T) / 2j
    jz = np.diag(m).astype(complex)
    return jx, jy, jz


@lru_cache(maxsize=8)
def _joint_operators(s: float, i: float):
    """Joint-space operators for electron spin ``s`` and nuclear spin ``i``."""
    sx, sy, sz = angular_momentum(s)
    ix, iy, iz = angular_momentum(i)
    de, dn = sx.shape[0], ix.shape[0]
    ee, en = np.eye(de), np.eye(dn)
    ops = {
        "sx": np.kron(sx, en),
        "sy": np.kron(sy, en),
        "sz": np.kron(sz, en),
        "ix": np.kron(ee, ix),
        "iy": np.kron(ee, iy),
        "iz": np.kron(ee, iz),
    }
    ops["fz"] = ops["sz"] + ops["iz"]
    ops["s_dot_i"] = (
        ops["sx"] @ ops["ix"] + ops["sy"] @ ops["iy"] + ops["sz"] @ ops["iz"]
    )
    return ops


def build_hamiltonian(field_t, system: SpinSystem = SpinSystem()) -> np.ndarray:
    """Donor Hamiltonian in frequency units (Hz) for a static field vector.

    Args:
        field_t: Static field as a 3-vector (T); a scalar is taken along z.
        system: Spin-system parameters.

    Returns:
        Hermitian ``(d, d)`` complex matrix, traceless by construction.
    """
    b = np.atleast_1d(np.asarray(field_t, dtype=float))
    if b.size == 1:
        b = np.array([0.0, 0.0, float(b[0])])
    if b.shape != (3,):
        raise InvalidInputError("field must be a scalar or a 3-vector")
    if not np.all(np.isfinite(b)):
        raise InvalidInputError("field components must be finite")
    ops = _joint_operators(system.electron_spin, system.nuclear_spin)
    ge, gn = system.gamma_e_hz_per_t, system.gamma_n_hz_per_t
    h = (
        b[0] * (ge * ops["sx"] - gn * ops["ix"])
        + b[1] * (ge * ops["sy"] - gn * ops["iy"])
        + b[2] * (ge * ops["sz"] - gn * ops["iz"])
        + system.hyperfine_hz * ops["s_dot_i"]
    )
    return h


@dataclass
class EnergyLevels:
    """Sorted eigensystem with adiabatic (F, m_F) labels.

    ``states[:, k]`` is the eigenvector of ``energies_hz[k]``; labels refer
    to the frame whose z axis lies along the static field.
    """

    energies_hz: np.ndarray
    states: np.ndarray
    labels: list[tuple[int, int]]

    def index(self, label: tuple[int, int]) -> int:
        try:
            return self.labels.index((int(label[0]), int(label[1])))
        except ValueError:
            raise InvalidInputError(f"no level labelled {label}") from None

    def energy(self, label: tuple[int, int]) -> float:
        return float(self.energies_hz[self.index(label)])

    def state(self, label: tuple[int, int]) -> np.ndarray:
        return self.states[:, self.index(label)]

    def transition_frequency_hz(
        self, lower: tuple[int, int], upper: tuple[int, int]
    ) -> float:
        return self.energy(upper) - self.energy(lower)


def _rotate_degenerate_clusters(energies, states, fz, tol_hz):
    """Diagonalise F_z inside each (near-)degenerate eigenspace.

    Makes m_F well defined at zero and very low field, where the plain
    eigendecomposition returns arbitrary mixtures within a multiplet.
    """
    states = states.copy()
    n = len(energies)
    start = 0
    while start < n:
        stop = start + 1
        while stop < n and energies[stop] - energies[stop - 1] < tol_hz:
            stop += 1
        if stop - start > 1:
            block = states[:, start:stop]
            fz_block = block.conj().T @ fz @ block
            _, rot = np.linalg.eigh(fz_block)
            states[:, start:stop] = block @ rot
        start = stop
    return states


def eigensystem(h_hz: np.ndarray, system: SpinSystem = SpinSystem()) -> EnergyLevels:
    """Diagonalise the donor Hamiltonian and label levels by (F, m_F).

    The field magnitude and direction are recovered from the Zeeman part of
    ``h_hz`` itself.  Because the Hamiltonian is isotropic, eigenvalues only
    depend on |B|; labels are assigned in the frame with z along the field:
    m_F is the conserved total projection, F = 4 (F = 5) tags the lower
    (upper) state of each m_F pair, which continues adiabatically to the
    zero-field multiplets.
    """
    h = np.asarray(h_hz, dtype=complex)
    if h.shape != (system.dimension, system.dimension):
        raise InvalidInputError("hamiltonian dimension mismatch")
    if np.linalg.norm(h - h.conj().T) > 1e-6 * max(np.linalg.norm(h), 1.0):
        raise InvalidInputError("hamiltonian must be Hermitian")
    ops = _joint_operators(system.electron_spin, system.nuclear_spin)

    # gamma_e * B_k = tr(H S_k) / tr(S_z^2); hyperfine and nuclear Zeeman
    # terms are traceless against the electron spin operators.
    sz2 = np.trace(ops["sz"] @ ops["sz"]).real
    b_vec = np.array(
        [
            np.trace(h @ ops[k]).real / sz2 / system.gamma_e_hz_per_t
            for k in ("sx", "sy", "sz")
        ]
    )
    b_mag = float(np.linalg.norm(b_vec))

    if b_mag > 0 and abs(b_vec[2]) / b_mag < 1.0 - 1e-12:
        # Tilted field: label via the spectrum of the equivalent |B| z-field
        # Hamiltonian (identical by isotropy), keep the lab-frame vectors.
        h_axial = build_hamiltonian(b_mag, system)
        axial = eigensystem(h_axial, system)
        energies, states = np.linalg.eigh(h)
        return EnergyLevels(energies.real, states, list(axial.labels))

    energies, states = np.linalg.eigh(h)
    energies = energies.real
    cluster_tol = 1e-6 * system.hyperfine_hz
    states = _rotate_degenerate_clusters(energies, states, ops["fz"], cluster_tol)

    mf = np.real(np.einsum("ij,jk,ki->i", states.conj().T, ops["fz"], states))
    mf_int = np.round(mf).astype(int)
    if np.max(np.abs(mf - mf_int)) > 1e-3:
        raise InvalidInputError("level projections are not quantised; bad input")

    labels: list[Optional[tuple[int, int]]] = [None] * len(energies)
    by_mf: dict[int, list[int]] = {}
    for k, m in enumerate(mf_int):
        by_mf.setdefault(int(m), []).append(k)
    f_low = int(round(abs(system.nuclear_spin - system.electron_spin)))
    f_high = int(round(system.nuclear_spin + system.electron_spin))
    for m, indices in by_mf.items():
        indices.sort(key=lambda k: energies[k])
        if len(indices) == 1:
            labels[indices[0]] = (f_high, m)
        else:
            labels[indices[0]] = (f_low, m)
            labels[indices[1]] = (f_high, m)
    return EnergyLevels(energies, states, [lab for lab in labels if lab is not None])


@dataclass
class Transition:
    """A drivable |Delta m_F| = 1 transition at a given field.

    Attributes:
        lower, upper: (F, m_F) labels of the two levels.
        frequency_hz: Transition frequency (Hz), non-negative.
        sx_element: |<lower| S_x |upper>|, at most the electron spin 1/2.
        dfdb_hz_per_t: Local slope of the transition frequency vs field.
    """

    lower: tuple[int, int]
    upper: tuple[int, int]
    frequency_hz: float
    sx_element: float
    dfdb_hz_per_t: float


def transition_frequency_hz(
    field_t: float,
    lower: tuple[int, int],
    upper: tuple[int, int],
    system: SpinSystem = SpinSystem(),
) -> float:
    """Frequency of a labelled transition for a z-field of magnitude ``field_t``."""
    levels = eigensystem(build_hamiltonian(field_t, system), system)
    return levels.transition_frequency_hz(lower, upper)


def transition_table(
    levels: EnergyLevels,
    field_t: float,
    system: SpinSystem = SpinSystem(),
    sx_threshold: float = 0.01,
    db_t: float = 1e-6,
) -> list[Transition]:
    """Enumerate drivable transitions at the field that produced ``levels``.

    Pairs are retained when |Delta m_F| = 1 and the S_x matrix element
    exceeds ``sx_threshold``.  Slopes come from a central difference with
    step ``db_t``.

    Args:
        levels: Labelled eigensystem at field ``field_t`` (along z).
        field_t: Field magnitude (T) used to build ``levels``.
        system: Spin-system parameters.
        sx_threshold: Minimum matrix element for a transition to be listed.
        db_t: Field step (T) of the central-difference slope.
    """
    ops = _joint_operators(system.electron_spin, system.nuclear_spin)
    sx = ops["sx"]
    plus = eigensystem(build_hamiltonian(field_t + db_t, system), system)
    minus = eigensystem(build_hamiltonian(max(field_t - db_t, 0.0), system), system)
    denom = field_t + db_t - max(field_t - db_t, 0.0)

    out = []
    n = len(levels.energies_hz)
    for a in range(n):
        for c in range(a + 1, n):
            la, lc = levels.labels[a], levels.labels[c]
            if abs(la[1] - lc[1]) != 1:
                continue
            element = abs(levels.states[:, a].conj() @ sx @ levels.states[:, c])
            if element <= sx_threshold:
                continue
            freq = levels.energies_hz[c] - levels.energies_hz[a]
            slope = (
                plus.transition_frequency_hz(la, lc)
                - minus.transition_frequency_hz(la, lc)
            ) / denom
            out.append(
                Transition(
                    lower=la,
                    upper=lc,
                    frequency_hz=float(freq),
                    sx_element=float(element),
                    dfdb_hz_per_t=float(slope),
                )
            )
    out.sort(key=lambda t: t.frequency_hz)
    return out


def find_crossing_field(
    lower: tuple[int, int],
    upper: tuple[int, int],
    resonance_hz: float,
    b_range_t: tuple[float, float],
    system: SpinSystem = SpinSystem(),
    freq_tol_hz: float = 1e3,
    n_scan: int = 65,
) -> tuple[float, float]:
    """Field at which a labelled transition crosses ``resonance_hz``.

    The transition frequency is first scanned over ``b_range_t`` to check
    monotonicity; a non-monotonic curve raises :class:`AmbiguousCrossingError`
    carrying every root, and a curve that never reaches the resonance raises
    :class:`CrossingNotFoundError`.  Otherwise the crossing is bisected until
    the frequency mismatch drops below ``freq_tol_hz`` and returned together
    with the local df/dB slope (central difference, 1 uT step).

    Returns:
        ``(b_cross_t, dfdb_hz_per_t)``
    """
    b_lo, b_hi = float(b_range_t[0]), float(b_range_t[1])
    if not (0 <= b_lo < b_hi):
        raise InvalidInputError("field range must satisfy 0 <= low < high")

    def freq(b):
        return transition_frequency_hz(b, lower, upper, system)

    grid = np.linspace(b_lo, b_hi, n_scan)
    values = np.array([freq(b) for b in grid]) - resonance_hz
    diffs = np.diff(values)
    if not (np.all(diffs > 0) or np.all(diffs < 0)):
        roots = []
        for k in range(len(grid) - 1):
            if values[k] == 0.0 or values[k] * values[k + 1] < 0:
                roots.append(
                    _bisect_crossing(freq, grid[k], grid[k + 1], resonance_hz, freq_tol_hz)
                )
        raise AmbiguousCrossingError(
            f"transition frequency is not monotonic over {b_range_t}", roots
        )
    if values[0] * values[-1] > 0:
        raise CrossingNotFoundError(
            f"transition {lower}->{upper} does not cross "
            f"{resonance_hz:.6g} Hz in {b_range_t}"
        )
    b_cross = _bisect_crossing(freq, b_lo, b_hi, resonance_hz, freq_tol_hz)
    db = 1e-6
    slope = (freq(b_cross + db) - freq(max(b_cross - db, 0.0))) / (
        b_cross + db - max(b_cross - db, 0.0)
    )
    return float(b_cross), float(slope)


def _bisect_crossing(freq, b_lo, b_hi, target, tol_hz, max_iter=200):
    f_lo = freq(b_lo) - target
    for _ in range(max_iter):
        mid = 0.5 * (b_lo + b_hi)
        f_mid = freq(mid) - target
        if abs(f_mid) < tol_hz:
            return mid
        if f_lo * f_mid <= 0:
            b_hi = mid
        else:
            b_lo, f_lo = mid, f_mid
    return 0.5 * (b_lo + b_hi)


def fit_hyperfine_constant(
    b_cross_t: float = 5.16e-3,
    resonance_hz: float = 7.24e9,
    lower: tuple[int, int] = (4, -4),
    upper: tuple[int, int] = (5, -5),
    gamma_e_hz_per_t: float = GAMMA_E_DEFAULT_HZ_PER_T,
    gamma_n_hz_per_t: float = GAMMA_N_DEFAULT_HZ_PER_T,
    bracket_hz: tuple[float, float] = (1.3e9, 1.6e9),
) -> float:
    """Hyperfine constant that puts a transition crossing at a given field.

    Calibration behind :data:`HYPERFINE_DEFAULT_HZ`: solve for A such that
    the chosen transition is resonant with ``resonance_hz`` at ``b_cross_t``.
    """
    from scipy.optimize import brentq

    def mismatch(a_hz):
        sys = SpinSystem(
            gamma_e_hz_per_t=gamma_e_hz_per_t,
            gamma_n_hz_per_t=gamma_n_hz_per_t,
            hyperfine_hz=a_hz,
        )
        return transition_frequency_hz(b_cross_t, lower, upper, sys) - resonance_hz

    return float(brentq(mismatch, *bracket_hz, xtol=1.0))


def transitions_to_csv(transitions: Sequence[Transition], path, header: Optional[dict] = None):
    """Write a transition table as CSV with one row per transition."""
    with open(path, "w") as fh:
        for key, value in (header or {}).items():
            fh.write(f"# {key}={value}\n")
        fh.write("lowerF,lower_mF,upperF,upper_mF,freq_Hz,sx,dfdB_Hz_per_T\n")
        for t in transitions:
            fh.write(
                f"{t.lower[0]},{t.lower[1]},{t.upper[0]},{t.upper[1]},"
                f"{t.frequency_hz!r},{t.sx_element!r},{t.dfdb_hz_per_t!r}\n"
            )
