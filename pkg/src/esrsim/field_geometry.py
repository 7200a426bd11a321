"""Magnetostatics of the superconducting strip and single-spin couplings.

The resonator inductor is a thin superconducting strip of width ``w`` and
thickness ``b`` carrying the vacuum current fluctuation

    delta_i = omega0 sqrt(hbar / (2 Z0)).

Across the strip the current density follows the standard thin-film
profile: an inverse-square-root bulk law, an exponential boost within
lambda^2/(2b) of each edge, and the edge value (1.165/lambda) sqrt(w b)
times the centre value.  The vacuum magnetic field below the film is
computed by decomposing the strip into line currents (2-D Biot-Savart over
the cross-section; the strip is treated as infinitely long).

A donor at position (x, y) with a drivable transition of matrix element
``sx`` couples to the resonator with

    g = sx * gamma_e * sqrt(dBy^2 + cos^2(theta) dBx^2)   [Hz]

where theta is the angle between the static field and the strip axis.
Weighting g over the implantation depth profile and a lateral region gives
the normalised coupling-constant distribution used to build spin
sub-ensembles.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.constants import hbar, mu_0
from scipy.integrate import quad

from .errors import FieldDomainError, InvalidInputError

EDGE_ENHANCEMENT = 1.165  # J(w/2) / J(0) prefactor, times sqrt(w b)/lambda


@dataclass(frozen=True)
class StripGeometry:
    """Geometry and circuit parameters of the inductor strip.

    Attributes:
        width_m: Strip width w (m).
        thickness_m: Film thickness b (m).
        penetration_depth_m: London penetration depth lambda (m).
        impedance_ohm: Resonator impedance Z0 = sqrt(L/C) (ohm).
        omega0_rad_s: Resonator angular frequency (rad/s).
    """

    width_m: float = 5e-6
    thickness_m: float = 50e-9
    penetration_depth_m: float = 90e-9
    impedance_ohm: float = 44.0
    omega0_rad_s: float = 2 * np.pi * 7.24e9

    def __post_init__(self):
        if self.impedance_ohm <= 0:
            raise InvalidInputError("impedance must be positive")
        if min(self.width_m, self.thickness_m, self.penetration_depth_m) <= 0:
            raise InvalidInputError("geometry lengths must be positive")
        edge = self.edge_layer_m
        if not (0 < edge < self.width_m / 2):
            raise InvalidInputError(
                "current-profile regimes are unordered: need 0 < lambda^2/(2b) < w/2"
            )

    @property
    def edge_layer_m(self) -> float:
        """Width lambda^2/(2b) of the exponential edge regime."""
        return self.penetration_depth_m**2 / (2 * self.thickness_m)

    @property
    def edge_ratio(self) -> float:
        """Current-density enhancement J(w/2)/J(0) at the strip edge."""
        return (
            EDGE_ENHANCEMENT
            / self.penetration_depth_m
            * np.sqrt(self.width_m * self.thickness_m)
        )


def vacuum_current(geom: StripGeometry) -> float:
    """RMS vacuum current fluctuation of the resonator mode (A)."""
    return geom.omega0_rad_s * np.sqrt(hbar / (2 * geom.impedance_ohm))


def _profile_shape(x, geom: StripGeometry):
    """Unnormalised current-density profile, J(x)/J(0)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    half = geom.width_m / 2
    bulk_limit = half - geom.edge_layer_m
    ax = np.abs(x)
    out = np.empty_like(ax)
    bulk = ax <= bulk_limit
    out[bulk] = 1.0 / np.sqrt(1.0 - (2 * x[bulk] / geom.width_m) ** 2)
    edge = ~bulk
    out[edge] = geom.edge_ratio * np.exp(
        -(half - ax[edge]) * geom.thickness_m / geom.penetration_depth_m**2
    )
    return out


def current_density(x_m, geom: StripGeometry, delta_i_a: Optional[float] = None):
    """Sheet current density J(x) across the strip (A/m).

    The profile is normalised so its integral over the width equals the
    vacuum current (or ``delta_i_a`` when given).  Scalar in, scalar out.

    Raises:
        FieldDomainError: if any |x| exceeds w/2.
    """
    x = np.asarray(x_m, dtype=float)
    scalar = x.ndim == 0
    if np.any(np.abs(x) > geom.width_m / 2 * (1 + 1e-12)):
        raise FieldDomainError("current density is defined only for |x| <= w/2")
    if delta_i_a is None:
        delta_i_a = vacuum_current(geom)
    j0 = delta_i_a / _profile_integral(geom)
    out = j0 * _profile_shape(x, geom)
    return float(out[0]) if scalar else out


def _profile_integral(geom: StripGeometry) -> float:
    """Integral of the unnormalised profile over the width, to 1e-6 relative."""
    half = geom.width_m / 2
    bulk_limit = half - geom.edge_layer_m
    bulk, _ = quad(
        lambda x: 1.0 / np.sqrt(1.0 - (2 * x / geom.width_m) ** 2),
        -bulk_limit,
        bulk_limit,
        epsrel=1e-9,
        limit=200,
    )
    scale = geom.penetration_depth_m**2 / geom.thickness_m
    # Edge branch integrates in closed form; two edges by symmetry.
    edge = 2 * geom.edge_ratio * scale * (1.0 - np.exp(-geom.edge_layer_m / scale))
    return bulk + edge


def _filament_grid(geom: StripGeometry, n_filaments: int, n_layers: int):
    """Line-current positions and currents tiling the strip cross-section."""
    n_x = max(n_filaments // n_layers, 8)
    dx = geom.width_m / n_x
    xs = -geom.width_m / 2 + dx * (np.arange(n_x) + 0.5)
    ys = geom.thickness_m * (np.arange(n_layers) + 0.5) / n_layers
    j = current_density(xs, geom)
    currents = np.repeat(j * dx / n_layers, n_layers)
    px = np.repeat(xs, n_layers)
    py = np.tile(ys, n_x)
    return px, py, currents


def vacuum_field(
    x_m,
    y_m,
    geom: StripGeometry,
    n_filaments: int = 2000,
    n_layers: int = 4,
    chunk: int = 4096,
):
    """Vacuum fluctuation field (dBx, dBy) of the strip at points (x, y) in T.

    The film occupies |x| < w/2, 0 < y < b; the sample (and the spins) sit
    at y < 0.  The strip is decomposed into at least ``n_filaments`` line
    currents spread uniformly over the film thickness and weighted by the
    sheet-current profile; each contributes the azimuthal field of an
    infinite straight wire.

    Raises:
        FieldDomainError: for evaluation points strictly inside the film,
            where the filament decomposition is not a valid field model.
    """
    scalar = np.ndim(x_m) == 0 and np.ndim(y_m) == 0
    x = np.atleast_1d(np.asarray(x_m, dtype=float))
    y = np.atleast_1d(np.asarray(y_m, dtype=float))
    if x.shape != y.shape:
        x, y = np.broadcast_arrays(x, y)
    inside = (
        (np.abs(x) < geom.width_m / 2 - 1e-15)
        & (y > 1e-15)
        & (y < geom.thickness_m - 1e-15)
    )
    if np.any(inside):
        raise FieldDomainError("field evaluation inside the film is not defined")

    px, py, currents = _filament_grid(geom, n_filaments, n_layers)
    pref = mu_0 / (2 * np.pi) * currents

    bx = np.empty(x.size)
    by = np.empty(x.size)
    xf, yf = x.ravel(), y.ravel()
    for start in range(0, xf.size, chunk):
        sl = slice(start, min(start + chunk, xf.size))
        dxp = xf[sl, None] - px[None, :]
        dyp = yf[sl, None] - py[None, :]
        inv_r2 = 1.0 / (dxp**2 + dyp**2)
        bx[sl] = np.sum(pref[None, :] * (-dyp) * inv_r2, axis=1)
        by[sl] = np.sum(pref[None, :] * dxp * inv_r2, axis=1)
    bx = bx.reshape(x.shape)
    by = by.reshape(x.shape)
    if scalar:
        return float(bx[0]), float(by[0])
    return bx, by


def coupling_constant(
    dbx_t,
    dby_t,
    theta_rad: float,
    sx_element: float,
    gamma_e_hz_per_t: float = 28e9,
):
    """Single-spin coupling g (Hz) from the local vacuum field.

    ``theta_rad`` is the angle of the static field relative to the strip
    axis: donors under the strip see a field mostly along x and decouple at
    theta = pi/2, while donors beside it see a field mostly along y and
    keep their coupling at any angle.
    """
    if not 0 <= sx_element <= 0.5 + 1e-12:
        raise InvalidInputError("sx_element must lie in [0, 1/2]")
    dbx = np.asarray(dbx_t, dtype=float)
    dby = np.asarray(dby_t, dtype=float)
    g = sx_element * gamma_e_hz_per_t * np.sqrt(
        dby**2 + np.cos(theta_rad) ** 2 * dbx**2
    )
    return g if g.ndim else float(g)


@dataclass
class ImplantationProfile:
    """Tabulated donor density vs depth below the film (linear interpolation).

    Depths must be non-negative and strictly increasing; densities are
    relative (only the shape matters, the absolute dose is supplied as a
    separate spin count).
    """

    depth_m: np.ndarray
    density_per_m: np.ndarray

    def __post_init__(self):
        self.depth_m = np.atleast_1d(np.asarray(self.depth_m, dtype=float))
        self.density_per_m = np.atleast_1d(np.asarray(self.density_per_m, dtype=float))
        if self.depth_m.shape != self.density_per_m.shape:
            raise InvalidInputError("depth and density columns differ in length")
        if len(self.depth_m) > 1 and np.any(np.diff(self.depth_m) <= 0):
            raise InvalidInputError("depths must be strictly increasing")
        if np.any(self.depth_m < 0) or np.any(self.density_per_m < 0):
            raise InvalidInputError("depths and densities must be non-negative")
        if not np.any(self.density_per_m > 0):
            raise InvalidInputError("profile has zero total density")

    def density(self, depth_m):
        """Interpolated relative density; zero outside the tabulated range."""
        return np.interp(
            depth_m, self.depth_m, self.density_per_m, left=0.0, right=0.0
        )

    @classmethod
    def default(cls) -> "ImplantationProfile":
        """Stand-in implantation profile: skewed Gaussian peaked at 100 nm.

        Placeholder for a measured depth profile (peak near 100 nm,
        roughly 150 nm extent); replace with tabulated data via
        :meth:`from_csv` when available.
        """
        depth = np.linspace(0.0, 280e-9, 141)
        sigma = np.where(depth < 100e-9, 55e-9, 45e-9)
        density = np.exp(-((depth - 100e-9) ** 2) / (2 * sigma**2))
        return cls(depth_m=depth, density_per_m=density)

    @classmethod
    def from_csv(cls, path) -> "ImplantationProfile":
        """Read a two-column CSV ``depth_m,density_per_m`` (header required)."""
        rows = []
        with open(path) as fh:
            header = fh.readline()
            if "depth_m" not in header:
                raise InvalidInputError(
                    "profile CSV must start with a 'depth_m,density_per_m' header"
                )
            for line in fh:
                line = line.strip()
                if line and not line.startswith("#"):
                    d, rho = line.split(",")
                    rows.append((float(d), float(rho)))
        data = np.array(rows)
        return cls(depth_m=data[:, 0], density_per_m=data[:, 1])

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("depth_m,density_per_m\n")
            for d, rho in zip(self.depth_m, self.density_per_m):
                fh.write(f"{d!r},{rho!r}\n")


@dataclass
class CouplingDistribution:
    """Normalised histogram of single-spin couplings g (Hz).

    Attributes:
        g_hz: Bin centres (Hz), strictly positive.
        weight: Bin weights, non-negative, summing to one.
    """

    g_hz: np.ndarray
    weight: np.ndarray

    def __post_init__(self):
        self.g_hz = np.atleast_1d(np.asarray(self.g_hz, dtype=float))
        self.weight = np.atleast_1d(np.asarray(self.weight, dtype=float))
        if self.g_hz.shape != self.weight.shape:
            raise InvalidInputError("bin centres and weights differ in length")
        if np.any(self.weight < 0):
            raise InvalidInputError("weights must be non-negative")
        total = self.weight.sum()
        if total <= 0:
            raise InvalidInputError("distribution has zero total weight")
        self.weight = self.weight / total

    @property
    def n_bins(self) -> int:
        return len(self.g_hz)

    @property
    def mode_hz(self) -> float:
        return float(self.g_hz[np.argmax(self.weight)])

    @property
    def mean_hz(self) -> float:
        return float(np.sum(self.g_hz * self.weight))

    @classmethod
    def single(cls, g_hz: float) -> "CouplingDistribution":
        """Distribution concentrated in one bin (homogeneous coupling)."""
        return cls(g_hz=np.array([g_hz]), weight=np.array([1.0]))

    def to_csv(self, path, header: Optional[dict] = None):
        with open(path, "w") as fh:
            for key, value in (header or {}).items():
                fh.write(f"# {key}={value}\n")
            fh.write("g_Hz,weight\n")
            for g, w in zip(self.g_hz, self.weight):
                fh.write(f"{g!r},{w!r}\n")

    @classmethod
    def from_csv(cls, path) -> "CouplingDistribution":
        rows = []
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if line and not line.startswith("#") and not line.startswith("g_Hz"):
                    g, w = line.split(",")
                    rows.append((float(g), float(w)))
        data = np.array(rows)
        return cls(g_hz=data[:, 0], weight=data[:, 1])


def coupling_distribution(
    geom: StripGeometry,
    profile: ImplantationProfile,
    region_m: tuple[float, float] = (-2.5e-6, 2.5e-6),
    theta_rad: float = 0.0,
    sx_element: float = 0.47,
    n_bins: int = 50,
    gamma_e_hz_per_t: float = 28e9,
    n_x: int = 400,
    n_depth: int = 70,
    n_filaments: int = 2000,
) -> CouplingDistribution:
    """Coupling-constant distribution over a lateral region of the sample.

    Couplings are sampled on an (x, depth) grid, weighted by the
    implantation density, and histogrammed into ``n_bins`` equal-width bins
    spanning the 0.1%..99.9% weighted quantiles (the distribution is
    sharply peaked with a heavy tail, so unclamped equal-width bins would
    waste most of their resolution on outliers).  Samples beyond the
    quantile span are clipped into the end bins so the weights still sum to
    exactly one.

    Args:
        region_m: Lateral interval (x_min, x_max) of donors to include;
            the default covers the strip footprint.
        theta_rad: Static-field angle to the strip axis.
        sx_element: Transition matrix element scaling every coupling.
        n_bins: Number of histogram bins (at least 2).
    """
    x_min, x_max = float(region_m[0]), float(region_m[1])
    if x_max < x_min:
        raise InvalidInputError("region must satisfy x_min <= x_max")
    span_limit = geom.width_m / 2 + 10 * geom.width_m
    if max(abs(x_min), abs(x_max)) > span_limit:
        raise InvalidInputError("region extends beyond the field model validity")
    if n_bins < 2:
        raise InvalidInputError("need at least two histogram bins")

    if x_max == x_min:
        xs = np.array([x_min])
    else:
        xs = np.linspace(x_min, x_max, n_x)
    if len(profile.depth_m) == 1:
        depths = profile.depth_m.copy()
        depth_w = np.array([1.0])
    else:
        depths = np.linspace(profile.depth_m[0], profile.depth_m[-1], n_depth)
        depth_w = profile.density(depths)
    if not np.any(depth_w > 0):
        raise InvalidInputError("implantation profile has zero weight in range")

    gx, gd = np.meshgrid(xs, depths, indexing="ij")
    bx, by = vacuum_field(gx.ravel(), -gd.ravel(), geom, n_filaments=n_filaments)
    g = coupling_constant(bx, by, theta_rad, sx_element, gamma_e_hz_per_t)
    weights = np.tile(depth_w, len(xs)).astype(float)
    total = weights.sum()
    if total <= 0:
        raise InvalidInputError("zero total sampling weight")
    weights /= total

    order = np.argsort(g)
    cum = np.cumsum(weights[order])
    lo = g[order][np.searchsorted(cum, 0.001)]
    hi = g[order][min(np.searchsorted(cum, 0.999), len(order) - 1)]
    if hi - lo <= max(1e-12, 1e-9 * hi):
        # Degenerate sample set (single point / uniform g): one bin.
        return CouplingDistribution(
            g_hz=np.array([float(np.sum(g * weights))]), weight=np.array([1.0])
        )
    edges = np.linspace(lo, hi, n_bins + 1)
    hist, _ = np.histogram(np.clip(g, lo, hi), bins=edges, weights=weights)
    centers = 0.5 * (edges[:-1] + edges[1:])
    return CouplingDistribution(g_hz=centers, weight=hist)
