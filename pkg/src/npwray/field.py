"""Two-dimensional complex refractivity fields.

A field is a piecewise-constant map of the complex refractive index
``n - j*kappa`` over horizontal columns and altitude layers. Fields can be
built from weather columns through a coefficient-table composition, from
sparse station profiles through inverse-distance weighting, or from the
synthetic generators used as test fixtures.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import DimensionMismatch, GridFormatError

C0 = 299_792_458.0
R_DRY = 287.05  # J/(kg K)
DB_PER_NEPER = 20.0 / math.log(10.0)

# Atmospheric builders reject anything outside these bounds.
N_MIN_ATM = 1.0
N_MAX_ATM = 1.001
KAPPA_MAX_ATM = 1e-5

GRID_MAGIC = "NPWGRID v1"


@dataclass(frozen=True)
class ComplexRefractivity:
    """Intrinsic medium description ``n - j*kappa`` at a point."""

    n: float
    kappa: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.n) and math.isfinite(self.kappa)):
            raise ValueError(f"non-finite refractive index ({self.n}, {self.kappa})")
        if self.n < 0:
            raise ValueError(f"n must be >= 0, got {self.n}")
        if self.kappa < 0:
            raise ValueError(f"kappa must be >= 0, got {self.kappa}")

    @property
    def complex(self) -> complex:
        return complex(self.n, -self.kappa)

    def check_atmospheric(self):
        if not (N_MIN_ATM <= self.n <= N_MAX_ATM):
            raise ValueError(f"n={self.n!r} outside atmospheric range [1, 1.001]")
        if self.kappa > KAPPA_MAX_ATM:
            raise ValueError(f"kappa={self.kappa!r} exceeds atmospheric bound 1e-5")
        return self


@dataclass(frozen=True)
class Refractivity:
    """Complex refractivity in N-units, ``N_re - j*N_im``.

    ``N_im`` holds the loss part with the sign already flipped, so a lossy
    medium has ``N_im > 0``.
    """

    N_re: float
    N_im: float = 0.0


def refractivity_to_index(N: Refractivity) -> ComplexRefractivity:
    """Convert N-units to ``(n, kappa)`` via ``n - j*kappa = N*1e-6 + 1``."""
    kappa = N.N_im * 1e-6
    if kappa < 0:
        raise ValueError(
            f"negative loss part N_im={N.N_im!r}; loss must be stored as N_im >= 0"
        )
    return ComplexRefractivity(1.0 + N.N_re * 1e-6, kappa)


def index_to_refractivity(v: ComplexRefractivity) -> Refractivity:
    return Refractivity((v.n - 1.0) * 1e6, v.kappa * 1e6)


def wavenumber(f: float) -> float:
    """Free-space wavenumber ``2*pi*f/c`` in rad/m."""
    return 2.0 * math.pi * f / C0


def attenuation_to_kappa(gamma: float, f: float) -> float:
    """Convert a specific attenuation in dB/km to an extinction coefficient.

    A uniform wave decays as ``exp(-k0*kappa*l)``, so ``gamma`` (dB per km)
    corresponds to ``kappa = gamma/1000 / (20/ln 10) / k0``.
    """
    if not (math.isfinite(gamma) and math.isfinite(f)):
        raise ValueError("non-finite attenuation or frequency")
    if gamma < 0:
        raise ValueError(f"gamma must be >= 0, got {gamma}")
    if f <= 0:
        raise ValueError(f"frequency must be > 0, got {f}")
    return (gamma / 1000.0) / DB_PER_NEPER / wavenumber(f)


def kappa_to_attenuation(kappa: float, f: float) -> float:
    """Inverse of :func:`attenuation_to_kappa`; returns dB/km."""
    if not (math.isfinite(kappa) and math.isfinite(f)):
        raise ValueError("non-finite kappa or frequency")
    if kappa < 0 or f <= 0:
        raise ValueError("kappa must be >= 0 and f > 0")
    return kappa * wavenumber(f) * DB_PER_NEPER * 1000.0


# ---------------------------------------------------------------------------
# Weather inputs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WeatherSample:
    """One weather observation at altitude ``h`` (m).

    Units: P in Pa, T in K, RH in %, cloud water contents in g/m^3, rain
    rate in mm/h.
    """

    P: float
    T: float
    RH: float
    W_liq: float = 0.0
    W_ice: float = 0.0
    R: float = 0.0
    h: float = 0.0

    def __post_init__(self):
        vals = (self.P, self.T, self.RH, self.W_liq, self.W_ice, self.R, self.h)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError(f"non-finite weather value in {self}")
        if self.T <= 0:
            raise ValueError(f"T must be > 0 K, got {self.T}")
        if self.P <= 0:
            raise ValueError(f"P must be > 0 Pa, got {self.P}")
        if not 0.0 <= self.RH <= 100.0:
            raise ValueError(f"RH must lie in [0, 100] %, got {self.RH}")
        if min(self.W_liq, self.W_ice, self.R) < 0:
            raise ValueError("water contents and rain rate must be >= 0")


@dataclass(frozen=True)
class AttenuationCoefficients:
    """Coefficient table for the complex refractivity composition.

    Attributes
    ----------
    freq_GHz : float
        Frequency the table applies to.
    rain_k, rain_alpha : float
        Power-law coefficients, rain attenuation ``k * R**alpha`` in dB/km.
    cloud_Kl : float
        Liquid-cloud specific attenuation coefficient, (dB/km)/(g/m^3).
    gas_gamma : float
        Clear-air specific attenuation at reference conditions (dB/km).
    sources : dict
        Citation string for each coefficient.
    """

    freq_GHz: float
    rain_k: float
    rain_alpha: float
    cloud_Kl: float
    gas_gamma: float
    sources: Dict[str, str] = field(default_factory=dict, compare=False)

    _KEYS = {
        "freq_GHz": "freq_GHz",
        "rain_k": "rain_k",
        "rain_alpha": "rain_alpha",
        "cloud_Kl_dB_per_km_per_gm3": "cloud_Kl",
        "gas_gamma_dB_per_km": "gas_gamma",
    }

    def check_frequency(self, f: float):
        if not math.isclose(self.freq_GHz * 1e9, f, rel_tol=1e-9):
            raise ValueError(
                f"coefficient table is for {self.freq_GHz} GHz, "
                f"requested {f / 1e9} GHz"
            )


def load_coefficients(path) -> AttenuationCoefficients:
    """Read a coefficient file.

    Each non-comment line reads ``key = value  source=<citation>``. Every
    required key must be present and must carry a ``source=`` annotation.
    """
    values: Dict[str, float] = {}
    sources: Dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise GridFormatError(f"expected 'key = value', got {line!r}", lineno)
            key, rest = (s.strip() for s in line.split("=", 1))
            if key not in AttenuationCoefficients._KEYS:
                raise GridFormatError(f"unknown coefficient key {key!r}", lineno)
            value_text, sep, source = rest.partition("source=")
            if not sep or not source.strip():
                raise GridFormatError(f"{key} lacks a source= annotation", lineno)
            try:
                value = float(value_text.strip())
            except ValueError:
                raise GridFormatError(f"bad number for {key}: {value_text!r}", lineno)
            if not math.isfinite(value) or value < 0:
                raise GridFormatError(f"{key} must be finite and >= 0", lineno)
            values[AttenuationCoefficients._KEYS[key]] = value
            sources[key] = source.strip()
    missing = [k for k, attr in AttenuationCoefficients._KEYS.items() if attr not in values]
    if missing:
        raise GridFormatError(f"{path}: missing coefficient keys {missing}")
    return AttenuationCoefficients(sources=sources, **values)


def default_coefficients_path():
    from importlib import resources

    return resources.files("npwray") / "data" / "coefficients_18GHz.txt"


def saturation_vapour_pressure(T: float, P_hPa: float) -> float:
    """Saturation vapour pressure over water in hPa (ITU-R P.453-14)."""
    t = T - 273.15
    ef = 1.0 + 1e-4 * (7.2 + P_hPa * (0.0320 + 5.9e-6 * t * t))
    return ef * 6.1121 * math.exp((18.678 - t / 234.5) * t / (t + 257.14))


def radio_refractivity(P: float, T: float, RH: float) -> float:
    """Real radio refractivity (N-units) from the dry + vapour formula.

    ``N = 77.6 Pd/T + 72 e/T + 3.75e5 e/T**2`` with pressures in hPa
    (ITU-R P.453-14). ``P`` is total pressure in Pa.
    """
    P_hPa = P / 100.0
    e = RH / 100.0 * saturation_vapour_pressure(T, P_hPa)
    Pd = P_hPa - e
    return 77.6 * Pd / T + 72.0 * e / T + 3.75e5 * e / (T * T)


def cloud_water_density(P, T, mixing_ratio, pressure_unit="hPa"):
    """Hydrometeor mass density in g/m^3 from a mixing ratio in kg/kg.

    Uses the dry-air density ``rho_dry = 100*P/(R_dry*T)``. The factor 100
    only makes sense when ``P`` is in hPa, so the unit is explicit:
    ``pressure_unit="hPa"`` (default) applies it, ``"Pa"`` does not.
    """
    if pressure_unit == "hPa":
        rho_dry = 100.0 * P / (R_DRY * T)
    elif pressure_unit == "Pa":
        rho_dry = P / (R_DRY * T)
    else:
        raise ValueError(f"pressure_unit must be 'hPa' or 'Pa', got {pressure_unit!r}")
    return rho_dry * mixing_ratio * 1000.0


_P_REF = 101_325.0
_T_REF = 288.15


def specific_attenuation(sample: WeatherSample, coeffs: AttenuationCoefficients,
                         rain_rate: Optional[float] = None) -> Tuple[float, float, float]:
    """Gas, cloud and rain specific attenuation (dB/km) for one sample.

    The clear-air term is the tabulated reference value scaled by air
    density. Only liquid cloud water absorbs; ice is ignored.
    """
    R = sample.R if rain_rate is None else rain_rate
    gas = coeffs.gas_gamma * (sample.P / _P_REF) * (_T_REF / sample.T)
    cloud = coeffs.cloud_Kl * sample.W_liq
    rain = coeffs.rain_k * R ** coeffs.rain_alpha if R > 0 else 0.0
    return gas, cloud, rain


def _interp_samples(samples: Sequence[WeatherSample], h_m: float) -> WeatherSample:
    hs = [s.h for s in samples]
    if h_m <= hs[0]:
        s = samples[0]
        return WeatherSample(s.P, s.T, s.RH, s.W_liq, s.W_ice, s.R, h_m)
    if h_m > hs[-1]:
        raise ValueError(f"weather column ends at {hs[-1]} m, below {h_m} m")
    k = int(np.searchsorted(hs, h_m))
    lo, hi = samples[k - 1], samples[k]
    w = (h_m - lo.h) / (hi.h - lo.h)

    def lerp(a, b):
        return a + w * (b - a)

    return WeatherSample(
        lerp(lo.P, hi.P), lerp(lo.T, hi.T), lerp(lo.RH, hi.RH),
        lerp(lo.W_liq, hi.W_liq), lerp(lo.W_ice, hi.W_ice), lerp(lo.R, hi.R), h_m,
    )


def weather_to_index(sample: WeatherSample, coeffs: AttenuationCoefficients, f: float,
                     rain_rate: Optional[float] = None) -> ComplexRefractivity:
    n = 1.0 + radio_refractivity(sample.P, sample.T, sample.RH) * 1e-6
    gamma = sum(specific_attenuation(sample, coeffs, rain_rate))
    return ComplexRefractivity(n, attenuation_to_kappa(gamma, f)).check_atmospheric()


# ---------------------------------------------------------------------------
# Grid
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class RefractivityGrid2D:
    """Piecewise-constant complex refractivity over (column, layer) cells.

    Parameters
    ----------
    x_edges : array_like
        Horizontal cell edges in km, strictly ascending.
    h_edges : array_like
        Altitude cell edges in km, strictly ascending.
    n, kappa : array_like
        Arrays of shape ``(len(x_edges) - 1, len(h_edges) - 1)``.
    """

    x_edges: np.ndarray
    h_edges: np.ndarray
    n: np.ndarray
    kappa: np.ndarray

    def __post_init__(self):
        xe = np.array(self.x_edges, dtype=float)
        he = np.array(self.h_edges, dtype=float)
        n = np.array(self.n, dtype=float)
        kappa = np.array(self.kappa, dtype=float)
        for name, e in (("x_edges", xe), ("h_edges", he)):
            if e.ndim != 1 or e.size < 2:
                raise ValueError(f"{name} needs at least two edges")
            if not np.all(np.isfinite(e)) or not np.all(np.diff(e) > 0):
                raise ValueError(f"{name} must be finite and strictly ascending")
        shape = (xe.size - 1, he.size - 1)
        if n.shape != shape or kappa.shape != shape:
            raise DimensionMismatch(
                f"cells have shape {n.shape}/{kappa.shape}, edges imply {shape}"
            )
        if not (np.all(np.isfinite(n)) and np.all(np.isfinite(kappa))):
            raise ValueError("non-finite cell values")
        if np.any(n < 0) or np.any(kappa < 0):
            raise ValueError("cells need n >= 0 and kappa >= 0")
        for arr in (xe, he, n, kappa):
            arr.setflags(write=False)
        object.__setattr__(self, "x_edges", xe)
        object.__setattr__(self, "h_edges", he)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "kappa", kappa)
        cells = tuple(
            tuple(ComplexRefractivity(float(n[i, j]), float(kappa[i, j]))
                  for j in range(shape[1]))
            for i in range(shape[0])
        )
        object.__setattr__(self, "_cells", cells)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.n.shape

    @property
    def x_centers(self) -> np.ndarray:
        return 0.5 * (self.x_edges[1:] + self.x_edges[:-1])

    @property
    def h_centers(self) -> np.ndarray:
        return 0.5 * (self.h_edges[1:] + self.h_edges[:-1])

    def cell(self, i: int, j: int) -> ComplexRefractivity:
        return self._cells[i][j]

    def column_index(self, x: float, direction: float = 1.0) -> int:
        """Column containing ``x``; points outside the grid clamp to the edge.

        On an edge, the column on the side of ``direction`` is returned.
        """
        side = "right" if direction >= 0 else "left"
        i = int(np.searchsorted(self.x_edges, x, side=side)) - 1
        return min(max(i, 0), self.shape[0] - 1)

    def check_atmospheric(self):
        if self.n.min() < N_MIN_ATM or self.n.max() > N_MAX_ATM:
            raise ValueError("grid n outside atmospheric range [1, 1.001]")
        if self.kappa.max() > KAPPA_MAX_ATM:
            raise ValueError("grid kappa above atmospheric bound 1e-5")
        return self

    def __eq__(self, other):
        if not isinstance(other, RefractivityGrid2D):
            return NotImplemented
        return all(
            np.array_equal(a, b)
            for a, b in zip(
                (self.x_edges, self.h_edges, self.n, self.kappa),
                (other.x_edges, other.h_edges, other.n, other.kappa),
            )
        )

    __hash__ = None


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def save_grid(grid: RefractivityGrid2D, path):
    """Write ``grid`` in the ``NPWGRID v1`` text format."""
    nx, nh = grid.shape
    lines = [GRID_MAGIC, f"{nx} {nh}",
             " ".join(_fmt(v) for v in grid.x_edges),
             " ".join(_fmt(v) for v in grid.h_edges)]
    for i in range(nx):
        for j in range(nh):
            lines.append(f"{i} {j} {_fmt(grid.n[i, j])} {_fmt(grid.kappa[i, j])}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _parse_floats(text: str, lineno: int) -> List[float]:
    try:
        vals = [float(t) for t in text.split()]
    except ValueError as exc:
        raise GridFormatError(str(exc), lineno) from None
    if not all(math.isfinite(v) for v in vals):
        raise GridFormatError("non-finite value", lineno)
    return vals


def load_grid(path) -> RefractivityGrid2D:
    """Read a grid written by :func:`save_grid`."""
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0].strip() != GRID_MAGIC:
        raise GridFormatError(f"expected header {GRID_MAGIC!r}", 1)
    if len(lines) < 4:
        raise GridFormatError("truncated header", len(lines) + 1)
    try:
        nx, nh = (int(t) for t in lines[1].split())
    except ValueError:
        raise GridFormatError("expected 'nx nh'", 2) from None
    if nx < 1 or nh < 1:
        raise GridFormatError("dimensions must be positive", 2)
    x_edges = _parse_floats(lines[2], 3)
    h_edges = _parse_floats(lines[3], 4)
    if len(x_edges) != nx + 1:
        raise DimensionMismatch(f"{len(x_edges)} x edges for nx={nx}", 3)
    if len(h_edges) != nh + 1:
        raise DimensionMismatch(f"{len(h_edges)} h edges for nh={nh}", 4)
    body = [(k + 5, ln) for k, ln in enumerate(lines[4:]) if ln.strip()]
    if len(body) != nx * nh:
        raise DimensionMismatch(
            f"header declares {nx}x{nh}={nx * nh} cells, file has {len(body)}",
            body[-1][0] if body else 5,
        )
    n = np.full((nx, nh), np.nan)
    kappa = np.full((nx, nh), np.nan)
    for lineno, ln in body:
        parts = ln.split()
        if len(parts) != 4:
            raise GridFormatError("expected 'i j n kappa'", lineno)
        try:
            i, j = int(parts[0]), int(parts[1])
        except ValueError:
            raise GridFormatError("bad cell index", lineno) from None
        nv, kv = _parse_floats(" ".join(parts[2:]), lineno)
        if not (0 <= i < nx and 0 <= j < nh):
            raise DimensionMismatch(f"cell index ({i}, {j}) out of range", lineno)
        if kv < 0:
            raise GridFormatError(f"kappa < 0 ({kv!r})", lineno)
        if nv < 0:
            raise GridFormatError(f"n < 0 ({nv!r})", lineno)
        if not np.isnan(n[i, j]):
            raise GridFormatError(f"duplicate cell ({i}, {j})", lineno)
        n[i, j], kappa[i, j] = nv, kv
    try:
        return RefractivityGrid2D(x_edges, h_edges, n, kappa)
    except ValueError as exc:
        raise GridFormatError(str(exc)) from None


# ---------------------------------------------------------------------------
# Station profiles and IDW
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StationProfile:
    """Altitude-ordered profile ``[(h_m, ComplexRefractivity), ...]`` at ``x`` km."""

    x: float
    samples: Tuple[Tuple[float, ComplexRefractivity], ...]

    def __post_init__(self):
        samples = tuple((float(h), v) for h, v in self.samples)
        if not samples:
            raise ValueError("station profile needs at least one sample")
        hs = [h for h, _ in samples]
        if any(b <= a for a, b in zip(hs, hs[1:])):
            raise ValueError("station samples must be strictly increasing in altitude")
        object.__setattr__(self, "samples", samples)

    @property
    def altitudes(self) -> Tuple[float, ...]:
        return tuple(h for h, _ in self.samples)

    def at(self, h_m: float) -> ComplexRefractivity:
        """Linear interpolation in altitude, clamped at both ends."""
        hs = self.altitudes
        ns = [v.n for _, v in self.samples]
        ks = [v.kappa for _, v in self.samples]
        return ComplexRefractivity(float(np.interp(h_m, hs, ns)),
                                   float(np.interp(h_m, hs, ks)))


def idw_interpolate(stations: Sequence[StationProfile], x_query: float,
                    power: float = 2.0) -> StationProfile:
    """Inverse-distance-weighted profile at ``x_query``.

    Weights are ``|x_query - x_i|**-power``. A query that coincides with a
    station returns that station's profile unchanged. All stations must share
    the same altitude sampling.
    """
    if not stations:
        raise ValueError("idw_interpolate needs at least one station")
    if power <= 0:
        raise ValueError(f"power must be > 0, got {power}")
    alts = stations[0].altitudes
    for s in stations[1:]:
        if s.altitudes != alts:
            raise ValueError("stations must share a common altitude sampling")
    for s in stations:
        if s.x == x_query:
            return StationProfile(x_query, s.samples)
    d = np.array([abs(x_query - s.x) for s in stations])
    # scale by the nearest distance so tiny separations cannot overflow
    w = (d.min() / d) ** power
    w /= w.sum()
    n = np.array([[v.n for _, v in s.samples] for s in stations])
    k = np.array([[v.kappa for _, v in s.samples] for s in stations])
    n_q = w @ n
    k_q = w @ k
    # a convex combination cannot leave the station envelope; clip rounding
    n_q = np.clip(n_q, n.min(axis=0), n.max(axis=0))
    k_q = np.clip(k_q, k.min(axis=0), k.max(axis=0))
    return StationProfile(
        x_query,
        tuple((h, ComplexRefractivity(float(a), float(b)))
              for h, a, b in zip(alts, n_q, k_q)),
    )


def grid_from_stations(stations: Sequence[StationProfile], x_edges, h_edges,
                       power: float = 2.0) -> RefractivityGrid2D:
    """Fill a grid by IDW at each column centre, sampled at layer midpoints."""
    x_edges = np.asarray(x_edges, float)
    h_edges = np.asarray(h_edges, float)
    xc = 0.5 * (x_edges[1:] + x_edges[:-1])
    hc_m = 0.5 * (h_edges[1:] + h_edges[:-1]) * 1000.0
    n = np.empty((xc.size, hc_m.size))
    kappa = np.empty_like(n)
    for i, x in enumerate(xc):
        prof = idw_interpolate(stations, float(x), power)
        for j, h in enumerate(hc_m):
            v = prof.at(float(h))
            n[i, j], kappa[i, j] = v.n, v.kappa
    return RefractivityGrid2D(x_edges, h_edges, n, kappa)


def build_from_weather(columns: Sequence[Tuple[float, Sequence[WeatherSample]]],
                       coeffs: AttenuationCoefficients, h_edges, x_edges,
                       f: float = 18e9, rain_height_km: Optional[float] = None
                       ) -> RefractivityGrid2D:
    """Compose a complex refractivity grid from weather columns.

    Each grid column takes the weather column nearest its centre. Weather is
    interpolated linearly onto the layer midpoints, clamping below the
    lowest sample. The real part comes from the dry + vapour refractivity
    formula; ``kappa`` sums clear-air, liquid-cloud and rain attenuation.

    ``rain_height_km`` selects the uniform precipitation layer model: when
    given, every layer below it carries the column's lowest-sample rain rate
    and layers above carry none. When ``None`` the per-sample rain rates are
    interpolated like the other variables.
    """
    coeffs.check_frequency(f)
    if not columns:
        raise ValueError("need at least one weather column")
    x_edges = np.asarray(x_edges, float)
    h_edges = np.asarray(h_edges, float)
    prepared = []
    for x, samples in columns:
        samples = sorted(samples, key=lambda s: s.h)
        if not samples:
            raise ValueError(f"weather column at x={x} km is empty")
        prepared.append((float(x), samples))
    xs = np.array([x for x, _ in prepared])
    xc = 0.5 * (x_edges[1:] + x_edges[:-1])
    hc_m = 0.5 * (h_edges[1:] + h_edges[:-1]) * 1000.0
    n = np.empty((xc.size, hc_m.size))
    kappa = np.empty_like(n)
    for i, x in enumerate(xc):
        _, samples = prepared[int(np.argmin(np.abs(xs - x)))]
        for j, h in enumerate(hc_m):
            s = _interp_samples(samples, float(h))
            rain = None
            if rain_height_km is not None:
                rain = samples[0].R if h <= rain_height_km * 1000.0 else 0.0
            v = weather_to_index(s, coeffs, f, rain)
            n[i, j], kappa[i, j] = v.n, v.kappa
    return RefractivityGrid2D(x_edges, h_edges, n, kappa)


WEATHER_HEADER = ["x_km", "h_m", "P_Pa", "T_K", "RH_pct", "Wliq_gm3", "Wice_gm3", "R_mmh"]


def read_weather_csv(path) -> List[Tuple[float, List[WeatherSample]]]:
    """Read a weather column CSV; rows are grouped into columns by ``x_km``."""
    cols: Dict[float, List[WeatherSample]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != WEATHER_HEADER:
            raise GridFormatError(f"expected header {','.join(WEATHER_HEADER)}", 1)
        for lineno, row in enumerate(reader, 2):
            if not row or not "".join(row).strip():
                continue
            if len(row) != len(WEATHER_HEADER):
                raise GridFormatError(f"expected {len(WEATHER_HEADER)} fields", lineno)
            try:
                x, h, P, T, RH, wl, wi, R = (float(v) for v in row)
                sample = WeatherSample(P, T, RH, wl, wi, R, h)
            except ValueError as exc:
                raise GridFormatError(str(exc), lineno) from None
            cols.setdefault(x, []).append(sample)
    return sorted(cols.items())


def write_weather_csv(columns: Iterable[Tuple[float, Sequence[WeatherSample]]], path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(WEATHER_HEADER)
        for x, samples in columns:
            for s in samples:
                w.writerow([repr(float(v)) for v in
                            (x, s.h, s.P, s.T, s.RH, s.W_liq, s.W_ice, s.R)])


STATION_HEADER = ["x_km", "h_m", "n", "kappa"]


def read_station_csv(path) -> List[StationProfile]:
    """Read station profiles from CSV with header ``x_km,h_m,n,kappa``."""
    rows: Dict[float, List[Tuple[float, ComplexRefractivity]]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != STATION_HEADER:
            raise GridFormatError(f"expected header {','.join(STATION_HEADER)}", 1)
        for lineno, row in enumerate(reader, 2):
            if not row:
                continue
            try:
                x, h, nv, kv = (float(v) for v in row)
                rows.setdefault(x, []).append((h, ComplexRefractivity(nv, kv)))
            except ValueError as exc:
                raise GridFormatError(str(exc), lineno) from None
    return [StationProfile(x, tuple(sorted(s, key=lambda t: t[0])))
            for x, s in sorted(rows.items())]


# ---------------------------------------------------------------------------
# Synthetic scenarios
# ---------------------------------------------------------------------------

# Reference atmosphere of ITU-R P.453: N0 = 315, scale height 7.35 km.
REF_N0 = 315.0
REF_SCALE_HEIGHT_KM = 7.35
# Extinction coefficient range reported for the NWP-derived field.
KAPPA_LIGHT = 4.79e-10
KAPPA_HEAVY = 2.24e-7


def _edges(lo, hi, step):
    count = int(round((hi - lo) / step))
    return np.linspace(lo, hi, count + 1)


def exponential_clear(N0=REF_N0, H=REF_SCALE_HEIGHT_KM, kappa0=KAPPA_LIGHT,
                      x_edges=None, h_edges=None) -> RefractivityGrid2D:
    """Horizontally uniform exponential atmosphere.

    ``n(h) = 1 + N0*1e-6*exp(-h/H)`` evaluated at layer midpoints, constant
    ``kappa0``. Defaults span x in [-200, 200] km (10 km columns) and
    altitudes 0..10 km in 100 m layers.
    """
    if N0 < 0 or H <= 0 or kappa0 < 0:
        raise ValueError("exponential_clear needs N0 >= 0, H > 0, kappa0 >= 0")
    x_edges = _edges(-200.0, 200.0, 10.0) if x_edges is None else np.asarray(x_edges, float)
    h_edges = _edges(0.0, 10.0, 0.1) if h_edges is None else np.asarray(h_edges, float)
    hc = 0.5 * (h_edges[1:] + h_edges[:-1])
    n_col = 1.0 + N0 * 1e-6 * np.exp(-hc / H)
    n = np.tile(n_col, (x_edges.size - 1, 1))
    kappa = np.full_like(n, kappa0)
    return RefractivityGrid2D(x_edges, h_edges, n, kappa).check_atmospheric()


def rain_cell(N0=REF_N0, H=REF_SCALE_HEIGHT_KM, kappa_clear=KAPPA_LIGHT,
              kappa_rain=KAPPA_HEAVY, cell_x=(-40.0, 40.0), rain_height_km=4.0,
              x_edges=None, h_edges=None) -> RefractivityGrid2D:
    """Exponential clear atmosphere plus a rectangular rain region.

    The rain region spans ``cell_x`` horizontally (cell centres inside the
    interval) and runs from the ground to ``rain_height_km``, so along any
    descending ray inside it ``kappa`` never decreases.
    """
    if kappa_rain < kappa_clear:
        raise ValueError("kappa_rain must be >= kappa_clear")
    if cell_x[1] <= cell_x[0] or rain_height_km <= 0:
        raise ValueError("rain cell needs a non-empty extent")
    base = exponential_clear(N0, H, kappa_clear, x_edges, h_edges)
    kappa = np.array(base.kappa)
    in_x = (base.x_centers >= cell_x[0]) & (base.x_centers <= cell_x[1])
    in_h = base.h_centers <= rain_height_km
    kappa[np.ix_(in_x, in_h)] = kappa_rain
    return RefractivityGrid2D(base.x_edges, base.h_edges, base.n, kappa).check_atmospheric()


def two_layer(n1=1.0001, kappa1=1e-8, n2=1.0002, kappa2=1e-7, h_interface=5.0,
              top=10.0, x_edges=(-1000.0, 1000.0)) -> RefractivityGrid2D:
    """Two homogeneous layers: ``(n1, kappa1)`` on top, ``(n2, kappa2)`` below."""
    if not 0 < h_interface < top:
        raise ValueError("interface must lie strictly inside (0, top)")
    x_edges = np.asarray(x_edges, float)
    nx = x_edges.size - 1
    n = np.tile([n2, n1], (nx, 1))
    kappa = np.tile([kappa2, kappa1], (nx, 1))
    return RefractivityGrid2D(x_edges, [0.0, h_interface, top], n, kappa)


def vacuum(x_edges=(-1000.0, 1000.0), h_edges=(0.0, 10.0)) -> RefractivityGrid2D:
    x_edges = np.asarray(x_edges, float)
    h_edges = np.asarray(h_edges, float)
    shape = (x_edges.size - 1, h_edges.size - 1)
    return RefractivityGrid2D(x_edges, h_edges, np.ones(shape), np.zeros(shape))


SCENARIOS = {
    "exponential_clear": exponential_clear,
    "rain_cell": rain_cell,
    "two_layer": two_layer,
    "vacuum": vacuum,
}


def synthetic_scenario(kind: str, **params) -> RefractivityGrid2D:
    """Build one of the synthetic fixtures by name."""
    try:
        factory = SCENARIOS[kind]
    except KeyError:
        raise ValueError(f"unknown scenario {kind!r}; choose from {sorted(SCENARIOS)}") from None
    try:
        return factory(**params)
    except TypeError as exc:
        raise ValueError(f"invalid parameters for {kind}: {exc}") from None
