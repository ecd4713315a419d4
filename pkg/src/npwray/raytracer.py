"""Layer-marching ray tracer and downlink pointing solver.

Rays descend through a :class:`~npwray.field.RefractivityGrid2D`. Inside a
cell the geometric path follows the phase direction ``theta``; at every
altitude edge the transmitted wave comes from the selected interface method.
Crossing a column edge swaps the host medium but keeps the ray's phase and
attenuation directions, so no refraction is applied there.

Boresight error is the launch-angle correction: the angle a transmitter at
the satellite must point at to hit the receiver, minus the straight-line
(vacuum) angle. ``mode="arrival"`` instead compares the arrival angle at the
receiver with the straight-line angle.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

from . import solver
from .errors import (
    NoBracket,
    NonConvergence,
    NPWError,
    SegmentOverflow,
    TotalInternalReflection,
)
from .field import DB_PER_NEPER, ComplexRefractivity, RefractivityGrid2D, wavenumber
from .solver import ApparentWave, MediumPair

DEFAULT_FREQ = 18e9
DEFAULT_SAT_H = 10.0


class MethodKind(str, enum.Enum):
    UNIFORM = "UniformPW"
    NAIVE_EXTENDED = "NaiveExtended"
    STABLE = "StableNPW"

    @classmethod
    def parse(cls, text):
        if isinstance(text, cls):
            return text
        for m in cls:
            if text.lower() in (m.value.lower(), m.name.lower()):
                return m
        raise ValueError(f"unknown method {text!r}; choose from {[m.value for m in cls]}")


ALL_METHODS = tuple(MethodKind)


@dataclass(frozen=True)
class RaySegment:
    start: Tuple[float, float]
    end: Tuple[float, float]
    wave: ApparentWave
    length: float
    segment_loss_db: float
    interface_tau_db: float = 0.0


@dataclass(frozen=True)
class RayPath:
    method: MethodKind
    segments: Tuple[RaySegment, ...]
    landing_x: float
    total_loss_db: float

    @property
    def interface_loss_db(self) -> float:
        return math.fsum(s.interface_tau_db for s in self.segments)

    @property
    def arrival_theta(self) -> float:
        """Signed phase angle from vertical of the last segment (rad)."""
        s = self.segments[-1]
        return math.copysign(s.wave.theta, s.end[0] - s.start[0])


@dataclass(frozen=True)
class LinkResult:
    method: MethodKind
    theta_inc: float
    boresight_error: float = math.nan
    total_loss_db: float = math.nan
    iterations: int = 0
    launch_theta: float = math.nan
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None


def uniform_interface(m1: ComplexRefractivity, m2: ComplexRefractivity,
                      theta_i: float) -> Tuple[float, float]:
    """Real Snell refraction with aligned phase and attenuation directions.

    Returns ``(theta_t, kappa_eff)``; the attenuation below is ``kappa2``.
    """
    s = m1.n * math.sin(theta_i) / m2.n
    if s >= 1.0:
        raise TotalInternalReflection(f"n1*sin(theta_i)/n2 = {s!r} >= 1")
    return math.asin(s), m2.kappa


def _tau_db(tau: complex) -> float:
    return -DB_PER_NEPER * math.log(abs(tau))


class _Stepper:
    """Per-method wave bookkeeping for :func:`trace_ray`."""

    def __init__(self, method: MethodKind):
        self.method = method

    def launch(self, medium, theta):
        return ApparentWave(medium.n, medium.kappa, theta, theta)

    def swap(self, wave, medium):
        if self.method is MethodKind.UNIFORM:
            return ApparentWave(medium.n, medium.kappa, wave.theta, wave.theta)
        if self.method is MethodKind.STABLE:
            return solver.medium1_apparent(medium, wave.theta, wave.psi)
        return solver.medium1_apparent_naive(medium, wave.theta, wave.psi, "extended")

    def cross(self, wave, m1, m2):
        if self.method is MethodKind.UNIFORM:
            th, k_eff = uniform_interface(m1, m2, wave.theta)
            t = ApparentWave(m2.n, k_eff, th, th)
        elif self.method is MethodKind.STABLE:
            t = solver.medium2_apparent_stable(wave.Ns, wave.Ks, m2)
        else:
            t = solver.medium2_apparent_naive(wave.Ns, wave.Ks, m2, "extended")
        _, tau = solver.fresnel_npw(wave, MediumPair(m1, m2), t)
        return t, tau

    @staticmethod
    def k_eff(wave):
        return solver.effective_attenuation(wave)


def trace_ray(grid: RefractivityGrid2D, start: Tuple[float, float], launch_theta: float,
              f: float = DEFAULT_FREQ, method=MethodKind.STABLE, *,
              include_tau: bool = True, max_segments: int = 100_000) -> RayPath:
    """March a ray from ``start`` = (x km, h km) down to the ground.

    ``launch_theta`` is measured from the downward vertical (rad); its sign
    sets the direction of lateral motion. A start above the grid top travels
    through vacuum first and is refracted into the top layer; a start on the
    top edge is launched as a uniform wave inside the top layer.

    Raises
    ------
    TotalInternalReflection
        With ``depth_km`` set to the altitude of the reflecting edge.
    SegmentOverflow
        More than ``max_segments`` segments.
    """
    method = MethodKind.parse(method)
    if not abs(launch_theta) < math.pi / 2:
        raise ValueError("|launch_theta| must be < 90 deg")
    x, h = float(start[0]), float(start[1])
    h_edges = grid.h_edges
    top = float(h_edges[-1])
    if h < top:
        raise ValueError(f"start altitude {h} km is below the grid top {top} km")
    k0 = wavenumber(f)
    sgn = 1.0 if launch_theta >= 0 else -1.0
    theta = abs(launch_theta)
    step = _Stepper(method)
    segments: List[RaySegment] = []
    total = []

    def add(x0, h0, x1, h1, wave, tau_db):
        l_m = math.hypot(x1 - x0, h1 - h0) * 1000.0
        loss = DB_PER_NEPER * k0 * step.k_eff(wave) * l_m
        segments.append(RaySegment((x0, h0), (x1, h1), wave, l_m, loss, tau_db))
        total.append(loss)
        total.append(tau_db)
        if len(segments) > max_segments:
            raise SegmentOverflow(f"more than {max_segments} segments")

    col = grid.column_index(x, sgn)
    j = grid.shape[1] - 1
    medium = grid.cell(col, j)
    pending_tau = 0.0
    if h > top:
        x_top = x + sgn * (h - top) * math.tan(theta)
        add(x, h, x_top, top, ApparentWave(1.0, 0.0, theta, theta), 0.0)
        x, h = x_top, top
        col = grid.column_index(x, sgn)
        medium = grid.cell(col, j)
        try:
            wave, tau = step.cross(ApparentWave(1.0, 0.0, theta, theta),
                                   ComplexRefractivity(1.0, 0.0), medium)
        except TotalInternalReflection as exc:
            raise TotalInternalReflection(str(exc), depth_km=top) from None
        pending_tau = _tau_db(tau) if include_tau else 0.0
    else:
        wave = step.launch(medium, theta)

    x_edges = grid.x_edges
    nx = grid.shape[0]
    while True:
        h_bot = float(h_edges[j])
        tan_t = math.tan(wave.theta)
        # cross column edges inside this layer
        while tan_t > 0.0:
            nxt = col + 1 if sgn > 0 else col
            if not 0 < nxt < nx:
                break
            x_edge = float(x_edges[nxt])
            h_cross = h - abs(x_edge - x) / tan_t
            if h_cross <= h_bot:
                break
            add(x, h, x_edge, h_cross, wave, pending_tau)
            pending_tau = 0.0
            x, h = x_edge, h_cross
            col += int(sgn)
            medium = grid.cell(col, j)
            wave = step.swap(wave, medium)
        x_bot = x + sgn * (h - h_bot) * tan_t
        add(x, h, x_bot, h_bot, wave, pending_tau)
        pending_tau = 0.0
        x, h = x_bot, h_bot
        if j == 0:
            break
        below = grid.cell(col, j - 1)
        if below != medium:
            try:
                wave, tau = step.cross(wave, medium, below)
            except TotalInternalReflection as exc:
                raise TotalInternalReflection(str(exc), depth_km=h) from None
            pending_tau = _tau_db(tau) if include_tau else 0.0
        j -= 1
        medium = below
    return RayPath(method, tuple(segments), x, math.fsum(total))


def geometric_angle(sat: Tuple[float, float], rx: Tuple[float, float]) -> float:
    """Straight-line launch angle from vertical (rad), signed by direction."""
    return math.atan2(rx[0] - sat[0], sat[1] - rx[1])


def shoot_to_receiver(grid: RefractivityGrid2D, sat: Tuple[float, float],
                      rx: Tuple[float, float], f: float = DEFAULT_FREQ,
                      method=MethodKind.STABLE, tol_m: float = 1.0, max_iter: int = 50,
                      include_tau: bool = True) -> Tuple[float, RayPath, int]:
    """Find the launch angle whose ray lands within ``tol_m`` of the receiver.

    The search starts at the straight-line angle, brackets it by +-0.5 deg
    (widened once to +-2 deg if needed) and refines with a bracketed secant
    (Illinois) iteration.

    Returns
    -------
    launch_theta : float
        Signed launch angle from vertical (rad).
    path : RayPath
        The converged ray.
    iterations : int
        Number of rays traced.
    """
    if rx[1] != 0.0:
        raise ValueError("receiver must be on the ground (h = 0)")
    theta_g = geometric_angle(sat, rx)
    if abs(theta_g) >= math.radians(89.5):
        raise ValueError("straight-line angle too close to horizontal")
    limit = math.radians(89.9)
    count = 0

    def landing(theta):
        nonlocal count
        count += 1
        if count > max_iter:
            raise NonConvergence(f"no convergence within {max_iter} rays")
        p = trace_ray(grid, sat, theta, f, method, include_tau=include_tau)
        return (p.landing_x - rx[0]) * 1000.0, p

    f_g, p_g = landing(theta_g)
    if abs(f_g) <= tol_m:
        return theta_g, p_g, count

    for half_width in (math.radians(0.5), math.radians(2.0)):
        lo = max(theta_g - half_width, -limit)
        hi = min(theta_g + half_width, limit)
        # landing x grows with theta; place theta_g on the side its residual says
        if f_g > 0:
            a, fa, pa = lo, *landing(lo)
            b, fb, pb = theta_g, f_g, p_g
        else:
            a, fa, pa = theta_g, f_g, p_g
            b, fb, pb = hi, *landing(hi)
        if fa <= 0 <= fb:
            break
    else:
        raise NoBracket("refraction pushes the ray outside the search bracket")

    side = 0
    while True:
        for fx, px, th in ((fa, pa, a), (fb, pb, b)):
            if abs(fx) <= tol_m:
                return th, px, count
        c = b - fb * (b - a) / (fb - fa)
        if not a < c < b:
            c = 0.5 * (a + b)
        fc, pc = landing(c)
        if abs(fc) <= tol_m:
            return c, pc, count
        if fc < 0:
            a, fa, pa = c, fc, pc
            if side == -1:
                fb *= 0.5
            side = -1
        else:
            b, fb, pb = c, fc, pc
            if side == 1:
                fa *= 0.5
            side = 1


def boresight_error(grid: RefractivityGrid2D, sat, rx, f: float = DEFAULT_FREQ,
                    method=MethodKind.STABLE, mode: str = "launch", tol_m: float = 1.0,
                    include_tau: bool = True) -> float:
    """Boresight error in degrees (signed).

    ``mode="launch"`` (default): required launch angle minus straight-line
    angle. ``mode="arrival"``: arrival angle at the receiver minus the
    straight-line angle.
    """
    theta, path, _ = shoot_to_receiver(grid, sat, rx, f, method, tol_m,
                                       include_tau=include_tau)
    return _boresight(theta, path, geometric_angle(sat, rx), mode)


def _boresight(theta, path, theta_g, mode):
    if mode == "launch":
        return math.degrees(theta - theta_g)
    if mode == "arrival":
        return math.degrees(path.arrival_theta - theta_g)
    raise ValueError(f"mode must be 'launch' or 'arrival', got {mode!r}")


def _link_one(grid, rx, f, theta_inc, method, sat_h, tol_m, mode, include_tau):
    method = MethodKind.parse(method)
    sat = (rx[0] - sat_h * math.tan(math.radians(theta_inc)), sat_h)
    try:
        theta, path, it = shoot_to_receiver(grid, sat, rx, f, method, tol_m,
                                            include_tau=include_tau)
    except (NPWError, ValueError) as exc:
        return LinkResult(method, theta_inc, error=f"{type(exc).__name__}: {exc}")
    b = _boresight(theta, path, geometric_angle(sat, rx), mode)
    return LinkResult(method, theta_inc, b, path.total_loss_db, it, theta)


def link_sweep(grid: RefractivityGrid2D, rx, f: float = DEFAULT_FREQ,
               thetas: Sequence[float] = (), methods: Sequence = ALL_METHODS, *,
               sat_h: float = DEFAULT_SAT_H, tol_m: float = 1.0, mode: str = "launch",
               include_tau: bool = True, threads: int = 1) -> List[LinkResult]:
    """Boresight error and loss for each (incidence angle, method) pair.

    The satellite sits at altitude ``sat_h`` km so that the straight line to
    the receiver makes ``theta_inc`` degrees with the vertical. Failures are
    recorded in :attr:`LinkResult.error` rather than raised. Results are
    ordered theta-major, method-minor, regardless of ``threads``.
    """
    rx = (float(rx[0]), 0.0) if not isinstance(rx, tuple) else rx
    jobs = [(t, m) for t in thetas for m in methods]
    args = (grid, rx, f)
    tail = (sat_h, tol_m, mode, include_tau)
    if threads <= 1:
        return [_link_one(*args, t, m, *tail) for t, m in jobs]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(lambda job: _link_one(*args, job[0], job[1], *tail), jobs))
