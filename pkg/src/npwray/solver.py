"""Interface solvers for non-uniform plane waves (NPW).

A plane wave in a medium with complex index ``n - j*kappa`` is written as
``k = k0*(N*e - j*K*f)`` with unit phase and attenuation directions ``e`` and
``f``. The apparent indices satisfy the dispersion pair

    N**2 - K**2 = n**2 - kappa**2
    N*K*cos(theta - psi) = n*kappa

where ``theta`` and ``psi`` are the angles of ``e`` and ``f`` from the
interface normal. Across an interface the tangential components
``Ns = N*sin(theta)`` and ``Ks = K*sin(psi)`` are conserved.

Three independent routes solve the transmitted wave:

* :func:`medium2_apparent_stable` -- cancellation-free double precision;
* :func:`medium2_apparent_naive` -- the textbook route, which recovers ``K``
  from ``N**2 - n**2 + kappa**2`` and therefore loses every significant digit
  when ``kappa << n`` in double precision;
* :func:`medium2_oracle_hp` -- complex tangential wavevector matching carried
  out at 40 significant digits.

Angle convention
----------------
``theta`` lies in ``[0, pi/2)``. ``psi`` is the true direction of the
attenuation vector, ``atan2(Ks, Kz)``. When the medium below is much less
lossy than the medium above, the normal attenuation component ``Kz`` is
negative and ``|psi|`` exceeds ``pi/2``. The apparent-angle misalignment
reported by :func:`effective_attenuation` folds that direction back into
``[-pi/2, pi/2]`` (``psi_t = asin(Ks/K)``), which is the quantity the
single-interface studies plot.
"""

from __future__ import annotations

import cmath
import math
import threading
from dataclasses import dataclass
from typing import NamedTuple, Tuple

import mpmath

from .errors import (
    CancellationUnderflow,
    GrazingDegenerate,
    NoPhysicalRoot,
    TotalInternalReflection,
)
from .field import ComplexRefractivity

# Branch seams for the medium-I K**2 expressions, on r = a*c/b.
R_ASYMPTOTIC_HIGH = 1e8
R_ASYMPTOTIC_LOW = 1e-8
C_FORM_MIN_COS = 1e-6

DISPERSION_TOL = 1e-10
CROSS_TOL = 1e-10

EXTENDED_DPS = 40
_mp = mpmath.MPContext()
_mp.dps = EXTENDED_DPS


@dataclass(frozen=True)
class ApparentWave:
    """Propagating NPW state: apparent indices and direction angles (rad)."""

    N: float
    K: float
    theta: float
    psi: float

    @property
    def Ns(self) -> float:
        return self.N * math.sin(self.theta)

    @property
    def Ks(self) -> float:
        return self.K * math.sin(self.psi)

    @property
    def psi_folded(self) -> float:
        """Attenuation angle folded into ``[-pi/2, pi/2]``, i.e. ``asin(Ks/K)``."""
        if abs(self.psi) > math.pi / 2:
            return math.copysign(math.pi, self.psi) - self.psi
        return self.psi

    @property
    def alpha(self) -> float:
        """Phase/attenuation misalignment ``theta - psi_folded``."""
        return self.theta - self.psi_folded


@dataclass(frozen=True)
class MediumPair:
    m1: ComplexRefractivity
    m2: ComplexRefractivity


class QuarticCoeffs(NamedTuple):
    A: float
    B: float
    D: float


@dataclass(frozen=True)
class InterfaceSolution:
    transmitted: ApparentWave
    effective_attenuation: float
    tau: complex
    gamma_r: complex


# ---------------------------------------------------------------------------
# Diagnostics
# ---------------------------------------------------------------------------


class _Diagnostics:
    """Counters kept per thread and summed on read, so the hot path takes no lock."""

    _KEYS = ("evaluations", "oracle_fallbacks", "cancellation_underflows")

    def __init__(self):
        self._lock = threading.Lock()
        self._local = threading.local()
        self._all = []

    def _mine(self):
        try:
            return self._local.counts
        except AttributeError:
            counts = dict.fromkeys(self._KEYS, 0)
            self._local.counts = counts
            with self._lock:
                self._all.append(counts)
            return counts

    def reset(self):
        with self._lock:
            for counts in self._all:
                for k in self._KEYS:
                    counts[k] = 0

    def bump(self, key):
        self._mine()[key] += 1

    def snapshot(self) -> Tuple[int, int, int]:
        with self._lock:
            return tuple(sum(c[k] for c in self._all) for k in self._KEYS)


_diag = _Diagnostics()


def diagnostics() -> Tuple[int, int, int]:
    """``(evaluations, oracle_fallbacks, cancellation_underflows)`` so far."""
    return _diag.snapshot()


def reset_diagnostics():
    _diag.reset()


# ---------------------------------------------------------------------------
# Medium I
# ---------------------------------------------------------------------------


def k1_squared(a: float, b: float, c: float) -> float:
    """Stable ``K**2`` root of ``c**2*K**4 + a*c**2*K**2 - b**2 = 0``.

    ``a = n**2 - kappa**2``, ``b = n*kappa``, ``c = cos(theta - psi)``.
    The expression is picked from ``r = a*c/b`` so that no branch subtracts
    nearly equal numbers.
    """
    r = a * c / b
    if r > R_ASYMPTOTIC_HIGH:
        return a / (r * r)
    if r < R_ASYMPTOTIC_LOW:
        # two-term expansion; the bare a/r is off by a relative r/2
        return a / r - 0.5 * a
    if r >= 1.0 and c >= C_FORM_MIN_COS:
        x = 2.0 * b / (a * c)
        return 0.5 * a * x * x / (math.sqrt(1.0 + x * x) + 1.0)
    return 2.0 * a / (r * r + r * math.sqrt(r * r + 4.0))


def medium1_apparent(m: ComplexRefractivity, theta_i: float, psi_i: float) -> ApparentWave:
    """Apparent indices of a wave with given directions in medium ``m``."""
    if m.kappa == 0.0:
        return ApparentWave(m.n, 0.0, theta_i, theta_i)
    c = math.cos(theta_i - psi_i)
    if c <= 0.0:
        raise ValueError(
            "attenuation direction must be within 90 deg of the phase direction"
        )
    a = m.n * m.n - m.kappa * m.kappa
    b = m.n * m.kappa
    K2 = k1_squared(a, b, c)
    return ApparentWave(max(math.sqrt(K2 + a), m.n), max(math.sqrt(K2), m.kappa),
                        theta_i, psi_i)


def medium1_apparent_naive(m: ComplexRefractivity, theta_i: float, psi_i: float,
                           precision: str = "working") -> ApparentWave:
    """Textbook medium-I route: ``N**2`` by the quadratic formula, then
    ``K = sqrt(N**2 - n**2 + kappa**2)``."""
    if m.kappa == 0.0:
        return ApparentWave(m.n, 0.0, theta_i, theta_i)
    c = math.cos(theta_i - psi_i)
    if c <= 0.0:
        raise ValueError(
            "attenuation direction must be within 90 deg of the phase direction"
        )
    if precision == "extended":
        mp = _mp
        n, k, cc = mp.mpf(m.n), mp.mpf(m.kappa), mp.cos(mp.mpf(theta_i) - mp.mpf(psi_i))
        a = n * n - k * k
        N2 = (a + mp.sqrt(a * a + 4 * n * n * k * k / (cc * cc))) / 2
        rad = N2 - a
        if rad < 0:
            _diag.bump("cancellation_underflows")
            raise CancellationUnderflow("negative K**2 radicand")
        return ApparentWave(float(mp.sqrt(N2)), float(mp.sqrt(rad)), theta_i, psi_i)
    a = m.n * m.n - m.kappa * m.kappa
    N2 = (a + math.sqrt(a * a + 4.0 * m.n * m.n * m.kappa * m.kappa / (c * c))) / 2.0
    rad = N2 - m.n * m.n + m.kappa * m.kappa
    if rad < 0:
        _diag.bump("cancellation_underflows")
        raise CancellationUnderflow("negative K**2 radicand")
    return ApparentWave(math.sqrt(N2), math.sqrt(rad), theta_i, psi_i)


def launch_wave(m: ComplexRefractivity, theta: float, alpha: float = 0.0) -> ApparentWave:
    """Wave with phase angle ``theta`` and misalignment ``alpha = theta - psi``.

    ``alpha = 0`` gives a uniform wave with ``N = n`` and ``K = kappa``.
    """
    if alpha == 0.0:
        return ApparentWave(m.n, m.kappa, theta, theta)
    return medium1_apparent(m, theta, theta - alpha)


# ---------------------------------------------------------------------------
# Medium II
# ---------------------------------------------------------------------------


def quartic_coefficients(Ns: float, Ks: float, m2: ComplexRefractivity) -> QuarticCoeffs:
    """``A = Ns**2 + Ks**2``, ``B = n2**2 - kappa2**2``, ``D = n2*kappa2 - Ns*Ks``."""
    return QuarticCoeffs(Ns * Ns + Ks * Ks,
                         m2.n * m2.n - m2.kappa * m2.kappa,
                         m2.n * m2.kappa - Ns * Ks)


def quartic_constants(Ns: float, Ks: float, m2: ComplexRefractivity,
                      form: str = "derived") -> Tuple[float, float]:
    """Constant terms ``(c_N, c_K)`` of the reduced quartics.

    The quartics read ``N**4 - (A+B)*N**2 + c_N = 0`` and
    ``K**4 - (A-B)*K**2 + c_K = 0``. ``form="derived"`` follows from the
    dispersion pair with tangential matching:
    ``c_N = Ns**2*(B + Ks**2) - D**2`` and ``c_K = -Ks**2*(B - Ns**2) - D**2``.
    ``form="printed"`` gives ``c_N = A*B - D**2`` and ``c_K = -A*B - D**2``;
    those agree with the derived ones only when ``Ks = 0`` (and, for
    ``c_K``, not even then) and are kept for comparison.
    """
    A, B, D = quartic_coefficients(Ns, Ks, m2)
    if form == "derived":
        return Ns * Ns * (B + Ks * Ks) - D * D, -Ks * Ks * (B - Ns * Ns) - D * D
    if form == "printed":
        return A * B - D * D, -A * B - D * D
    raise ValueError(f"unknown quartic form {form!r}")


def quartic_residuals(wave: ApparentWave, Ns: float, Ks: float, m2: ComplexRefractivity,
                      form: str = "derived") -> Tuple[float, float]:
    """Residuals of the two reduced quartics at the solved ``N**2`` and ``K**2``."""
    A, B, D = quartic_coefficients(Ns, Ks, m2)
    cN, cK = quartic_constants(Ns, Ks, m2, form)
    X = wave.N * wave.N
    Y = wave.K * wave.K
    return X * X - (A + B) * X + cN, Y * Y - (A - B) * Y + cK


_SPLITTER = 134217729.0  # 2**27 + 1


def _two_prod(a: float, b: float) -> Tuple[float, float]:
    """Dekker product: ``p + e == a*b`` exactly."""
    p = a * b
    t = _SPLITTER * a
    ahi = t - (t - a)
    alo = a - ahi
    t = _SPLITTER * b
    bhi = t - (t - b)
    blo = b - bhi
    return p, ((ahi * bhi - p) + ahi * blo + alo * bhi) + alo * blo


def cross_term(n2: float, k2: float, Ns: float, Ks: float) -> float:
    """``D = n2*kappa2 - Ns*Ks`` accurate to a few ulps of the result."""
    D = n2 * k2 - Ns * Ks
    if abs(D) < 1e-3 * abs(n2 * k2):
        p1, e1 = _two_prod(n2, k2)
        p2, e2 = _two_prod(Ns, Ks)
        D = (p1 - p2) + (e1 - e2)
    return D


def _lossless_snell(Ns: float, n2: float) -> ApparentWave:
    if Ns >= n2:
        raise TotalInternalReflection(f"Ns={Ns!r} >= n2={n2!r}")
    th = math.asin(Ns / n2)
    return ApparentWave(n2, 0.0, th, th)


def _other_branches(Ns, Ks, m2, X_hi, Y_hi, P, disc):
    """Try the remaining root pairings; fall back to the oracle if none fit."""
    NsNs, KsKs = Ns * Ns, Ks * Ks
    B = m2.n * m2.n - m2.kappa * m2.kappa
    D = cross_term(m2.n, m2.kappa, Ns, Ks)
    qc = KsKs * (B - NsNs) + D * D
    Y_lo = -qc / Y_hi if Y_hi != 0.0 else 0.0
    X_lo = (NsNs * (B + KsKs) - D * D) / X_hi
    for X, Y in ((X_hi, Y_lo), (X_lo, Y_hi), (X_lo, Y_lo)):
        if Y < 0.0 or X <= NsNs:
            continue
        Nz = math.sqrt(X - NsNs)
        Kz = D / Nz
        if (abs((X - Y) - B) <= DISPERSION_TOL * max(1.0, X)
                and abs(Nz * Kz - D) <= CROSS_TOL * abs(D)):
            return X, Y, Nz, Kz
    _diag.bump("oracle_fallbacks")
    try:
        w = medium2_oracle_hp(Ns, Ks, m2)
    except GrazingDegenerate as exc:
        raise NoPhysicalRoot(str(exc)) from exc
    Nz = w.N * math.cos(w.theta)
    return w.N * w.N, w.K * w.K, Nz, w.K * math.cos(w.psi)


def medium2_apparent_stable(Ns: float, Ks: float, m2: ComplexRefractivity) -> ApparentWave:
    """Transmitted apparent wave from the tangential components, stably.

    Both reduced quartics are quadratics in ``N**2`` and ``K**2`` sharing the
    discriminant ``P**2 + 4*D**2`` with ``P = B - Ns**2 + Ks**2``; it is
    evaluated with ``hypot`` and every root uses the cancellation-free form.
    The admissible pair has ``K**2 >= 0`` and ``N**2 - K**2 = B``. The signed
    normal attenuation follows from ``Nz*Kz = D``.

    Raises
    ------
    TotalInternalReflection
        When ``P <= 0``: the transmitted wave is evanescent.
    NoPhysicalRoot
        When neither branch validates and the oracle also fails.
    """
    _diag._mine()["evaluations"] += 1
    n2, k2 = m2.n, m2.kappa
    if k2 == 0.0 and Ks == 0.0:
        return _lossless_snell(Ns, n2)
    NsNs = Ns * Ns
    KsKs = Ks * Ks
    B = n2 * n2 - k2 * k2
    nk = n2 * k2
    D = nk - Ns * Ks
    if abs(D) < 1e-3 * nk:
        D = cross_term(n2, k2, Ns, Ks)
    P = (B - NsNs) + KsKs
    if P <= 0.0:
        raise TotalInternalReflection(f"evanescent transmission (Re q^2 = {P!r})")
    disc = math.hypot(P, 2.0 * D)
    # K**2 quadratic: Y**2 - (A - B)*Y - qc = 0 with qc >= 0, A = Ns**2 + Ks**2
    p = (NsNs + KsKs) - B
    qc = KsKs * (B - NsNs) + D * D
    Y = 2.0 * qc / (disc - p) if p < 0.0 else 0.5 * (p + disc)
    # larger N**2 root; X - Ns**2 = (P + disc)/2 without the subtraction
    X = 0.5 * ((NsNs + KsKs + B) + disc)
    Nz = math.sqrt(0.5 * (P + disc))
    Kz = D / Nz
    if (abs((X - Y) - B) > DISPERSION_TOL * max(1.0, X)
            or abs(Nz * Kz - D) > CROSS_TOL * abs(D)):
        X, Y, Nz, Kz = _other_branches(Ns, Ks, m2, X, Y, P, disc)
    # exact bounds N >= max(n, Ns), K >= max(kappa, |Ks|); rounding can
    # undershoot them by an ulp
    N2 = max(math.sqrt(X), n2, Ns)
    K2 = max(math.sqrt(Y), k2, abs(Ks))
    theta = math.atan2(Ns, Nz)
    psi = math.atan2(Ks, Kz) if K2 > 0.0 else theta
    return ApparentWave(N2, K2, theta, psi)


def medium2_apparent_naive(Ns: float, Ks: float, m2: ComplexRefractivity,
                           precision: str = "working") -> ApparentWave:
    """Transmitted wave by the cancellation-prone textbook route.

    ``N**2`` is the larger root of the ``N``-quartic from the plain quadratic
    formula and ``K = sqrt(N**2 - n2**2 + kappa2**2)``. With
    ``precision="working"`` this breaks down for small ``kappa``; with
    ``precision="extended"`` every step runs at 40 significant digits and the
    result is a correctness reference.

    Raises
    ------
    CancellationUnderflow
        A radicand came out negative or ``|Ks| > K`` after cancellation.
    """
    if precision not in ("working", "extended"):
        raise ValueError(f"precision must be 'working' or 'extended', got {precision!r}")
    if m2.kappa == 0.0 and Ks == 0.0:
        return _lossless_snell(Ns, m2.n)
    if precision == "extended":
        mp = _mp
        sqrt, asin = mp.sqrt, mp.asin
        Ns_, Ks_, n2, k2 = (mp.mpf(v) for v in (Ns, Ks, m2.n, m2.kappa))
    else:
        sqrt, asin = math.sqrt, math.asin
        Ns_, Ks_, n2, k2 = Ns, Ks, m2.n, m2.kappa
    A = Ns_ * Ns_ + Ks_ * Ks_
    B = n2 * n2 - k2 * k2
    D = n2 * k2 - Ns_ * Ks_
    if B - Ns_ * Ns_ + Ks_ * Ks_ <= 0:
        raise TotalInternalReflection("evanescent transmission")
    S = A + B
    C = Ns_ * Ns_ * (B + Ks_ * Ks_) - D * D
    disc = S * S - 4 * C
    if disc < 0:
        _diag.bump("cancellation_underflows")
        raise CancellationUnderflow("negative discriminant")
    X = (S + sqrt(disc)) / 2
    rad = X - n2 * n2 + k2 * k2
    if rad < 0:
        _diag.bump("cancellation_underflows")
        raise CancellationUnderflow("negative K**2 radicand")
    N2 = sqrt(X)
    K2 = sqrt(rad)
    theta = asin(Ns_ / N2)
    if K2 == 0:
        _diag.bump("cancellation_underflows")
        raise CancellationUnderflow("K collapsed to zero")
    ratio = Ks_ / K2
    if abs(ratio) > 1:
        _diag.bump("cancellation_underflows")
        raise CancellationUnderflow("|Ks| exceeds K")
    psi = float(asin(ratio))
    if D < 0:
        # attenuation points back toward the interface
        psi = math.copysign(math.pi, psi) - psi
    return ApparentWave(float(N2), float(K2), float(theta), psi)


def medium2_oracle_hp(Ns: float, Ks: float, m2: ComplexRefractivity) -> ApparentWave:
    """Reference transmitted wave via complex wavevector matching.

    With ``s = Ns - j*Ks`` the normal component is
    ``q = sqrt(ntilde2**2 - s**2)`` on the principal branch (``Re q >= 0``,
    forward phase progression). Then ``Nz = Re q``, ``Kz = -Im q``,
    ``N = |(Ns, Nz)|``, ``K = |(Ks, Kz)|``. Everything runs at 40 digits and
    is rounded on return.
    """
    mp = _mp
    Ns_, Ks_, n2, k2 = (mp.mpf(v) for v in (Ns, Ks, m2.n, m2.kappa))
    s = mp.mpc(Ns_, -Ks_)
    nt = mp.mpc(n2, -k2)
    q = mp.sqrt(nt * nt - s * s)
    Nz, Kz = q.real, -q.imag
    if Nz == 0 and Kz == 0:
        raise GrazingDegenerate("normal wavenumber vanishes")
    N2 = mp.sqrt(Ns_ * Ns_ + Nz * Nz)
    K2 = mp.sqrt(Ks_ * Ks_ + Kz * Kz)
    theta = mp.atan2(Ns_, Nz)
    psi = mp.atan2(Ks_, Kz) if K2 != 0 else theta
    return ApparentWave(float(N2), float(K2), float(theta), float(psi))


def medium1_oracle_hp(m: ComplexRefractivity, theta_i: float, psi_i: float) -> ApparentWave:
    """Reference medium-I apparent indices: the K**2 quadratic at 40 digits."""
    if m.kappa == 0.0:
        return ApparentWave(m.n, 0.0, theta_i, theta_i)
    mp = _mp
    n, k = mp.mpf(m.n), mp.mpf(m.kappa)
    c = mp.cos(mp.mpf(theta_i) - mp.mpf(psi_i))
    a = n * n - k * k
    b = n * k
    # c^2 Y^2 + a c^2 Y - b^2 = 0
    Y = (-a * c * c + mp.sqrt(a * a * c ** 4 + 4 * c * c * b * b)) / (2 * c * c)
    return ApparentWave(float(mp.sqrt(Y + a)), float(mp.sqrt(Y)), theta_i, psi_i)


# ---------------------------------------------------------------------------
# Fresnel, propagation, attenuation
# ---------------------------------------------------------------------------


def normal_component(wave: ApparentWave) -> complex:
    """Complex normal wavenumber ``Nz - j*Kz`` (in units of k0)."""
    return complex(wave.N * math.cos(wave.theta), -wave.K * math.cos(wave.psi))


def fresnel_npw(incident: ApparentWave, pair: MediumPair,
                solution: ApparentWave) -> Tuple[complex, complex]:
    """Reflection and transmission coefficients ``(gamma_r, tau)``.

    Plane-of-incidence polarization, defined on the transverse electric
    field amplitude, with complex normal wavenumbers ``q1``, ``q2`` and
    permittivities ``eps = ntilde**2``::

        gamma_r = (eps2*q1 - eps1*q2) / (eps2*q1 + eps1*q2)
        tau     = 2*ntilde1*ntilde2*q1 / (eps2*q1 + eps1*q2)

    At normal incidence between lossless media this is
    ``gamma_r = (n2 - n1)/(n1 + n2)`` and ``tau = 2*n1/(n1 + n2)``.
    """
    if pair.m1 == pair.m2:
        return 0j, 1 + 0j
    n1 = pair.m1.complex
    n2 = pair.m2.complex
    q1 = normal_component(incident)
    q2 = normal_component(solution)
    eps1 = n1 * n1
    eps2 = n2 * n2
    den = eps2 * q1 + eps1 * q2
    if abs(den) <= 1e-300 or abs(den) <= 1e-15 * (abs(eps2 * q1) + abs(eps1 * q2)):
        raise GrazingDegenerate("degenerate Fresnel denominator (q1 + q2 ~ 0)")
    return (eps2 * q1 - eps1 * q2) / den, 2.0 * (n1 * n2) * q1 / den


def effective_attenuation(wave: ApparentWave) -> float:
    """Attenuation index projected on the phase direction, ``K*cos(alpha)``."""
    if wave.K == 0.0:
        return 0.0
    return wave.K * math.cos(wave.alpha)


def propagate_field(E: complex, wave: ApparentWave, l: float, k0: float) -> complex:
    """Advance a field amplitude by ``l`` metres along the phase direction."""
    if l < 0 or k0 <= 0:
        raise ValueError("need l >= 0 and k0 > 0")
    return (E * math.exp(-k0 * effective_attenuation(wave) * l)
            * cmath.exp(-1j * k0 * wave.N * l))


# ---------------------------------------------------------------------------
# Convenience
# ---------------------------------------------------------------------------

SOLVERS = {
    "stable": lambda Ns, Ks, m2: medium2_apparent_stable(Ns, Ks, m2),
    "naive": lambda Ns, Ks, m2: medium2_apparent_naive(Ns, Ks, m2, "working"),
    "naive_extended": lambda Ns, Ks, m2: medium2_apparent_naive(Ns, Ks, m2, "extended"),
    "oracle": medium2_oracle_hp,
}


def solve_interface(incident: ApparentWave, pair: MediumPair,
                    solver: str = "stable") -> InterfaceSolution:
    """Transmit ``incident`` across ``pair`` with the named medium-II solver."""
    try:
        fn = SOLVERS[solver]
    except KeyError:
        raise ValueError(f"unknown solver {solver!r}; choose from {sorted(SOLVERS)}") from None
    t = fn(incident.Ns, incident.Ks, pair.m2)
    gamma_r, tau = fresnel_npw(incident, pair, t)
    return InterfaceSolution(t, effective_attenuation(t), tau, gamma_r)
