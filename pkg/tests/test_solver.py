import cmath
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from npwray import solver
from npwray.errors import CancellationUnderflow, NumericalFailure, TotalInternalReflection
from npwray.field import ComplexRefractivity as CR
from npwray.solver import ApparentWave, MediumPair

mp = mpmath.MPContext()
mp.dps = 50
DEG = math.pi / 180


# Independent reference implementations. Medium I: the two dispersion
# relations reduce to c^2 K^4 + a c^2 K^2 - b^2 = 0. Medium II: the complex
# normal wavenumber q = sqrt(ntilde^2 - (Ns - j Ks)^2) on the decaying branch.


def ref_medium1(n, kappa, theta, psi):
    n, k = mp.mpf(n), mp.mpf(kappa)
    c = mp.cos(mp.mpf(theta) - mp.mpf(psi))
    a, b = n * n - k * k, n * k
    K2 = (-a * c * c + mp.sqrt((a * c * c) ** 2 + 4 * c * c * b * b)) / (2 * c * c)
    return float(mp.sqrt(K2 + a)), float(mp.sqrt(K2))


def ref_medium2(Ns, Ks, n2, k2):
    kt = mp.mpc(Ns, -Ks)
    q = mp.sqrt(mp.mpc(n2, -k2) ** 2 - kt * kt)
    Nz, Kz = q.real, -q.imag
    N = mp.sqrt(mp.mpf(Ns) ** 2 + Nz ** 2)
    K = mp.sqrt(mp.mpf(Ks) ** 2 + Kz ** 2)
    # effective attenuation with the folded attenuation angle asin(Ks/K)
    theta = mp.atan2(Ns, Nz)
    psi_f = mp.asin(mp.mpf(Ks) / K) if K > 0 else theta
    return float(N), float(K), float(K * mp.cos(theta - psi_f))


def rel(a, b):
    return abs(a - b) / abs(b) if b else abs(a)


# -- ApparentWave ------------------------------------------------------------


def test_psi_folding():
    w = ApparentWave(1.0, 1e-8, 0.5, math.pi - 0.2)
    assert w.psi_folded == pytest.approx(0.2)
    assert w.alpha == pytest.approx(0.3)
    assert w.Ks == pytest.approx(1e-8 * math.sin(0.2))
    assert ApparentWave(1.0, 1e-8, 0.5, 0.4).psi_folded == 0.4


# -- medium I ----------------------------------------------------------------


def test_medium1_lossless():
    w = solver.medium1_apparent(CR(1.0001, 0.0), 30 * DEG, 30 * DEG)
    assert (w.N, w.K) == (1.0001, 0.0)


def test_medium1_uniform_limit():
    w = solver.medium1_apparent(CR(1.0001, 1e-8), 30 * DEG, 30 * DEG)
    assert w.N == pytest.approx(1.0001, rel=1e-12)
    assert w.K == pytest.approx(1e-8, rel=1e-12)


def test_medium1_matches_reference_alpha10():
    th = 30 * DEG
    w = solver.medium1_apparent(CR(1.0001, 1e-8), th, th - 10 * DEG)
    N, K = ref_medium1(1.0001, 1e-8, th, th - 10 * DEG)
    assert rel(w.N, N) <= 1e-10
    assert rel(w.K, K) <= 1e-10
    # frozen oracle value (50 digits): K1 = kappa*n/(N cos 10 deg) to first order
    assert w.K == pytest.approx(1.0154266256969e-08, rel=1e-11)


def test_medium1_rejects_backward_attenuation():
    with pytest.raises(ValueError):
        solver.medium1_apparent(CR(1.0001, 1e-8), 0.0, 95 * DEG)


@pytest.mark.parametrize("r", [1e-12, 2e-9, 5e-9, 1e-6, 0.5, 0.999, 1.0, 1.001, 10.0,
                               1e6, 9.9e7, 1.1e8, 1e12])
@pytest.mark.parametrize("c", [1.0, 0.3, 1e-5, 5e-7])
def test_k1_squared_branches(r, c):
    # all four expressions, either side of every threshold, against exact roots
    a = 1.0002
    b = a * c / r
    got = solver.k1_squared(a, b, c)
    A, B, C = mp.mpf(a), mp.mpf(b), mp.mpf(c)
    exact = (-A * C * C + mp.sqrt((A * C * C) ** 2 + 4 * C * C * B * B)) / (2 * C * C)
    assert rel(got, float(exact)) <= 1e-14


@settings(max_examples=400, deadline=None)
@given(st.floats(1.0, 1.0005), st.floats(1e-12, 1e-6), st.floats(0, 89), st.floats(0, 15))
def test_medium1_invariants(n, kappa, th_deg, al_deg):
    th = th_deg * DEG
    w = solver.medium1_apparent(CR(n, kappa), th, th - al_deg * DEG)
    assert w.N >= n and w.K >= kappa * (1 - 1e-15)
    assert abs((w.N ** 2 - w.K ** 2) - (n * n - kappa * kappa)) <= 1e-10 * max(1, w.N ** 2)
    assert abs(w.N * w.K * math.cos(w.theta - w.psi) - n * kappa) <= 1e-10 * n * kappa


# -- medium II ---------------------------------------------------------------


def test_lossless_snell():
    Ns = 1.0001 * math.sin(30 * DEG)
    w = solver.medium2_apparent_stable(Ns, 0.0, CR(1.0002, 0.0))
    assert w.theta == pytest.approx(math.asin(Ns / 1.0002), abs=1e-15)
    assert w.K == 0.0 and w.N == 1.0002


def test_evanescent_raises():
    with pytest.raises(TotalInternalReflection):
        solver.medium2_apparent_stable(1.0002 * math.sin(89 * DEG), 0.0, CR(1.0, 0.0))


def _sweep_incident(th_deg):
    th = th_deg * DEG
    return solver.medium1_apparent(CR(1.0001, 1e-8), th, th - 10 * DEG)


KAPPA2 = np.geomspace(1e-9, 1e-7, 201)


@pytest.mark.parametrize("th_deg", [0, 30, 60, 85])
def test_stability_sweep_tracks_reference(th_deg):
    inc = _sweep_incident(th_deg)
    Ks, Es = [], []
    for k2 in KAPPA2:
        w = solver.medium2_apparent_stable(inc.Ns, inc.Ks, CR(1.0002, k2))
        N, K, E = ref_medium2(inc.Ns, inc.Ks, 1.0002, k2)
        assert rel(w.N, N) <= 1e-12
        assert rel(w.K, K) <= 1e-10
        assert rel(solver.effective_attenuation(w), E) <= 1e-9
        assert w.K > 0 and math.isfinite(w.K)
        Ks.append(w.K)
        Es.append(solver.effective_attenuation(w))
    # no sawtooth: K2 falls to |Ks| where D = n2*kappa2 - Ns*Ks changes sign,
    # then rises; at most one change of direction
    for seq in (Ks, Es):
        d = np.sign(np.diff(seq))
        d = d[d != 0]
        assert np.count_nonzero(np.diff(d)) <= 1
    k_turn = inc.Ns * inc.Ks / 1.0002
    if k_turn > KAPPA2[0]:
        i = int(np.argmin(Ks))
        assert KAPPA2[max(i - 1, 0)] <= k_turn <= KAPPA2[min(i + 1, 200)]
    else:
        assert np.all(np.diff(Ks) >= 0)


def test_stability_sweep_frozen_values():
    # 50-digit reference values at theta = 30 deg
    inc = _sweep_incident(30)
    w = solver.medium2_apparent_stable(inc.Ns, inc.Ks, CR(1.0002, 1e-9))
    assert w.K == pytest.approx(3.5755131028441335e-09, rel=1e-12)
    assert solver.effective_attenuation(w) == pytest.approx(2.472616326428654e-09, rel=1e-12)


def test_naive_working_precision_breaks_on_sweep():
    worst = 0.0
    for th_deg in (0, 30, 60, 85):
        inc = _sweep_incident(th_deg)
        for k2 in KAPPA2:
            _, K, _ = ref_medium2(inc.Ns, inc.Ks, 1.0002, k2)
            try:
                w = solver.medium2_apparent_naive(inc.Ns, inc.Ks, CR(1.0002, k2), "working")
                worst = max(worst, rel(w.K, K) if math.isfinite(w.K) else math.inf)
            except CancellationUnderflow:
                worst = math.inf
    assert worst > 0.1


@pytest.mark.parametrize("k2", [1e-9, 1e-8, 1e-7])
def test_naive_extended_matches_reference(k2):
    inc = _sweep_incident(45)
    w = solver.medium2_apparent_naive(inc.Ns, inc.Ks, CR(1.0002, k2), "extended")
    N, K, E = ref_medium2(inc.Ns, inc.Ks, 1.0002, k2)
    assert rel(w.N, N) <= 1e-10 and rel(w.K, K) <= 1e-10
    assert rel(solver.effective_attenuation(w), E) <= 1e-10


def test_naive_lossless_identical_to_stable():
    Ns = 1.0001 * math.sin(40 * DEG)
    a = solver.medium2_apparent_stable(Ns, 0.0, CR(1.0002, 0.0))
    for prec in ("working", "extended"):
        assert solver.medium2_apparent_naive(Ns, 0.0, CR(1.0002, 0.0), prec) == a


def test_oracle_lossless_snell():
    Ns = 1.0001 * math.sin(60 * DEG)
    w = solver.medium2_oracle_hp(Ns, 0.0, CR(1.0002, 0.0))
    assert math.sin(w.theta) == pytest.approx(Ns / 1.0002, abs=1e-15)


@pytest.mark.parametrize("k1, k2, deviates", [(1.94e-10, 3.58e-11, True),
                                              (1.54e-8, 1.32e-8, False)])
def test_compensation_pairs(k1, k2, deviates):
    ratios = []
    for th_deg in range(0, 61, 5):
        th = th_deg * DEG
        inc = solver.medium1_apparent(CR(1.0001, k1), th, th - 10 * DEG)
        w = solver.medium2_oracle_hp(inc.Ns, inc.Ks, CR(1.0002, k2))
        ratios.append(solver.effective_attenuation(w) / k2)
    if deviates:
        assert max(abs(r - 1) for r in ratios) > 0.1
    else:
        assert all(0.999 <= r <= 1.001 for r in ratios)


@settings(max_examples=300, deadline=None)
@given(st.floats(1.0, 1.0005), st.floats(1.0, 1.0005), st.floats(-10, -6),
       st.floats(0, 4), st.floats(0, 85), st.floats(0, 15))
def test_compensation_law_when_kappa_increases(n1, n2, lk1, dlk, th_deg, al_deg):
    # kappa2 >= kappa1 with n1/n2 ~ 1
    k1 = 10 ** lk1
    k2 = min(k1 * 10 ** dlk, 1e-6)
    th = th_deg * DEG
    inc = solver.medium1_apparent(CR(n1, k1), th, th - al_deg * DEG)
    w = solver.medium2_apparent_stable(inc.Ns, inc.Ks, CR(n2, k2))
    assert abs(solver.effective_attenuation(w) / k2 - 1) <= 1e-3


@settings(max_examples=500, deadline=None)
@given(st.floats(1.0, 1.0005), st.floats(1.0, 1.0005), st.floats(-12, -6),
       st.floats(-12, -6), st.floats(0, 89), st.floats(0, 15))
def test_transmitted_invariants(n1, n2, lk1, lk2, th_deg, al_deg):
    k1, k2 = 10 ** lk1, 10 ** lk2
    th = th_deg * DEG
    inc = solver.medium1_apparent(CR(n1, k1), th, th - al_deg * DEG)
    try:
        w = solver.medium2_apparent_stable(inc.Ns, inc.Ks, CR(n2, k2))
    except TotalInternalReflection:
        assert inc.Ns >= n2 * 0.999
        return
    assert w.N >= n2 and w.K >= k2 * (1 - 1e-15)
    assert w.N >= inc.Ns and w.K >= abs(inc.Ks)
    assert abs(w.Ns - inc.Ns) <= 1e-12 * inc.Ns + 1e-300
    assert abs(w.Ks - inc.Ks) <= 1e-9 * abs(inc.Ks) + 1e-300
    assert abs((w.N ** 2 - w.K ** 2) - (n2 * n2 - k2 * k2)) <= 1e-10 * max(1, w.N ** 2)
    res = solver.quartic_residuals(w, inc.Ns, inc.Ks, CR(n2, k2))
    A, B, D = solver.quartic_coefficients(inc.Ns, inc.Ks, CR(n2, k2))
    assert max(map(abs, res)) <= 1e-8 * max(1.0, A * A + B * B + D * D)
    assert solver.effective_attenuation(w) >= 0
    N, K, E = ref_medium2(inc.Ns, inc.Ks, n2, k2)
    assert rel(w.N, N) <= 1e-6 and rel(w.K, K) <= 1e-6
    assert rel(solver.effective_attenuation(w), E) <= 1e-6


@pytest.mark.slow
def test_stable_matches_oracle_on_random_domain():
    rng = np.random.default_rng(3)
    worst = 0.0
    naive_blocks = []
    block = []
    for _ in range(100_000):
        n1, n2 = rng.uniform(1.0, 1.0005, 2)
        k1, k2 = 10 ** rng.uniform(-12, -6, 2)
        th = rng.uniform(0, 89) * DEG
        inc = solver.medium1_apparent(CR(n1, k1), th, th - rng.uniform(0, 15) * DEG)
        m2 = CR(n2, k2)
        try:
            w = solver.medium2_apparent_stable(inc.Ns, inc.Ks, m2)
        except TotalInternalReflection:
            continue
        o = solver.medium2_oracle_hp(inc.Ns, inc.Ks, m2)
        worst = max(worst, rel(w.N, o.N), rel(w.K, o.K),
                    rel(solver.effective_attenuation(w), solver.effective_attenuation(o)))
        if k2 <= 1e-8:
            try:
                bad = rel(solver.medium2_apparent_naive(inc.Ns, inc.Ks, m2).K, o.K) > 0.1
            except CancellationUnderflow:
                bad = True
            block.append(bad)
            if len(block) == 1000:
                naive_blocks.append(any(block))
                block = []
    assert worst <= 1e-6
    assert naive_blocks and all(naive_blocks)


def test_printed_quartic_form_is_inconsistent():
    inc = _sweep_incident(45)
    m2 = CR(1.0002, 1e-9)
    w = solver.medium2_oracle_hp(inc.Ns, inc.Ks, m2)
    derived = solver.quartic_residuals(w, inc.Ns, inc.Ks, m2, "derived")
    printed = solver.quartic_residuals(w, inc.Ns, inc.Ks, m2, "printed")
    assert max(map(abs, derived)) < 1e-15
    assert max(map(abs, printed)) > 1e-3


def test_cross_term_compensated():
    # Ns*Ks close to n2*kappa2: the naive difference loses every digit
    Ns, Ks, n2 = 0.7, 1.0 / 3.0 * 1e-8, 1.0002
    k2 = Ns * Ks / n2
    exact = mp.mpf(n2) * mp.mpf(k2) - mp.mpf(Ns) * mp.mpf(Ks)
    assert abs(solver.cross_term(n2, k2, Ns, Ks) - float(exact)) <= 1e-32


def test_diagnostics_count_evaluations():
    solver.reset_diagnostics()
    inc = _sweep_incident(10)
    for k2 in (1e-9, 1e-8):
        solver.medium2_apparent_stable(inc.Ns, inc.Ks, CR(1.0002, k2))
    ev, fb, cu = solver.diagnostics()
    assert ev == 2 and fb == 0 and cu == 0
    with pytest.raises(NumericalFailure):
        for k2 in KAPPA2:
            solver.medium2_apparent_naive(inc.Ns, inc.Ks, CR(1.0002, k2), "working")
    assert solver.diagnostics()[2] >= 1


# -- Fresnel and propagation -------------------------------------------------


def test_fresnel_matched_media():
    m = CR(1.0003, 1e-8)
    w = solver.launch_wave(m, 0.4)
    assert solver.fresnel_npw(w, MediumPair(m, m), w) == (0j, 1 + 0j)


def test_fresnel_normal_incidence_closed_form():
    m1, m2 = CR(1.0), CR(1.5)
    inc = solver.launch_wave(m1, 0.0)
    t = solver.medium2_apparent_stable(inc.Ns, inc.Ks, m2)
    g, tau = solver.fresnel_npw(inc, MediumPair(m1, m2), t)
    assert g == pytest.approx((1.5 - 1.0) / 2.5, abs=1e-15)
    assert tau == pytest.approx(2 * 1.0 / 2.5, abs=1e-15)


def _fresnel_closed_form(n1, n2, th):
    # plane-of-incidence polarization, field amplitudes, lossless media
    c1 = math.cos(th)
    c2 = math.sqrt(1 - (n1 * math.sin(th) / n2) ** 2)
    den = n2 * c1 + n1 * c2
    return (n2 * c1 - n1 * c2) / den, 2 * n1 * c1 / den


@pytest.mark.parametrize("th_deg", [0, 30, 60, 80, 89])
def test_fresnel_atmospheric_contrast(th_deg):
    m1, m2 = CR(1.0001, 1e-8), CR(1.0002, 1e-8)
    inc = solver.launch_wave(m1, th_deg * DEG)
    sol = solver.solve_interface(inc, MediumPair(m1, m2))
    # the small loss moves both coefficients only at order kappa
    g, tau = _fresnel_closed_form(1.0001, 1.0002, th_deg * DEG)
    assert sol.tau.real == pytest.approx(tau, rel=1e-7)
    assert sol.gamma_r.real == pytest.approx(g, rel=1e-6, abs=1e-12)


def test_fresnel_80deg_is_not_unity():
    # a 1e-4 index step at 80 deg still reflects a few parts per thousand
    m1, m2 = CR(1.0001), CR(1.0002)
    inc = solver.launch_wave(m1, 80 * DEG)
    sol = solver.solve_interface(inc, MediumPair(m1, m2))
    # 40-digit closed-form value
    assert abs(sol.tau) == pytest.approx(0.99834754683870646, rel=1e-13)


def test_propagate_field():
    k0 = 377.0
    w = ApparentWave(1.0002, 1e-7, 0.3, 0.3)
    assert solver.propagate_field(1 + 0j, w, 0.0, k0) == 1 + 0j
    lossless = ApparentWave(1.0002, 0.0, 0.3, 0.3)
    assert abs(solver.propagate_field(2 + 0j, lossless, 123.0, k0)) == pytest.approx(2.0)
    l = math.log(10) / (k0 * 1e-7)
    E = solver.propagate_field(1 + 0j, w, l, k0)
    assert 20 * math.log10(abs(E)) == pytest.approx(-20.0, rel=1e-12)
    with pytest.raises(ValueError):
        solver.propagate_field(1, w, -1.0, k0)


def test_effective_attenuation_uniform_is_k():
    w = ApparentWave(1.0002, 3e-8, 0.7, 0.7)
    assert solver.effective_attenuation(w) == 3e-8


def test_solve_interface_unknown_solver():
    w = solver.launch_wave(CR(1.0001, 1e-8), 0.2)
    with pytest.raises(ValueError, match="unknown solver"):
        solver.solve_interface(w, MediumPair(CR(1.0001, 1e-8), CR(1.0002, 1e-8)), "magic")
