import math

import numpy as np
import pytest

from npwray import field, solver
from npwray.errors import TotalInternalReflection
from npwray.field import ComplexRefractivity as CR
from npwray.field import wavenumber
from npwray.raytracer import (
    ALL_METHODS,
    MethodKind,
    boresight_error,
    geometric_angle,
    link_sweep,
    shoot_to_receiver,
    trace_ray,
    uniform_interface,
)

DEG = math.pi / 180
F = 18e9


@pytest.fixture(scope="module")
def clear():
    return field.exponential_clear()


@pytest.fixture(scope="module")
def rain():
    return field.rain_cell()


def test_method_parse():
    assert MethodKind.parse("stablenpw") is MethodKind.STABLE
    assert MethodKind.parse("uniform") is MethodKind.UNIFORM
    with pytest.raises(ValueError):
        MethodKind.parse("exact")


@pytest.mark.parametrize("method", ALL_METHODS)
@pytest.mark.parametrize("th_deg", [-50, 0, 20, 70])
def test_vacuum_straight_line(method, th_deg):
    p = trace_ray(field.vacuum(), (3.0, 10.0), th_deg * DEG, F, method)
    assert p.landing_x == pytest.approx(3.0 + 10 * math.tan(th_deg * DEG), abs=1e-12)
    assert p.total_loss_db == 0.0


@pytest.mark.parametrize("method", ALL_METHODS)
def test_two_layer_lossless_closed_form(method):
    g = field.two_layer(kappa1=0.0, kappa2=0.0)
    th = 40 * DEG
    p = trace_ray(g, (0.0, 10.0), th, F, method)
    th_t = math.asin(1.0001 * math.sin(th) / 1.0002)
    assert p.landing_x == pytest.approx(5 * math.tan(th) + 5 * math.tan(th_t), rel=1e-14)
    assert p.segments[-1].wave.theta == pytest.approx(th_t, abs=1e-15)


def test_uniform_slab_loss():
    g = field.RefractivityGrid2D([-100, 100], [0, 10], [[1.0003]], [[1e-7]])
    p = trace_ray(g, (0.0, 10.0), 0.0, F, MethodKind.UNIFORM)
    expected = 20 / math.log(10) * wavenumber(F) * 1e-7 * 1e4
    assert p.total_loss_db == pytest.approx(expected, rel=1e-12)
    # about 2.84 dB over 10 km at the upper kappa of the atmospheric range
    assert p.total_loss_db == pytest.approx(8.686 * wavenumber(F) * 1e-7 * 1e4, rel=1e-4)


def test_uniform_interface():
    m = CR(1.0002, 1e-8)
    assert uniform_interface(m, m, 0.3) == (0.3, 1e-8)
    m1, m2 = CR(1.0001, 1e-7), CR(1.0002, 1e-7)
    th_u, _ = uniform_interface(m1, m2, 80 * DEG)
    inc = solver.launch_wave(m1, 80 * DEG)
    th_s = solver.medium2_apparent_stable(inc.Ns, inc.Ks, m2).theta
    assert abs(th_u - th_s) <= 1e-9
    with pytest.raises(TotalInternalReflection):
        uniform_interface(CR(1.0003), CR(1.0), 89.5 * DEG)


def test_tir_reports_depth():
    g = field.RefractivityGrid2D([-1000, 1000], [0, 5, 10], [[1.0, 1.0003]], [[0, 0]])
    with pytest.raises(TotalInternalReflection) as info:
        trace_ray(g, (0.0, 10.0), 89.5 * DEG, F, MethodKind.STABLE)
    assert info.value.depth_km == 5.0


@pytest.mark.parametrize("method", ALL_METHODS)
def test_segment_invariants(rain, method):
    p = trace_ray(rain, (-60.0, 10.0), 50 * DEG, F, method)
    segs = p.segments
    assert p.method is method
    for s in segs:
        assert s.end[1] < s.start[1]
        assert s.length == pytest.approx(math.dist(s.start, s.end) * 1000, rel=1e-12)
        assert s.segment_loss_db >= 0
    for a, b in zip(segs, segs[1:]):
        assert a.end == b.start
    total = math.fsum(s.segment_loss_db + s.interface_tau_db for s in segs)
    assert p.total_loss_db == pytest.approx(total, rel=1e-9)


def test_loss_equals_field_product(rain):
    # total dB equals the dB of the product of all per-segment field ratios
    p = trace_ray(rain, (-60.0, 10.0), 50 * DEG, F, MethodKind.STABLE)
    k0 = wavenumber(F)
    log_amp = 0.0
    for s in p.segments:
        E = solver.propagate_field(1 + 0j, s.wave, s.length, k0)
        log_amp += math.log(abs(E)) - s.interface_tau_db / (20 / math.log(10))
    assert -20 / math.log(10) * log_amp == pytest.approx(p.total_loss_db, rel=1e-9)


def test_tau_losses_reported_separately(rain):
    with_tau = trace_ray(rain, (-60.0, 10.0), 50 * DEG, F)
    without = trace_ray(rain, (-60.0, 10.0), 50 * DEG, F, include_tau=False)
    assert without.interface_loss_db == 0.0
    assert with_tau.total_loss_db - without.total_loss_db == pytest.approx(
        with_tau.interface_loss_db, rel=1e-6)
    # each interface matches the lossless closed-form transmission coefficient
    segs = with_tau.segments
    checked = 0
    for a, b in zip(segs, segs[1:]):
        if b.interface_tau_db == 0.0:
            continue
        n1, n2, th = a.wave.N, b.wave.N, a.wave.theta
        c1 = math.cos(th)
        c2 = math.sqrt(1 - (n1 * math.sin(th) / n2) ** 2)
        tau = 2 * n1 * c1 / (n2 * c1 + n1 * c2)
        assert b.interface_tau_db == pytest.approx(-20 * math.log10(tau), rel=1e-4)
        checked += 1
    assert checked > 50


def test_phase_path_consistency(rain):
    u = trace_ray(rain, (-60.0, 10.0), 60 * DEG, F, MethodKind.UNIFORM)
    s = trace_ray(rain, (-60.0, 10.0), 60 * DEG, F, MethodKind.STABLE)
    assert len(u.segments) == len(s.segments)
    for a, b in zip(u.segments, s.segments):
        assert abs(a.wave.theta - b.wave.theta) <= 1e-9


def test_method_agreement_on_fixtures(clear, rain):
    for g in (clear, rain, field.two_layer()):
        a = trace_ray(g, (-30.0, 10.0), 45 * DEG, F, MethodKind.STABLE)
        b = trace_ray(g, (-30.0, 10.0), 45 * DEG, F, MethodKind.NAIVE_EXTENDED)
        assert a.total_loss_db == pytest.approx(b.total_loss_db, rel=1e-6)
        assert a.landing_x == pytest.approx(b.landing_x, rel=1e-6)


def test_start_above_grid_refracts_from_vacuum(clear):
    p = trace_ray(clear, (0.0, 12.0), 30 * DEG, F)
    assert p.segments[0].wave.N == 1.0 and p.segments[0].segment_loss_db == 0.0
    assert p.segments[1].wave.theta < 30 * DEG
    with pytest.raises(ValueError):
        trace_ray(clear, (0.0, 5.0), 0.1, F)


def test_trace_is_deterministic(rain):
    a = trace_ray(rain, (-60.0, 10.0), 55 * DEG, F)
    b = trace_ray(rain, (-60.0, 10.0), 55 * DEG, F)
    assert a == b


# -- shooting and boresight --------------------------------------------------


def test_geometric_angle():
    assert geometric_angle((0.0, 10.0), (10.0, 0.0)) == pytest.approx(45 * DEG)
    assert geometric_angle((10.0, 10.0), (0.0, 0.0)) == pytest.approx(-45 * DEG)


def test_shoot_vacuum_exact():
    sat, rx = (-7.0, 10.0), (4.0, 0.0)
    th, p, it = shoot_to_receiver(field.vacuum(), sat, rx)
    assert abs(th - math.atan2(11.0, 10.0)) <= 1e-12
    assert it == 1


def test_shoot_exponential_70deg(clear):
    sat = (-10 * math.tan(70 * DEG), 10.0)
    th, p, it = shoot_to_receiver(clear, sat, (0.0, 0.0))
    assert it <= 50
    assert abs(p.landing_x * 1000) <= 1.0


def test_shoot_symmetric_nadir(clear):
    th, _, _ = shoot_to_receiver(clear, (0.0, 10.0), (0.0, 0.0))
    assert th == 0.0


def test_boresight_vacuum_zero():
    assert boresight_error(field.vacuum(), (-5.0, 10.0), (0.0, 0.0)) == 0.0


def test_boresight_grows_toward_grazing(clear):
    errs = []
    for d in (0, 20, 40, 60, 75, 85):
        sat = (-10 * math.tan(d * DEG), 10.0)
        errs.append(abs(boresight_error(clear, sat, (0.0, 0.0), tol_m=1e-6)))
    assert all(b >= a for a, b in zip(errs, errs[1:]))
    assert errs[-1] > errs[1] > 0


def test_boresight_modes_differ(clear):
    sat = (-10 * math.tan(60 * DEG), 10.0)
    launch = boresight_error(clear, sat, (0.0, 0.0), tol_m=1e-6)
    arrival = boresight_error(clear, sat, (0.0, 0.0), tol_m=1e-6, mode="arrival")
    # launched steeper than the chord, arriving shallower
    assert launch > 0 > arrival
    with pytest.raises(ValueError):
        boresight_error(clear, sat, (0.0, 0.0), mode="apex")


def test_rain_boresight_uniform_vs_stable(rain):
    sat = (-10 * math.tan(60 * DEG), 10.0)
    u = boresight_error(rain, sat, (0.0, 0.0), method=MethodKind.UNIFORM, tol_m=1e-6)
    s = boresight_error(rain, sat, (0.0, 0.0), method=MethodKind.STABLE, tol_m=1e-6)
    assert abs(u - s) <= 1e-6


# -- sweeps ------------------------------------------------------------------


def test_link_sweep_empty(clear):
    assert link_sweep(clear, (0.0, 0.0), F, []) == []


def test_link_sweep_two_layer_agreement():
    res = link_sweep(field.two_layer(), (0.0, 0.0), F, [0, 30, 60], tol_m=1e-6)
    assert all(r.ok for r in res)
    for t in (0, 30, 60):
        losses = [r.total_loss_db for r in res if r.theta_inc == t]
        assert max(losses) - min(losses) <= 1e-3 * max(losses)


def test_link_loss_monotone_in_angle(clear):
    res = link_sweep(clear, (0.0, 0.0), F, [-75, -40, 0, 40, 75], [MethodKind.STABLE])
    by = {r.theta_inc: r.total_loss_db for r in res}
    assert by[0] < by[40] < by[75]
    assert by[-40] == pytest.approx(by[40], rel=1e-12)


def test_link_sweep_threads_keep_order(rain):
    a = link_sweep(rain, (0.0, 0.0), F, [-30, 0, 45], threads=1)
    b = link_sweep(rain, (0.0, 0.0), F, [-30, 0, 45], threads=3)
    assert a == b
    assert [(r.theta_inc, r.method) for r in a] == [
        (t, m) for t in (-30, 0, 45) for m in ALL_METHODS]


def test_link_sweep_records_failures():
    g = field.RefractivityGrid2D([-1000, 1000], [0, 5, 10], [[1.0, 1.0003]], [[0, 0]])
    res = link_sweep(g, (0.0, 0.0), F, [0, 89.6], [MethodKind.STABLE])
    assert res[0].ok
    assert not res[1].ok and res[1].error
    assert math.isnan(res[1].total_loss_db)
