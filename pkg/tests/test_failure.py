import math

import numpy as np
import pytest

from faultseal.failure import (
    FailureParams, SeismicEvent, apply_stress_drop, check_shear_failure,
    compute_slip, plane_stresses, safety_margin, seismic_event,
    stress_drop_correction, tension_cutoff,
)
from faultseal.mesh import FaultDescriptor, GridSpec, build_grid, fault_cells

RNG = np.random.default_rng(20240811)


def rotate_tensor(sxx, syy, sxy, theta):
    c, s = math.cos(theta), math.sin(theta)
    r = np.array([[c, -s], [s, c]])
    m = np.array([[sxx, sxy], [sxy, syy]])
    out = r @ m @ r.T
    return out[0, 0], out[1, 1], out[0, 1]


def test_plane_stresses_axis_aligned():
    sn, tau = plane_stresses(1.0, 2.0, 3.0, 0.0)
    assert sn == 2.0 and tau == 3.0


def test_hydrostatic_never_fails():
    params = FailureParams(tan_friction=0.6, cohesion=0.0, stress_drop=1e6)
    chk = check_shear_failure(-10e6, -10e6, 0.0, 0.0, 1.0, params)
    assert not chk.failed
    assert chk.tau == pytest.approx(0.0, abs=1e-9)


def test_isotropic_tensor_zero_shear_every_plane():
    for ang in np.linspace(0, math.pi, 7):
        _, tau = plane_stresses(-5e6, -5e6, 0.0, ang)
        assert tau == pytest.approx(0.0, abs=1e-9)


def test_mohr_circle_hand_case():
    # fault plane at 0 deg carrying sigma_n' = 10 MPa compression and
    # |tau| = 6.5 MPa against tan(phi) = 0.6, c = 0 -> tau_max = 6 MPa
    params = FailureParams(tan_friction=0.6, cohesion=0.0, stress_drop=1e6,
                           fault_angle_deg=0.0)
    chk = check_shear_failure(-4e6, -10e6, 6.5e6, 0.0, 1.0, params)
    assert chk.sigma_n_eff == pytest.approx(10e6)
    assert chk.tau_max == pytest.approx(6e6)
    assert chk.failed
    chk2 = check_shear_failure(-4e6, -10e6, 5.5e6, 0.0, 1.0, params)
    assert not chk2.failed


def test_pore_pressure_weakens():
    params = FailureParams(tan_friction=0.6, cohesion=0.0, stress_drop=1e6,
                           fault_angle_deg=0.0)
    no_p = check_shear_failure(-4e6, -10e6, 5.5e6, 0.0, 1.0, params)
    with_p = check_shear_failure(-4e6, -10e6, 5.5e6, 2e6, 1.0, params)
    assert not no_p.failed and with_p.failed


def test_tension_floor_flagged():
    params = FailureParams(tan_friction=0.6, cohesion=1e5, stress_drop=1e6,
                           fault_angle_deg=0.0)
    chk = check_shear_failure(1e6, 2e6, 5e5, 0.0, 1.0, params)
    assert chk.tension_floor
    assert chk.tau_max == pytest.approx(1e5)
    assert chk.failed


def test_rotation_covariance():
    params = FailureParams(tan_friction=0.6, cohesion=0.0, stress_drop=1e6)
    for _ in range(200):
        sxx, syy = -RNG.uniform(1e6, 3e7, 2)
        sxy = RNG.uniform(-1e7, 1e7)
        p = RNG.uniform(0, 5e6)
        base = check_shear_failure(sxx, syy, sxy, p, 1.0, params)
        ang = RNG.uniform(0, math.pi)
        rot = rotate_tensor(sxx, syy, sxy, ang)
        other = check_shear_failure(*rot, p, 1.0, params)
        assert other.failed == base.failed
        assert abs(other.tau) == pytest.approx(abs(base.tau), rel=1e-10, abs=1e-4)
        assert other.sigma_n_eff == pytest.approx(base.sigma_n_eff,
                                                  rel=1e-10, abs=1e-4)


def test_stress_drop_pure_shear():
    dsig = apply_stress_drop((0.0, 0.0, 2e6), (0.0, 0.0, 0.0), 0.0, 1e6)
    assert dsig[0] == pytest.approx(0.0, abs=1e-9)
    assert dsig[1] == pytest.approx(0.0, abs=1e-9)
    assert dsig[2] == pytest.approx(1e6)


def test_stress_drop_rotated_frame():
    # same pure-shear state expressed in a frame rotated by 30 degrees;
    # dropping on the 30-degree plane must reduce that plane's shear by
    # the drop while preserving the first invariant
    theta = math.radians(30.0)
    sxx, syy, sxy = rotate_tensor(0.0, 0.0, 2e6, theta)
    corr = stress_drop_correction(sxx, syy, sxy, theta, 1e6)
    new = (sxx + corr[0], syy + corr[1], sxy + corr[2])
    assert (new[0] + new[1]) == pytest.approx(sxx + syy, abs=1e-6)
    _, tau_before = plane_stresses(sxx, syy, sxy, theta)
    _, tau_after = plane_stresses(*new, theta)
    assert abs(tau_before) - abs(tau_after) == pytest.approx(1e6, rel=1e-12)


def test_stress_drop_zero_is_identity():
    # drop larger than the shear reduces it to zero, never flips sign
    corr = stress_drop_correction(0.0, 0.0, 5e5, 0.0, 1e6)
    assert corr[2] == pytest.approx(-5e5)
    _, tau = plane_stresses(0.0, 0.0, 5e5 + corr[2], 0.0)
    assert tau == pytest.approx(0.0, abs=1e-9)


def test_stress_drop_invariants_random():
    # trace preservation, exact shear reduction, Mohr-center preservation
    n = 10_000
    sxx = RNG.uniform(-5e7, 1e6, n)
    syy = RNG.uniform(-5e7, 1e6, n)
    sxy = RNG.uniform(-2e7, 2e7, n)
    angs = RNG.uniform(0, math.pi, n)
    drop = 1e6
    for i in range(n):
        corr = stress_drop_correction(sxx[i], syy[i], sxy[i], angs[i], drop)
        assert abs(corr[0] + corr[1]) < 1e-10 * max(1.0, abs(corr[0]))
        _, t0 = plane_stresses(sxx[i], syy[i], sxy[i], angs[i])
        _, t1 = plane_stresses(sxx[i] + corr[0], syy[i] + corr[1],
                               sxy[i] + corr[2], angs[i])
        expected = max(abs(t0) - drop, 0.0)
        assert abs(abs(t1) - expected) < 1e-10 * max(abs(t0), 1.0)


def test_tension_cutoff_cases():
    # all-compressive untouched
    xx, yy, xy = tension_cutoff(-5e6, -2e6, 0.0, 0.0)
    assert xx == pytest.approx(-5e6)
    assert yy == pytest.approx(-2e6)
    assert xy == pytest.approx(0.0, abs=1e-3)
    # principal (+2, -5), cutoff 0 -> (0, -5)
    xx, yy, xy = tension_cutoff(2e6, -5e6, 0.0, 0.0)
    assert xx == pytest.approx(0.0, abs=1e-6)
    assert yy == pytest.approx(-5e6)
    # cutoff 1 MPa on (+2, -5) -> (+1, -5)
    xx, yy, xy = tension_cutoff(2e6, -5e6, 0.0, 1e6)
    assert xx == pytest.approx(1e6)


def test_tension_cutoff_rotated():
    theta = 0.7
    sxx, syy, sxy = rotate_tensor(3e6, -8e6, 0.0, theta)
    xx, yy, xy = tension_cutoff(sxx, syy, sxy, 1e6)
    mean = 0.5 * (xx + yy)
    radius = math.hypot(0.5 * (xx - yy), xy)
    assert mean + radius == pytest.approx(1e6, rel=1e-9)
    assert mean - radius == pytest.approx(-8e6, rel=1e-9)


def test_safety_margin_hand_value():
    params = FailureParams(tan_friction=0.6, cohesion=0.0, stress_drop=1e6,
                           fault_angle_deg=0.0)
    m = safety_margin(-4e6, -10e6, 3e6, 0.0, 1.0, params)
    assert m == pytest.approx(5e6)


def test_safety_margin_zero_at_onset():
    params = FailureParams(tan_friction=0.6, cohesion=0.0, stress_drop=1e6,
                           fault_angle_deg=0.0)
    m = safety_margin(-4e6, -10e6, 6e6, 0.0, 1.0, params)
    assert m == pytest.approx(0.0, abs=1.0)


def test_safety_margin_pressure_linearity():
    params = FailureParams(tan_friction=0.6, cohesion=0.0, stress_drop=1e6,
                           fault_angle_deg=0.0)
    alpha = 0.778
    m0 = safety_margin(-4e6, -10e6, 3e6, 1e6, alpha, params)
    m1 = safety_margin(-4e6, -10e6, 3e6, 1e6 + 12345.0, alpha, params)
    assert m0 - m1 == pytest.approx(alpha * 12345.0)


def test_margin_zero_crossing_matches_failure_bisection():
    # ramp pore pressure; the margin zero must coincide with the failure
    # transition found by bisection, for both plane modes
    for mode in (None, 0.0):
        params = FailureParams(tan_friction=0.6, cohesion=2e5, stress_drop=1e6,
                               fault_angle_deg=mode)
        sxx, syy, sxy = -12e6, -20e6, 4.0e6

        def fails(p):
            return check_shear_failure(sxx, syy, sxy, p, 1.0, params).failed

        lo, hi = 0.0, 3e7
        assert not fails(lo) and fails(hi)
        while hi - lo > 1.0:
            mid = 0.5 * (lo + hi)
            if fails(mid):
                hi = mid
            else:
                lo = mid
        m = safety_margin(sxx, syy, sxy, lo, 1.0, params)
        assert m == pytest.approx(0.0, abs=2.0)


def test_magnitude_zero_point_and_roundtrip():
    assert SeismicEvent.magnitude_from_moment(10**9.1) == pytest.approx(0.0)
    assert SeismicEvent.magnitude_from_moment(1e12) == pytest.approx(
        1.9333333333, rel=1e-9)
    for mw in (-1.0, 0.0, 1.16, 3.7):
        m0 = SeismicEvent.moment_from_magnitude(mw)
        assert SeismicEvent.magnitude_from_moment(m0) == pytest.approx(
            mw, abs=1e-12)
    assert SeismicEvent.moment_from_magnitude(1.16) == pytest.approx(
        6.92e10, rel=1e-3)


def _two_cell_fault_grid():
    f = FaultDescriptor(name="f", zone=1, x_ref=1.5, y_ref=0.0, dip_deg=90.0,
                        width=0.5)
    spec = GridSpec(x_coords=np.linspace(0, 3, 4),
                    y_coords=np.linspace(0, 2, 3),
                    layer_zones=(0,), faults=(f,))
    g = build_grid(spec)
    return g, f


def test_compute_slip_identical_fields_zero():
    g, f = _two_cell_fault_grid()
    cells = fault_cells(g, f)
    u = RNG.normal(size=(g.n_verts, 2))
    slips = compute_slip(u, u, f, cells)
    assert np.all(slips == 0.0)


def test_compute_slip_rigid_offset():
    g, f = _two_cell_fault_grid()
    cells = fault_cells(g, f)
    du = np.zeros((g.n_verts, 2))
    d = f.tangent
    a = 1e-3
    for fc in cells:
        for v in fc.left_verts:
            du[v] = a * d
        for v in fc.right_verts:
            du[v] = -a * d
    slips = compute_slip(np.zeros_like(du), du, f, cells)
    assert np.allclose(slips, 2 * a)


def test_seismic_event_aggregation():
    g, f = _two_cell_fault_grid()
    cells = fault_cells(g, f)
    slips = np.array([1e-3, 2e-3])
    ev = seismic_event(5.0, f, cells, slips, out_of_plane_depth=100.0,
                       g_slip=8e9)
    lengths = np.array([c.length_along for c in cells])
    area = 100.0 * lengths.sum()
    mean_slip = (slips * lengths).sum() / lengths.sum()
    assert ev.area == pytest.approx(area)
    assert ev.moment == pytest.approx(8e9 * area * mean_slip)
    assert ev.magnitude == pytest.approx(
        (math.log10(ev.moment) - 9.1) / 1.5)


def test_no_event_for_zero_slip():
    g, f = _two_cell_fault_grid()
    cells = fault_cells(g, f)
    assert seismic_event(0.0, f, cells, np.zeros(len(cells)), 100.0, 8e9) is None


def test_magnitude_monotonicity():
    g, f = _two_cell_fault_grid()
    cells = fault_cells(g, f)
    base = seismic_event(0.0, f, cells, np.array([1e-3, 1e-3]), 100.0, 8e9)
    bigger_slip = seismic_event(0.0, f, cells, np.array([2e-3, 2e-3]), 100.0, 8e9)
    stiffer = seismic_event(0.0, f, cells, np.array([1e-3, 1e-3]), 100.0, 16e9)
    deeper = seismic_event(0.0, f, cells, np.array([1e-3, 1e-3]), 200.0, 8e9)
    assert bigger_slip.magnitude > base.magnitude
    assert stiffer.magnitude > base.magnitude
    assert deeper.magnitude > base.magnitude
