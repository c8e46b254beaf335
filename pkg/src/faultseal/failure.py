"""Shear failure detection, stress-drop adjustment and seismicity estimates.

Stress tensors are 2x2 symmetric, tension-positive, handled as component
triples (sxx, syy, sxy). A plane is identified by the angle of its tangent
direction measured from the x-axis; the plane normal is the tangent rotated
by +90 degrees.

Failure is Mohr-Coulomb: |tau| > tau_max = c + sigma_n' tan(phi_f), with
sigma_n' the effective normal compression on the plane. Fault cells are
checked only on the fault plane; matrix cells on the critical plane of the
Mohr circle. On failure the plane shear is reduced by a prescribed stress
drop; the Mohr-circle center (and hence the mean stress entering the
porosity law) is unchanged by that adjustment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .mesh import FaultCell, FaultDescriptor


@dataclass(frozen=True)
class FailureParams:
    """Coulomb strength and stress-drop parameters for one zone."""

    tan_friction: float = 0.6
    cohesion: float = 0.0
    stress_drop: float = 1e6
    tensile_cutoff: float = 0.0
    fault_angle_deg: float | None = None  # None -> critical-plane mode

    def __post_init__(self):
        if self.tan_friction <= 0.0:
            raise ValueError("tan_friction must be positive")
        if self.stress_drop <= 0.0:
            raise ValueError("stress_drop must be positive")
        if self.tensile_cutoff < 0.0:
            raise ValueError("tensile_cutoff must be nonnegative")


def plane_stresses(sxx, syy, sxy, angle_rad):
    """(sigma_n, tau) on the plane whose tangent makes ``angle_rad`` with x.

    sigma_n is tension-positive; tau is the shear seen in the rotated frame
    (tangent, normal).
    """
    c2 = np.cos(2.0 * angle_rad)
    s2 = np.sin(2.0 * angle_rad)
    mean = 0.5 * (sxx + syy)
    half_diff = 0.5 * (sxx - syy)
    sigma_n = mean - half_diff * c2 - sxy * s2
    tau = -half_diff * s2 + sxy * c2
    return sigma_n, tau


def principal(sxx, syy, sxy):
    """(sigma_1, sigma_3, theta_1): eigenvalues (max first, tension-positive)
    and the angle of the sigma_1 direction."""
    mean = 0.5 * (sxx + syy)
    half_diff = 0.5 * (sxx - syy)
    radius = np.sqrt(half_diff**2 + sxy**2)
    theta1 = 0.5 * np.arctan2(2.0 * sxy, sxx - syy)
    return mean + radius, mean - radius, theta1


def critical_plane_angle(sxx, syy, sxy, tan_friction):
    """Tangent angle of the Coulomb-critical plane.

    The plane maximizes |tau| - tan(phi) * sigma_n_compression over all
    orientations; its normal sits at 45 deg - phi_f/2 from the most tensile
    principal direction.
    """
    _, _, theta1 = principal(sxx, syy, sxy)
    phi = np.arctan(tan_friction)
    chi = 0.25 * np.pi - 0.5 * phi
    return theta1 + chi + 0.5 * np.pi


@dataclass(frozen=True)
class ShearCheck:
    failed: bool
    angle_rad: float
    tau: float
    sigma_n_eff: float  # effective normal compression on the plane
    tau_max: float
    tension_floor: bool = False


def check_shear_failure(sxx, syy, sxy, p_eff, biot_alpha,
                        params: FailureParams) -> ShearCheck:
    """Mohr-Coulomb check of a total-stress state at pore pressure p_eff.

    Fault mode (``fault_angle_deg`` set) examines only the fault plane;
    otherwise the critical plane of the Mohr circle is used. A plane in net
    effective tension keeps the cohesive floor tau_max = c.
    """
    if params.fault_angle_deg is not None:
        angle = math.radians(params.fault_angle_deg)
    else:
        angle = float(critical_plane_angle(sxx, syy, sxy, params.tan_friction))
    sigma_n, tau = plane_stresses(sxx, syy, sxy, angle)
    sigma_n_eff = -float(sigma_n) - biot_alpha * p_eff
    tension_floor = sigma_n_eff < 0.0
    tau_max = params.cohesion + max(sigma_n_eff, 0.0) * params.tan_friction
    return ShearCheck(
        failed=bool(abs(tau) > tau_max),
        angle_rad=angle,
        tau=float(tau),
        sigma_n_eff=sigma_n_eff,
        tau_max=float(tau_max),
        tension_floor=tension_floor,
    )


def stress_drop_correction(sxx, syy, sxy, angle_rad, drop):
    """Constant tensor to add so the plane shear shrinks by ``drop``.

    The correction is traceless (Mohr-circle center preserved). If the plane
    shear is smaller than the drop, it is reduced to zero instead of
    overshooting.
    """
    _, tau = plane_stresses(sxx, syy, sxy, angle_rad)
    eff = math.copysign(min(abs(tau), drop), tau)
    c2 = math.cos(2.0 * angle_rad)
    s2 = math.sin(2.0 * angle_rad)
    return np.array([eff * s2, -eff * s2, -eff * c2])


def apply_stress_drop(sigma_total, sigma_prev, angle_rad, drop):
    """Adjusted incremental stress after a shear drop on the given plane.

    Returns sigma_adjusted - sigma_prev where sigma_adjusted equals
    sigma_total with the plane shear reduced by ``drop`` (component triples).
    """
    sxx, syy, sxy = sigma_total
    corr = stress_drop_correction(sxx, syy, sxy, angle_rad, drop)
    adjusted = np.asarray(sigma_total, float) + corr
    return adjusted - np.asarray(sigma_prev, float)


def tension_cutoff(sxx, syy, sxy, cutoff):
    """Clamp principal stresses above +cutoff; tensors rebuilt in place.

    Works on arrays of component triples; returns (sxx, syy, sxy) clipped.
    """
    sxx = np.asarray(sxx, float)
    syy = np.asarray(syy, float)
    sxy = np.asarray(sxy, float)
    mean = 0.5 * (sxx + syy)
    half_diff = 0.5 * (sxx - syy)
    radius = np.sqrt(half_diff**2 + sxy**2)
    s1 = mean + radius
    s3 = mean - radius
    theta = 0.5 * np.arctan2(2.0 * sxy, sxx - syy)
    s1c = np.minimum(s1, cutoff)
    s3c = np.minimum(s3, cutoff)
    c, s = np.cos(theta), np.sin(theta)
    nxx = s1c * c**2 + s3c * s**2
    nyy = s1c * s**2 + s3c * c**2
    nxy = (s1c - s3c) * s * c
    return nxx, nyy, nxy


def safety_margin(sxx, syy, sxy, p_eff, biot_alpha,
                  params: FailureParams) -> float:
    """Admissible pore-pressure increase before Coulomb failure on the plane.

    Zero exactly at failure onset, positive when safe. Uses the fault plane
    in fault mode, the Coulomb-critical plane otherwise.
    """
    if params.fault_angle_deg is not None:
        angle = math.radians(params.fault_angle_deg)
    else:
        angle = float(critical_plane_angle(sxx, syy, sxy, params.tan_friction))
    sigma_n, tau = plane_stresses(sxx, syy, sxy, angle)
    return float(
        -sigma_n - biot_alpha * p_eff
        - (abs(tau) - params.cohesion) / params.tan_friction
    )


def compute_slip(u_trial: np.ndarray, u_dropped: np.ndarray,
                 fault: FaultDescriptor,
                 cells: list[FaultCell]) -> np.ndarray:
    """Per-cell slip magnitude between the trial and stress-drop solutions.

    Both displacement fields are (n_verts, 2). The displacement difference is
    projected on the fault tangent on each side of the band; the slip is the
    magnitude of the left/right relative tangential displacement.
    """
    du = np.asarray(u_dropped, float) - np.asarray(u_trial, float)
    d = fault.tangent
    slips = np.empty(len(cells))
    for i, fc in enumerate(cells):
        left = du[list(fc.left_verts)].mean(axis=0) @ d
        right = du[list(fc.right_verts)].mean(axis=0) @ d
        slips[i] = abs(left - right)
    return slips


@dataclass(frozen=True)
class SeismicEvent:
    """One failure episode on a fault: slip, moment and magnitude."""

    time: float
    fault: str
    cells: tuple[int, ...]
    slip: float          # area-weighted mean slip [m]
    area: float          # ruptured area [m^2]
    g_slip: float        # shear modulus at the slipping cells [Pa]
    moment: float        # N m
    magnitude: float
    cell_slips: tuple[float, ...] = ()  # per slipped cell, same order as cells

    @staticmethod
    def magnitude_from_moment(moment: float) -> float:
        return (math.log10(moment) - 9.1) / 1.5

    @staticmethod
    def moment_from_magnitude(magnitude: float) -> float:
        return 10.0 ** (1.5 * magnitude + 9.1)


def seismic_event(time: float, fault: FaultDescriptor,
                  cells: list[FaultCell], slips: np.ndarray,
                  out_of_plane_depth: float, g_slip: float) -> SeismicEvent | None:
    """Aggregate slipped cells into one event; None when nothing slipped.

    Area is the out-of-plane depth times the total fault-parallel length of
    the slipped cells; slip is the length-weighted mean.
    """
    slips = np.asarray(slips, float)
    active = slips > 0.0
    if not active.any():
        return None
    lengths = np.array([c.length_along for c in cells])[active]
    area = out_of_plane_depth * lengths.sum()
    mean_slip = float((slips[active] * lengths).sum() / lengths.sum())
    moment = g_slip * area * mean_slip
    return SeismicEvent(
        time=time,
        fault=fault.name,
        cells=tuple(int(c.cell) for c, a in zip(cells, active) if a),
        slip=mean_slip,
        area=float(area),
        g_slip=float(g_slip),
        moment=float(moment),
        magnitude=SeismicEvent.magnitude_from_moment(moment),
        cell_slips=tuple(float(v) for v in slips[active]),
    )
