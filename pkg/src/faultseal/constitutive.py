"""Fluid property models and retention / relative-permeability laws.

Water is slightly compressible with constant viscosity; the gas phase uses a
configurable ideal-gas-like density model. Retention follows van Genuchten
with the Mualem relative permeabilities (m = 1 - 1/n); the capillary curve is
linearly extended below a small effective saturation so that all values stay
finite near dry-out.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace

import numpy as np

logger = logging.getLogger(__name__)

#: lower bound enforced on the van Genuchten exponent after rescaling
VG_N_MIN = 1.05


@dataclass(frozen=True)
class WaterModel:
    """Slightly compressible wetting phase: rho = rho0 (1 + beta (p - p_ref))."""

    rho0: float = 1000.0
    compressibility: float = 5e-10
    p_ref: float = 0.0
    mu: float = 1e-3

    def density(self, p):
        return self.rho0 * (1.0 + self.compressibility * (np.asarray(p, float) - self.p_ref))

    def viscosity(self, p):
        return np.full_like(np.asarray(p, float), self.mu)


@dataclass(frozen=True)
class GasModel:
    """Ideal-gas-like nonwetting phase: rho = rho_ref * p / p_ref.

    Pressure is floored at ``p_floor`` so the density stays positive in
    transient under-pressured states.
    """

    rho_ref: float = 700.0
    p_ref: float = 1.5e7
    mu: float = 5e-5
    p_floor: float = 1e4

    def density(self, p):
        p = np.maximum(np.asarray(p, float), self.p_floor)
        return self.rho_ref * p / self.p_ref

    def viscosity(self, p):
        return np.full_like(np.asarray(p, float), self.mu)


@dataclass(frozen=True)
class RetentionParams:
    """Van Genuchten parameters with treatment scaling factors.

    ``f_alpha`` and ``f_n`` multiply ``vg_alpha`` and ``vg_n`` when a zone is
    rescaled for mineralization (see :func:`rescale_retention`).
    """

    vg_alpha: float
    vg_n: float
    s_wr: float = 0.2
    s_nr: float = 0.05
    f_alpha: float = 0.33
    f_n: float = 0.2
    se_reg: float = 0.01

    def __post_init__(self):
        if self.vg_alpha <= 0.0:
            raise ValueError("vg_alpha must be positive")
        if self.vg_n < VG_N_MIN:
            # allow construction with tabulated sub-unity exponents but clamp
            logger.warning(
                "van Genuchten n=%.4f below %.2f; clamping (capillary curve "
                "becomes a rough representation of the treated medium)",
                self.vg_n, VG_N_MIN,
            )
            object.__setattr__(self, "vg_n", VG_N_MIN)
        if not (0.0 <= self.s_wr < 1.0 and 0.0 <= self.s_nr < 1.0
                and self.s_wr + self.s_nr < 1.0):
            raise ValueError("residual saturations must satisfy s_wr + s_nr < 1")

    @property
    def vg_m(self) -> float:
        return 1.0 - 1.0 / self.vg_n


def vg_capillary_pressure(vg_alpha, vg_n, s_wr, s_nr, se_reg, sw):
    """Array form of the regularized van Genuchten capillary curve.

    All parameters may be scalars or per-cell arrays broadcastable with sw.
    """
    sw = np.asarray(sw, float)
    vg_n = np.asarray(vg_n, float)
    m = 1.0 - 1.0 / vg_n
    se = (sw - s_wr) / (1.0 - s_wr - s_nr)
    core_lo = se_reg ** (-1.0 / m) - 1.0
    pc_lo = core_lo ** (1.0 / vg_n) / vg_alpha
    slope_lo = -(core_lo ** (1.0 / vg_n - 1.0)) * se_reg ** (-1.0 / m - 1.0) \
        / (vg_alpha * vg_n * m)
    se_core = np.clip(se, se_reg, 1.0)
    pc_core = (se_core ** (-1.0 / m) - 1.0) ** (1.0 / vg_n) / vg_alpha
    pc = np.where(
        se >= 1.0,
        0.0,
        np.where(se <= se_reg, pc_lo + slope_lo * (se - se_reg), pc_core),
    )
    return pc


def vg_relative_permeabilities(vg_n, s_wr, s_nr, sw):
    """Array form of the Mualem relative permeability pair."""
    sw = np.asarray(sw, float)
    m = 1.0 - 1.0 / np.asarray(vg_n, float)
    se = np.clip((sw - s_wr) / (1.0 - s_wr - s_nr), 0.0, 1.0)
    inner = 1.0 - se ** (1.0 / m)
    krw = np.sqrt(se) * (1.0 - inner**m) ** 2
    krn = np.sqrt(1.0 - se) * inner ** (2.0 * m)
    return krw, krn


def effective_saturation(params: RetentionParams, sw):
    """Unclipped effective saturation (Sw - Swr) / (1 - Swr - Snr)."""
    sw = np.asarray(sw, float)
    return (sw - params.s_wr) / (1.0 - params.s_wr - params.s_nr)


def capillary_pressure(params: RetentionParams, sw):
    """p_c = p_n - p_w >= 0, van Genuchten with linear low-saturation extension.

    Monotone nonincreasing in Sw over [0, 1], zero at full wetting saturation,
    finite everywhere (the curve continues linearly below ``se_reg``).
    """
    pc = vg_capillary_pressure(params.vg_alpha, params.vg_n, params.s_wr,
                               params.s_nr, params.se_reg, sw)
    return float(pc) if pc.ndim == 0 else pc


def relative_permeabilities(params: RetentionParams, sw):
    """Mualem (k_rw, k_rn) from the van Genuchten retention exponent."""
    krw, krn = vg_relative_permeabilities(params.vg_n, params.s_wr,
                                          params.s_nr, sw)
    if krw.ndim == 0:
        return float(krw), float(krn)
    return krw, krn


def rescale_retention(params: RetentionParams, phi_new: float,
                      phi_ref: float) -> RetentionParams:
    """Retention parameters after mineralization from phi_ref down to phi_new.

    Applies the treatment scaling factors (vg_alpha *= f_alpha, vg_n *= f_n);
    the exponent is clamped to stay above the admissible minimum. Identity
    when the porosity is unchanged.
    """
    if not (0.0 < phi_new <= phi_ref):
        raise ValueError(f"need 0 < phi_new <= phi_ref, got {phi_new} > {phi_ref}")
    if phi_new == phi_ref:
        return params
    new_alpha = params.vg_alpha * params.f_alpha
    new_n = params.vg_n * params.f_n
    if new_n < VG_N_MIN:
        logger.warning(
            "rescaled van Genuchten n=%.4f clamped to %.2f", new_n, VG_N_MIN
        )
        new_n = VG_N_MIN
    return replace(params, vg_alpha=new_alpha, vg_n=new_n)
