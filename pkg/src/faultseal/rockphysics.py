"""Porosity-driven rock property models.

Stiffness estimation follows a two-stage cementation picture: while porosity
lies between the well-sorted porosity ``phi_b`` and the critical porosity
``phi_c``, precipitate accumulates at grain contacts and the contact-cement
(Dvorkin-Nur) relations apply; below ``phi_b`` the extra precipitate fills
pores randomly and the stiffness is interpolated between the ``phi_b`` state
and the pure-grain moduli along the Hashin-Shtrikman lower bound.

Permeability-porosity relationships: Kozeny-Carman, a plain power law, and a
power law anchored at a reference (porosity, permeability) pair.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

logger = logging.getLogger(__name__)


class RockPhysicsError(ValueError):
    """Raised for out-of-range porosities or degenerate parameters."""


@dataclass(frozen=True)
class CementModelParams:
    """Grain/cement moduli and microstructure porosities.

    All moduli in Pa. ``n_coord`` is the grain coordination prefactor of the
    contact-cement stiffness; it is not measurable directly and is exposed
    as a parameter.
    """

    k_grain: float
    g_grain: float
    k_cement: float
    g_cement: float
    phi_c: float
    phi_b: float
    n_coord: float = 9.0

    def __post_init__(self):
        # phi_b may equal phi_c (cementation saturates immediately)
        if not (0.0 < self.phi_b <= self.phi_c < 1.0):
            raise RockPhysicsError(
                f"need 0 < phi_b <= phi_c < 1, got phi_b={self.phi_b}, phi_c={self.phi_c}"
            )
        for name in ("k_grain", "g_grain", "k_cement", "g_cement"):
            if getattr(self, name) <= 0.0:
                raise RockPhysicsError(f"{name} must be positive")

    @property
    def nu_grain(self) -> float:
        r = self.k_grain / self.g_grain
        return 0.5 * (r - 2.0 / 3.0) / (r + 1.0 / 3.0)

    @property
    def nu_cement(self) -> float:
        r = self.k_cement / self.g_cement
        return 0.5 * (r - 2.0 / 3.0) / (r + 1.0 / 3.0)


@dataclass(frozen=True)
class ElasticModuli:
    """Isotropic bulk/shear pair with derived quantities."""

    k: float
    g: float

    @property
    def lam(self) -> float:
        return self.k - 2.0 * self.g / 3.0

    @property
    def e(self) -> float:
        return 9.0 * self.k * self.g / (3.0 * self.k + self.g)

    @property
    def nu(self) -> float:
        return (3.0 * self.k - 2.0 * self.g) / (2.0 * (3.0 * self.k + self.g))


def _contact_cement(params: CementModelParams, phi: float) -> tuple[float, float]:
    """Contact-cement (K, G) for phi in [phi_b, phi_c]."""
    nu_s = params.nu_grain
    nu_c = params.nu_cement
    gs, gc = params.g_grain, params.g_cement
    lam_n = 2.0 * gc * (1.0 - nu_s) * (1.0 - nu_c) / (math.pi * gs * (1.0 - 2.0 * nu_c))
    lam_t = gc / (math.pi * gs)

    a_n = -0.024153 * lam_n**-1.3646
    b_n = 0.20405 * lam_n**-0.89008
    c_n = 0.00024649 * lam_n**-1.9864

    a_t = (
        -1e-2
        * (2.26 * nu_s**2 + 2.07 * nu_s + 2.3)
        * lam_t ** (0.079 * nu_s**2 + 0.1754 * nu_s - 1.342)
    )
    b_t = (0.0573 * nu_s**2 + 0.0937 * nu_s + 0.202) * lam_t ** (
        0.0274 * nu_s**2 + 0.0529 * nu_s - 0.8765
    )
    c_t = (
        1e-4
        * (9.654 * nu_s**2 + 4.945 * nu_s + 3.1)
        * lam_t ** (0.01867 * nu_s**2 + 0.4011 * nu_s - 1.8186)
    )

    # cement fraction of the pore-contact geometry
    cement_alpha = math.sqrt((2.0 / 3.0) * (params.phi_c - phi) / (1.0 - params.phi_c))
    s_n = a_n * cement_alpha**2 + b_n * cement_alpha + c_n
    s_t = a_t * cement_alpha**2 + b_t * cement_alpha + c_t

    m_cement = params.k_cement + 4.0 * params.g_cement / 3.0
    k_dry = params.n_coord * (1.0 - params.phi_c) * m_cement * s_n / 6.0
    g_dry = 0.6 * k_dry + 3.0 * params.n_coord * (1.0 - params.phi_c) * gc * s_t / 20.0
    return k_dry, g_dry


def constant_cement_moduli(params: CementModelParams, phi: float) -> ElasticModuli:
    """Dry-frame (K, G) at porosity ``phi``.

    Contact-cement relations on (phi_b, phi_c]; Hashin-Shtrikman lower-bound
    interpolation between the phi_b frame and the grain mineral on [0, phi_b].
    Continuous at phi_b by construction.
    """
    if phi < 0.0 or phi > params.phi_c + 1e-15:
        raise RockPhysicsError(
            f"porosity {phi} above critical porosity {params.phi_c}"
        )
    phi = min(phi, params.phi_c)
    if phi > params.phi_b:
        k, g = _contact_cement(params, phi)
    else:
        k_b, g_b = _contact_cement(params, params.phi_b)
        t = phi / params.phi_b
        ks, gs = params.k_grain, params.g_grain
        k = 1.0 / (t / (k_b + 4.0 * g_b / 3.0) + (1.0 - t) / (ks + 4.0 * g_b / 3.0)) - 4.0 * g_b / 3.0
        z = g_b / 6.0 * (9.0 * k_b + 8.0 * g_b) / (k_b + 2.0 * g_b)
        g = 1.0 / (t / (g_b + z) + (1.0 - t) / (gs + z)) - z
    if not (math.isfinite(k) and math.isfinite(g)) or k <= 0.0 or g <= 0.0:
        raise RockPhysicsError(
            f"degenerate cement-model result K={k}, G={g} at phi={phi}"
        )
    return ElasticModuli(k=k, g=g)


@lru_cache(maxsize=4096)
def _cached_moduli(params: CementModelParams, phi_key: float) -> ElasticModuli:
    return constant_cement_moduli(params, phi_key)


def cached_cement_moduli(params: CementModelParams, phi: float) -> ElasticModuli:
    """Memoized evaluation with deterministic porosity bucketing (1e-9)."""
    return _cached_moduli(params, round(phi, 9))


def biot_from_moduli(k: float, k_grain: float) -> float:
    """Biot coefficient 1 - K/K_grain, clamped to [0, 1] with a warning."""
    if k_grain <= 0.0:
        raise RockPhysicsError("grain bulk modulus must be positive")
    alpha = 1.0 - k / k_grain
    if alpha < 0.0 or alpha > 1.0:
        logger.warning(
            "Biot coefficient %.4f outside [0, 1] (K=%.3e, K_grain=%.3e); clamping",
            alpha, k, k_grain,
        )
        alpha = min(max(alpha, 0.0), 1.0)
    return alpha


@dataclass(frozen=True)
class KozenyCarman:
    """k = sphericity^2 * phi^3 * d_grain^2 / (180 (1-phi)^2)."""

    sphericity: float
    d_grain: float


@dataclass(frozen=True)
class PowerLaw:
    """k = prefactor * phi^exponent."""

    prefactor: float
    exponent: float


@dataclass(frozen=True)
class AnchoredPowerLaw:
    """k = k_ref * (phi/phi_ref)^exponent."""

    k_ref: float
    phi_ref: float
    exponent: float


PermeabilityLaw = KozenyCarman | PowerLaw | AnchoredPowerLaw


def permeability(law: PermeabilityLaw, phi) -> float:
    """Permeability in m^2 at porosity ``phi`` (scalar or array)."""
    phi = np.asarray(phi, dtype=float)
    if np.any(phi <= 0.0) or np.any(phi >= 1.0):
        raise RockPhysicsError("porosity must lie in (0, 1) for permeability laws")
    if isinstance(law, KozenyCarman):
        k = law.sphericity**2 * phi**3 * law.d_grain**2 / (180.0 * (1.0 - phi) ** 2)
    elif isinstance(law, PowerLaw):
        k = law.prefactor * phi**law.exponent
    elif isinstance(law, AnchoredPowerLaw):
        k = law.k_ref * (phi / law.phi_ref) ** law.exponent
    else:
        raise TypeError(f"unknown permeability law {law!r}")
    return float(k) if k.ndim == 0 else k


def moduli_sweep(params: CementModelParams, n_points: int = 200,
                 perm_law: PermeabilityLaw | None = None) -> np.ndarray:
    """Sweep table over [0, phi_c]: columns phi, K, G, E, nu, biot, k.

    Permeability column is NaN when no law is given.
    """
    phis = np.linspace(0.0, params.phi_c, n_points)
    rows = np.empty((n_points, 7))
    for i, phi in enumerate(phis):
        m = constant_cement_moduli(params, phi)
        alpha = biot_from_moduli(m.k, params.k_grain)
        if perm_law is not None and 0.0 < phi < 1.0:
            k_perm = permeability(perm_law, phi)
        else:
            k_perm = math.nan
        rows[i] = (phi, m.k, m.g, m.e, m.nu, alpha, k_perm)
    return rows
