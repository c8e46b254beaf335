"""Analytic reference solutions used for verification.

Two classical coupled flow/deformation problems are provided:

* a pressure-step injection into a laterally constrained 1D column whose
  ends are held fixed, so that the storage has both a local part and a
  nonlocal part proportional to the domain-average pressure rate;
* the draining rectangular sample squeezed between rigid frictionless
  plates (center pressure first rises above its instantaneous undrained
  value before decaying).

Both are evaluated by eigenfunction series with roots of transcendental
equations found by bracketed root finding. A small implicit finite
difference solver for the 1D problem is included as an independent
cross-check of the series; it shares no code with the production solvers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.sparse import diags, identity
from scipy.sparse.linalg import splu


@dataclass(frozen=True)
class LinearPoroelasticCoeffs:
    """Derived coefficients of isotropic linear poroelasticity."""

    biot_alpha: float
    biot_modulus: float        # M [Pa]
    consolidation: float       # c_v [m^2/s]
    nu: float
    nu_undrained: float
    skempton: float

    def __post_init__(self):
        if self.biot_modulus <= 0.0:
            raise ValueError("Biot modulus must be positive")
        if not (0.0 <= self.skempton <= 1.0 + 1e-12):
            raise ValueError(f"Skempton coefficient {self.skempton} outside [0, 1]")
        if not (self.nu < self.nu_undrained <= 0.5):
            raise ValueError("need nu < nu_u <= 0.5")


def linear_coeffs(k_bulk: float, g_shear: float, biot_alpha: float,
                  porosity: float, fluid_bulk: float, perm: float,
                  viscosity: float, k_grain: float = math.inf) -> LinearPoroelasticCoeffs:
    """Storage / stiffness coefficients from drained moduli and fluid data.

    1/M combines the pore-fluid compressibility phi/K_f with the grain
    compressibility term (alpha - phi)/K_grain; incompressible grains and
    fluid give 1/M -> 0.
    """
    inv_m = porosity / fluid_bulk
    if math.isfinite(k_grain):
        inv_m += (biot_alpha - porosity) / k_grain
    nu = (3.0 * k_bulk - 2.0 * g_shear) / (2.0 * (3.0 * k_bulk + g_shear))
    if inv_m == 0.0:  # incompressible constituents
        m = math.inf
        skempton = 1.0 / biot_alpha
        c_v = (perm / viscosity) * (k_bulk + 4.0 * g_shear / 3.0) / biot_alpha**2
    else:
        m = 1.0 / inv_m
        k_u = k_bulk + biot_alpha**2 * m
        skempton = biot_alpha * m / k_u
        c_v = (perm / viscosity) * m * (k_bulk + 4.0 * g_shear / 3.0) / (k_u + 4.0 * g_shear / 3.0)
    nu_u = (3.0 * nu + skempton * (1.0 - 2.0 * nu)) / (3.0 - skempton * (1.0 - 2.0 * nu))
    nu_u = min(nu_u, 0.5)
    return LinearPoroelasticCoeffs(
        biot_alpha=biot_alpha, biot_modulus=m, consolidation=c_v,
        nu=nu, nu_undrained=nu_u, skempton=skempton,
    )


# ---------------------------------------------------------------------------
# constrained 1D injection problem
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Injection1dParams:
    """Material/geometry bundle for the constrained-column injection problem."""

    length: float
    perm: float
    viscosity: float
    porosity: float
    fluid_compressibility: float
    biot_alpha: float
    g_shear: float
    lam: float
    n_terms: int = 800

    @property
    def constrained_modulus(self) -> float:
        return self.lam + 2.0 * self.g_shear

    @property
    def storage(self) -> float:
        """Local storage 1/M + alpha^2 / (lambda + 2G) (grains incompressible
        unless alpha < 1, in which case K_grain = K/(1-alpha))."""
        k_bulk = self.lam + 2.0 * self.g_shear / 3.0
        inv_m = self.porosity * self.fluid_compressibility
        if self.biot_alpha < 1.0:
            k_grain = k_bulk / (1.0 - self.biot_alpha)
            inv_m += (self.biot_alpha - self.porosity) / k_grain
        return inv_m + self.biot_alpha**2 / self.constrained_modulus

    @property
    def nonlocal_ratio(self) -> float:
        """Fraction of the storage carried by the mean-stress constraint."""
        return (self.biot_alpha**2 / self.constrained_modulus) / self.storage

    @property
    def diffusivity(self) -> float:
        return self.perm / self.viscosity / self.storage

    @property
    def t_char(self) -> float:
        return self.length**2 / self.diffusivity


def injection1d_roots(ratio: float, count: int) -> np.ndarray:
    """Roots of tan(b) = -b (1-r)/r, one per interval ((k-1/2) pi, k pi)."""
    if not (0.0 < ratio < 1.0):
        raise ValueError("nonlocal storage ratio must lie in (0, 1)")
    c = (1.0 - ratio) / ratio

    def f(b):
        return math.tan(b) + c * b

    roots = np.empty(count)
    for k in range(1, count + 1):
        lo = (k - 0.5) * math.pi + 1e-12
        hi = k * math.pi - 1e-12
        roots[k - 1] = brentq(f, lo, hi, xtol=1e-14, rtol=8.9e-16)
    return roots


def injection1d_analytic(x, t, params: Injection1dParams) -> np.ndarray:
    """Dimensionless pressure p_d(x, t) for a unit pressure step at x = 0.

    ``x`` in meters, ``t`` in seconds. p_d(0, t) = 1 for t > 0; the initial
    state p_d = 0 is returned for t <= 0.
    """
    x = np.atleast_1d(np.asarray(x, float))
    xs = x / params.length
    if t <= 0.0:
        out = np.zeros_like(xs)
        out[xs == 0.0] = 1.0
        return out
    td = t / params.t_char
    r = params.nonlocal_ratio
    b = injection1d_roots(r, params.n_terms)[:, None]
    c = (1.0 - r) / r
    h = 1.0 - np.cos(b * xs[None, :]) + c * b * np.sin(b * xs[None, :])
    # residue of the Laplace inversion at s = -b^2
    g_prime = (b / np.cos(b) ** 2 - np.tan(b)) / (2.0 * b**3)
    res = (1.0 - r) * h / ((-(b**2)) * r * g_prime)
    return 1.0 + np.sum(res * np.exp(-(b**2) * td), axis=0)


def injection1d_reference_fd(x_out, t_out, params: Injection1dParams,
                             n_cells: int = 2000, n_steps: int = 2500) -> dict:
    """Independent implicit finite difference solve of the same linear model.

    Returns {t: p_d profile at x_out}. The nonlocal (rank-one) storage term
    is handled with the Sherman-Morrison identity. Used to protect the series
    transcription; deliberately separate from the production flow solver.
    """
    s_total = params.storage
    r = params.nonlocal_ratio
    kappa = params.perm / params.viscosity
    length = params.length
    dx = length / n_cells
    xc = (np.arange(n_cells) + 0.5) * dx
    p = np.zeros(n_cells)
    main = -2.0 * np.ones(n_cells)
    main[-1] = -1.0
    main[0] = -3.0  # Dirichlet ghost at x=0 (half-cell spacing)
    lap = diags([np.ones(n_cells - 1), main, np.ones(n_cells - 1)], [-1, 0, 1]).tocsc()
    lap = lap * (kappa / dx**2)
    rhs_bc = np.zeros(n_cells)
    rhs_bc[0] = 2.0 * kappa / dx**2
    t_end = max(t_out)
    ts = np.unique(np.concatenate([[0.0], np.geomspace(t_end / 3e4, t_end, n_steps),
                                   list(t_out)]))
    ones = np.ones(n_cells)
    out = {}
    last_dt = -1.0
    lu = binv_ones = gamma = denom = None
    for i in range(1, len(ts)):
        dt = ts[i] - ts[i - 1]
        if dt <= 0.0:
            continue
        if abs(dt - last_dt) > 1e-12 * dt:
            base = ((s_total / dt) * identity(n_cells, format="csc") - lap).tocsc()
            lu = splu(base)
            binv_ones = lu.solve(ones)
            gamma = s_total * r / (dt * n_cells)
            denom = 1.0 - gamma * binv_ones.sum()
            last_dt = dt
        b = (s_total / dt) * p - (s_total * r / dt) * p.mean() * ones + rhs_bc
        y = lu.solve(b)
        p = y + (gamma * y.sum() / denom) * binv_ones
        for tt in t_out:
            if abs(ts[i] - tt) <= 1e-9 * tt and tt not in out:
                out[tt] = np.interp(np.asarray(x_out, float), xc, p)
    return out


# ---------------------------------------------------------------------------
# rigid-plate drained-sample (Mandel) problem
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MandelSpec:
    """Quarter-domain spec: half-width a, half-height b, plate force per unit
    depth F (positive compressive), and the material bundle."""

    a: float
    b: float
    force: float
    coeffs: LinearPoroelasticCoeffs
    g_shear: float
    n_terms: int = 200

    def __post_init__(self):
        if self.n_terms < 50:
            raise ValueError("series truncation must be at least 50 terms")


def mandel_roots(nu: float, nu_u: float, count: int) -> np.ndarray:
    """Positive roots of tan(x) = (1-nu)/(nu_u-nu) * x, one per branch."""
    if not nu_u > nu:
        raise ValueError("undrained Poisson ratio must exceed drained")
    slope = (1.0 - nu) / (nu_u - nu)

    def f(x):
        return math.tan(x) - slope * x

    roots = np.empty(count)
    for k in range(count):
        lo = k * math.pi + 1e-12
        hi = k * math.pi + 0.5 * math.pi - 1e-12
        try:
            roots[k] = brentq(f, lo, hi, xtol=1e-14, rtol=8.9e-16)
        except ValueError as exc:  # no sign change: bracket failure
            raise RuntimeError(f"root bracket failure on branch {k}") from exc
    return roots


def mandel_initial_pressure(spec: MandelSpec) -> float:
    """Instantaneous undrained pressure after plate loading."""
    c = spec.coeffs
    return spec.force * c.skempton * (1.0 + c.nu_undrained) / (3.0 * spec.a)


def mandel_pressure(x, t, spec: MandelSpec) -> np.ndarray:
    """Pore pressure p(x, t); uniform undrained value at t = 0."""
    c = spec.coeffs
    x = np.atleast_1d(np.asarray(x, float))
    if t <= 0.0:
        return mandel_initial_pressure(spec) * np.ones_like(x)
    w = mandel_roots(c.nu, c.nu_undrained, spec.n_terms)[:, None]
    sw, cw = np.sin(w), np.cos(w)
    decay = np.exp(-(w**2) * c.consolidation * t / spec.a**2)
    terms = (sw / (w - sw * cw)) * (np.cos(w * x[None, :] / spec.a) - cw) * decay
    return (2.0 * spec.force * c.skempton * (1.0 + c.nu_undrained)
            / (3.0 * spec.a)) * np.sum(terms, axis=0)


def mandel_displacement(x, y, t, spec: MandelSpec) -> tuple[np.ndarray, np.ndarray]:
    """Displacements (u_x(x, t), u_y(y, t)); undrained values at t = 0."""
    c = spec.coeffs
    f, a, g = spec.force, spec.a, spec.g_shear
    x = np.atleast_1d(np.asarray(x, float))
    y = np.atleast_1d(np.asarray(y, float))
    if t <= 0.0:
        ux = f * c.nu_undrained / (2.0 * g * a) * x
        uy = -f * (1.0 - c.nu_undrained) / (2.0 * g * a) * y
        return ux, uy
    w = mandel_roots(c.nu, c.nu_undrained, spec.n_terms)[:, None]
    sw, cw = np.sin(w), np.cos(w)
    decay = np.exp(-(w**2) * c.consolidation * t / spec.a**2)
    s1 = np.sum((sw * cw / (w - sw * cw)) * decay, axis=0)[0]
    s2 = np.sum((cw / (w - sw * cw)) * np.sin(w * x[None, :] / a) * decay, axis=0)
    ux = (f * c.nu / (2.0 * g * a) - f * c.nu_undrained / (g * a) * s1) * x + f / g * s2
    uy = (-f * (1.0 - c.nu) / (2.0 * g * a) + f * (1.0 - c.nu_undrained) / (g * a) * s1) * y
    return ux, uy
