import numpy as np
import pytest

from faultseal.rockphysics import (
    AnchoredPowerLaw, CementModelParams, KozenyCarman, PowerLaw,
    RockPhysicsError, biot_from_moduli, constant_cement_moduli, permeability,
    moduli_sweep,
)

# stiff-grain / stiff-cement parameter set used throughout
PARAMS = CementModelParams(k_grain=38e9, g_grain=44e9, k_cement=98e9,
                           g_cement=35e9, phi_c=0.48, phi_b=0.42, n_coord=9.0)

# quartz grain / calcite cement (column-test materials)
PARAMS_QC = CementModelParams(k_grain=38e9, g_grain=44e9, k_cement=63e9,
                              g_cement=31e9, phi_c=0.44, phi_b=0.42, n_coord=1.0)


def test_zero_porosity_recovers_grain_moduli():
    m = constant_cement_moduli(PARAMS, 0.0)
    assert m.k == pytest.approx(38e9, rel=1e-10)
    assert m.g == pytest.approx(44e9, rel=1e-10)


def test_continuity_at_well_sorted_porosity():
    lo = constant_cement_moduli(PARAMS, PARAMS.phi_b - 1e-12)
    hi = constant_cement_moduli(PARAMS, PARAMS.phi_b + 1e-12)
    assert lo.k == pytest.approx(hi.k, rel=1e-8)
    assert lo.g == pytest.approx(hi.g, rel=1e-8)


def test_contact_cement_golden_value():
    # frozen output of a line-by-line transcription script of the
    # contact-cement polynomial relations, run before this module existed
    m = constant_cement_moduli(PARAMS, 0.45)
    assert m.k == pytest.approx(4.60006898e9, rel=1e-6)
    assert m.g == pytest.approx(6.07010052e9, rel=1e-6)


def test_cement_poisson_ratio():
    assert PARAMS.nu_cement == pytest.approx(0.3404, abs=2e-4)


def test_monotone_decrease_over_sweep():
    phis = np.linspace(0.0, PARAMS.phi_c, 1000)
    ks = np.array([constant_cement_moduli(PARAMS, p).k for p in phis])
    gs = np.array([constant_cement_moduli(PARAMS, p).g for p in phis])
    assert np.all(np.diff(ks) < 0.0)
    assert np.all(np.diff(gs) < 0.0)


def test_poisson_ratio_range_stiff_set():
    # positive nu everywhere except the degenerate zero-cement endpoint,
    # where K collapses faster than G and the frame goes briefly auxetic
    phis = np.linspace(0.0, 0.999 * PARAMS.phi_c, 500)
    nus = np.array([constant_cement_moduli(PARAMS, p).nu for p in phis])
    assert np.all(nus > 0.0)
    assert np.all(nus < 0.5)
    assert constant_cement_moduli(PARAMS, PARAMS.phi_c).nu > -1.0


def test_poisson_ratio_admissible_quartz_calcite():
    # with a shear-stiff grain the blend can go auxetic; it must stay
    # within the thermodynamically admissible range
    phis = np.linspace(0.0, PARAMS_QC.phi_c, 500)
    nus = np.array([constant_cement_moduli(PARAMS_QC, p).nu for p in phis])
    assert np.all(nus > -1.0)
    assert np.all(nus < 0.5)


def test_above_critical_porosity_rejected():
    with pytest.raises(RockPhysicsError, match="critical"):
        constant_cement_moduli(PARAMS, 0.49)


def test_biot_limits():
    assert biot_from_moduli(0.0, 27e9) == 1.0
    assert biot_from_moduli(27e9, 27e9) == 0.0
    assert biot_from_moduli(6e9, 27e9) == pytest.approx(0.778, abs=5e-4)


def test_biot_clamped_with_warning(caplog):
    with caplog.at_level("WARNING"):
        assert biot_from_moduli(30e9, 27e9) == 0.0
    assert "clamping" in caplog.text


def test_biot_at_critical_porosity_below_one():
    m = constant_cement_moduli(PARAMS, PARAMS.phi_c)
    alpha = biot_from_moduli(m.k, PARAMS.k_grain)
    assert m.k > 0.0
    assert alpha < 1.0


def test_anchored_power_law_table_values():
    law = AnchoredPowerLaw(k_ref=1.9e-13, phi_ref=0.15, exponent=3.0)
    assert permeability(law, 0.07) == pytest.approx(1.9e-14, rel=0.02)
    assert permeability(law, 0.05) == pytest.approx(7.0e-15, rel=0.006)
    assert permeability(law, 0.15) == 1.9e-13


def test_anchored_power_law_scale_invariance():
    law1 = AnchoredPowerLaw(k_ref=1e-13, phi_ref=0.2, exponent=3.0)
    law2 = AnchoredPowerLaw(k_ref=1e-13, phi_ref=0.1, exponent=3.0)
    assert permeability(law1, 0.1) == pytest.approx(permeability(law2, 0.05))


def test_kozeny_carman_monotone():
    law = KozenyCarman(sphericity=0.9, d_grain=2e-4)
    phis = np.linspace(0.05, 0.45, 50)
    ks = permeability(law, phis)
    assert np.all(np.diff(ks) > 0.0)


def test_power_law_basic():
    law = PowerLaw(prefactor=1e-11, exponent=3.0)
    assert permeability(law, 0.1) == pytest.approx(1e-14)


def test_permeability_rejects_unit_porosity():
    with pytest.raises(RockPhysicsError):
        permeability(KozenyCarman(0.9, 2e-4), 1.0)


def test_sweep_table_shape_and_content():
    rows = moduli_sweep(PARAMS, n_points=50,
                        perm_law=PowerLaw(prefactor=1e-11, exponent=3.0))
    assert rows.shape == (50, 7)
    assert rows[0, 1] == pytest.approx(38e9, rel=1e-9)
    assert np.all(np.isfinite(rows[:, :6]))


def test_invalid_params_rejected():
    with pytest.raises(RockPhysicsError):
        CementModelParams(k_grain=38e9, g_grain=44e9, k_cement=98e9,
                          g_cement=35e9, phi_c=0.42, phi_b=0.48)
