import math

import numpy as np
import pytest
from scipy.constants import hbar

from spdsim.constants import TWO_PI, amplitude_to_dbm, dbm_to_amplitude
from spdsim.detector import (
    EfficiencyReport,
    SweepPoint,
    assemble_report,
    eta_det_power_curve,
    fit_nq_curve,
    lorentzian,
    lorentzian_fit,
    power_law_fit,
    sensitivity,
)

KAPPA_B = TWO_PI * 3.7e6
KAPPA_W = TWO_PI * 16.7e6
T_B = 0.55e-6
NB_GRID = np.array([0.05, 0.1, 0.2, 0.3, 0.4, 0.5])


def _curve(n_star, eta_c, nb=NB_GRID, t_b=T_B):
    flux = nb * KAPPA_B / 4
    return n_star * (1 - np.exp(-eta_c * flux * t_b))


def _point(y, power=-67.0):
    return SweepPoint(
        pump_power_dbm=power, pump_freq=TWO_PI * 5.1595e9, n_b_grid=NB_GRID, n_q_values=y
    )


def test_fit_nq_roundtrip_noiseless():
    eta_det, n_star, eta_c, rms = fit_nq_curve(
        _point(_curve(0.97, 0.5)), t_b=T_B, kappa_b=KAPPA_B
    )
    assert abs(n_star - 0.97) / 0.97 < 0.01
    assert abs(eta_c - 0.5) / 0.5 < 0.01
    assert rms < 1e-10
    assert eta_det == pytest.approx(n_star * eta_c)


def test_fit_nq_roundtrip_with_noise():
    rng = np.random.default_rng(123)
    y = _curve(0.97, 0.5) + 0.01 * rng.standard_normal(NB_GRID.size)
    _, n_star, eta_c, _ = fit_nq_curve(_point(y), t_b=T_B, kappa_b=KAPPA_B)
    assert abs(n_star - 0.97) / 0.97 < 0.05
    assert abs(eta_c - 0.5) / 0.5 < 0.05


def test_fit_nq_zero_curve():
    eta_det, n_star, eta_c, _ = fit_nq_curve(
        _point(np.zeros_like(NB_GRID)), t_b=T_B, kappa_b=KAPPA_B
    )
    assert eta_det == 0.0


def test_fit_nq_idempotent_on_own_curve():
    _, n1, e1, _ = fit_nq_curve(_point(_curve(0.9, 0.7)), t_b=T_B, kappa_b=KAPPA_B)
    refit = fit_nq_curve(_point(_curve(n1, e1)), t_b=T_B, kappa_b=KAPPA_B)
    assert abs(refit[1] - n1) < 1e-10
    assert abs(refit[2] - e1) < 1e-10


def test_fit_nq_requires_enough_points():
    with pytest.raises(ValueError):
        fit_nq_curve(
            SweepPoint(-67.0, 1.0, NB_GRID[:3], np.zeros(3)), t_b=T_B, kappa_b=KAPPA_B
        )


def test_lorentzian_fit_exact_roundtrip():
    f = np.linspace(5.14e9, 5.18e9, 11)
    y = lorentzian(f, 0.86, 5.156e9, 16.7e6)
    amp, center, width, rms, flag = lorentzian_fit(f, y)
    assert not flag
    assert abs(amp - 0.86) < 1e-8
    assert abs(center - 5.156e9) / 5.156e9 < 1e-8
    assert abs(width - 16.7e6) / 16.7e6 < 1e-6
    assert rms < 1e-9


def test_lorentzian_fit_noise():
    rng = np.random.default_rng(7)
    f = np.linspace(5.14e9, 5.18e9, 15)
    y = lorentzian(f, 0.86, 5.156e9, 16.7e6) + 0.01 * rng.standard_normal(f.size)
    amp, center, width, _, _ = lorentzian_fit(f, y)
    assert abs(amp - 0.86) / 0.86 < 0.05
    assert abs(width - 16.7e6) / 16.7e6 < 0.25


def test_lorentzian_fit_constant_series_flagged():
    f = np.linspace(1.0, 2.0, 7)
    amp, _, width, _, flag = lorentzian_fit(f, np.full(7, 0.3))
    assert flag and math.isinf(width)
    assert amp == pytest.approx(0.3)


def test_power_law_fit_roundtrip():
    powers = np.linspace(-78, -67, 10)
    c_true = TWO_PI * 3.6e6 * 1995.6
    y = eta_det_power_curve(powers, 0.9, c_true, KAPPA_B, KAPPA_W)
    n_star, c, rms = power_law_fit(powers, y, KAPPA_B, KAPPA_W)
    assert abs(n_star - 0.9) / 0.9 < 0.01
    assert abs(c - c_true) / c_true < 0.01
    assert rms < 1e-10


def test_power_law_fit_with_noise():
    rng = np.random.default_rng(11)
    powers = np.linspace(-78, -67, 12)
    c_true = TWO_PI * 3.6e6 * 1995.6
    y = eta_det_power_curve(powers, 0.9, c_true, KAPPA_B, KAPPA_W)
    y = y + 0.01 * rng.standard_normal(powers.size)
    n_star, c, _ = power_law_fit(powers, y, KAPPA_B, KAPPA_W)
    assert abs(n_star - 0.9) / 0.9 < 0.05
    assert abs(c - c_true) / c_true < 0.05


def test_power_law_unit_saturation_reference_curve():
    c = TWO_PI * 3.6e6 * 1995.6
    # matching power: k_nl(P) = k_b exactly
    p_match = 20 * math.log10(math.sqrt(KAPPA_B * KAPPA_W) / 2 / c)
    assert eta_det_power_curve(np.array([p_match]), 1.0, c, KAPPA_B, KAPPA_W)[
        0
    ] == pytest.approx(1.0, abs=1e-12)
    y = eta_det_power_curve(np.linspace(-100, -50, 200), 1.0, c, KAPPA_B, KAPPA_W)
    assert y[0] < 2e-3 and y[0] < y[50]  # vanishes toward zero pump power


def test_sensitivity_values():
    s, s_ti = sensitivity(0.86, 0.78, TWO_PI * 7.955e9, 26e3)
    assert np.isclose(s, 9.9e-22, rtol=0.01)
    assert np.isclose(s, hbar * TWO_PI * 7.955e9 * math.sqrt(26e3) / 0.86, rtol=1e-12)
    assert s_ti > s


def test_sensitivity_zero_dark_counts():
    s, s_ti = sensitivity(0.86, 0.78, TWO_PI * 7.955e9, 0.0)
    assert s == 0.0 and s_ti == 0.0


def test_sensitivity_scaling():
    s1, _ = sensitivity(0.4, 0.4, TWO_PI * 7.955e9, 26e3)
    s2, _ = sensitivity(0.8, 0.8, TWO_PI * 7.955e9, 26e3)
    assert np.isclose(s1, 2 * s2, rtol=1e-12)


def test_sensitivity_undefined_at_zero_efficiency():
    with pytest.raises(ValueError):
        sensitivity(0.0, 0.0, 1.0, 1.0)


def test_report_invariants():
    r = assemble_report(
        eta_c=0.96, n_star=0.9, eta_det_ti=0.78, omega_b=TWO_PI * 7.955e9, r_dc=26e3
    )
    assert r.eta_det == pytest.approx(0.96 * 0.9, abs=1e-12)
    assert 0.0 <= r.eta_det_ti <= r.eta_det <= 1.0
    with pytest.raises(ValueError):
        EfficiencyReport(
            eta_c=0.5, n_star=0.5, eta_det=0.25, eta_det_ti=0.5,
            s_w_sqrthz=1.0, s_ti_w_sqrthz=1.0, r_dc=0.0,
        )


def test_dbm_conversions_bijective():
    rng = np.random.default_rng(5)
    for p in rng.uniform(-90, -40, size=20):
        assert abs(amplitude_to_dbm(dbm_to_amplitude(p, 1995.6), 1995.6) - p) < 1e-12
