import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spdsim.analysis import (
    detect_bimodality,
    detect_cpp,
    husimi_q,
    population_breakdown,
    renyi_entropy,
    ti_correction,
)
from spdsim.hilbert import SpaceLayout, coherent_state, density, fock


def _diag_state(probs):
    lay = SpaceLayout((len(probs),))
    return density(lay, np.diag(np.asarray(probs, dtype=complex)))


def test_renyi_pure_state_is_zero():
    st9 = fock(SpaceLayout((9,)), (0,)).as_density()
    assert renyi_entropy(st9) == pytest.approx(0.0, abs=1e-12)


def test_renyi_maximally_mixed():
    st9 = _diag_state([1 / 9] * 9)
    assert renyi_entropy(st9) == pytest.approx(math.log2(9), abs=1e-12)


def test_renyi_two_outcome():
    st = _diag_state([0.5, 0.5, 0.0, 0.0])
    assert renyi_entropy(st) == pytest.approx(1.0, abs=1e-12)


def test_renyi_unitary_invariance():
    rng = np.random.default_rng(0)
    probs = rng.dirichlet(np.ones(6))
    rho = np.diag(probs).astype(complex)
    lay = SpaceLayout((6,))
    s0 = renyi_entropy(density(lay, rho))
    for _ in range(5):
        m = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
        q, _ = np.linalg.qr(m)
        s = renyi_entropy(density(lay, q @ rho @ q.conj().T, herm_tol=1e-9))
        assert abs(s - s0) < 1e-9


def test_renyi_alpha_one_rejected():
    with pytest.raises(ValueError):
        renyi_entropy(_diag_state([1.0, 0.0]), alpha=1.0)


def test_husimi_vacuum_gaussian():
    vac = fock(SpaceLayout((9,)), (0,)).as_density()
    g = husimi_q(vac)
    # analytic: Q(alpha) = exp(-|alpha|^2)/pi
    A = g.re_axis[None, :] + 1j * g.im_axis[:, None]
    assert np.max(np.abs(g.values - np.exp(-np.abs(A) ** 2) / np.pi)) < 1e-12
    assert abs(g.values.max() - 1 / np.pi) < 1e-6
    assert g.normalization() == pytest.approx(1.0, abs=1e-3)


def test_husimi_coherent_peak_location():
    beta = 1.5 - 0.5j
    st = coherent_state(25, beta).as_density()
    g = husimi_q(st)
    iy, ix = np.unravel_index(np.argmax(g.values), g.values.shape)
    assert abs(complex(g.re_axis[ix], g.im_axis[iy]) - beta) < 0.15
    assert g.values.max() <= 1 / np.pi + 1e-12


def test_husimi_bounded_by_inverse_pi():
    rng = np.random.default_rng(3)
    m = rng.normal(size=(9, 9)) + 1j * rng.normal(size=(9, 9))
    rho = m @ m.conj().T
    rho /= np.trace(rho).real
    g = husimi_q(density(SpaceLayout((9,)), rho))
    assert g.values.max() <= 1 / np.pi + 1e-12


def test_husimi_normalization_tracks_truncation():
    # |alpha| = 2 state: grid captures nearly all mass, tail reported
    with pytest.warns(UserWarning):
        st = coherent_state(9, 2.0).as_density()
    g = husimi_q(st)
    assert g.normalization() >= 1.0 - g.truncation_weight - 1e-3
    assert g.normalization() <= 1.0 + 1e-3


def test_bimodality_vacuum_single_peak():
    vac = fock(SpaceLayout((9,)), (0,)).as_density()
    count, locs = detect_bimodality(husimi_q(vac))
    assert count == 1
    assert abs(locs[0]) < 0.2


def test_bimodality_cat_mixture_two_peaks():
    # balanced mixture of coherent projectors at +/-2
    plus = coherent_state(30, 2.0).as_density().data
    minus = coherent_state(30, -2.0).as_density().data
    st = density(SpaceLayout((30,)), 0.5 * (plus + minus))
    count, locs = detect_bimodality(husimi_q(st))
    assert count == 2
    xs = sorted(l.real for l in locs)
    assert abs(xs[0] + 2) < 0.3 and abs(xs[1] - 2) < 0.3


def test_detect_cpp_linear_ramp_no_jump():
    p = np.linspace(-73, -59, 15)
    assert detect_cpp(p, np.linspace(0.0, 1.0, 15)) is None


def test_detect_cpp_step_function():
    p = np.linspace(-73, -59, 15)
    y = np.where(np.arange(15) >= 9, 1.0, 0.0)
    assert detect_cpp(p, y) == pytest.approx(p[9])


@given(st.floats(min_value=-5, max_value=5, allow_nan=False))
@settings(max_examples=20, deadline=None)
def test_detect_cpp_offset_invariance(offset):
    p = np.linspace(-73, -59, 15)
    y = np.where(np.arange(15) >= 6, 0.8, 0.01) + 0.001 * np.arange(15)
    assert detect_cpp(p, y + offset) == detect_cpp(p, y)


def test_detect_cpp_needs_five_points():
    with pytest.raises(ValueError):
        detect_cpp(np.array([-70, -69, -68, -67.0]), np.zeros(4))


def test_detect_cpp_monotone_grid_required():
    with pytest.raises(ValueError):
        detect_cpp(np.array([-70, -68, -69, -67, -66.0]), np.zeros(5))


def test_ti_correction_single_excitation():
    st = fock(SpaceLayout((9,)), (1,)).as_density()
    assert ti_correction(st) == pytest.approx(1.0)
    bd = population_breakdown(st)
    assert bd.total_population == pytest.approx(1.0)


def test_ti_correction_strips_high_levels():
    st = _diag_state([0.0, 0.9, 0.0, 0.1, 0.0])
    assert ti_correction(st, cutoff=2) == pytest.approx(0.9)
    assert population_breakdown(st).total_population == pytest.approx(1.2)


def test_ti_correction_full_cutoff_equals_population():
    rng = np.random.default_rng(1)
    probs = rng.dirichlet(np.ones(9))
    st = _diag_state(probs)
    full = ti_correction(st, cutoff=8)
    assert full == pytest.approx(population_breakdown(st).total_population, abs=1e-12)


def test_ti_correction_cutoff_bounds():
    st = _diag_state([1.0, 0.0])
    with pytest.raises(ValueError):
        ti_correction(st, cutoff=2)
