import math

import numpy as np
import pytest

from spdsim.hilbert import (
    QOperator,
    SpaceLayout,
    annihilation,
    coherent_state,
    density,
    fock,
    ket,
    number,
    partial_trace,
    product_density,
)


def test_layout_validation():
    lay = SpaceLayout((9, 3, 3))
    assert lay.total_dim == 81
    assert lay.nmodes == 3
    with pytest.raises(ValueError):
        SpaceLayout((0, 3))
    assert SpaceLayout((2, 1, 1)).total_dim == 2


def test_annihilation_pauli_lowering():
    a = annihilation(SpaceLayout((2, 1, 1)), "transmon")
    expected = np.zeros((2, 2))
    expected[0, 1] = 1.0
    assert np.allclose(a.matrix, expected)


def test_number_operator_spectrum():
    n_b = number(SpaceLayout((3, 3, 3)), "buffer")
    evals = np.sort(np.linalg.eigvalsh(n_b.matrix))
    assert np.allclose(np.unique(np.round(evals, 12)), [0, 1, 2])


def test_transmon_number_diagonal_9levels():
    lay = SpaceLayout((9, 3, 3))
    nq = number(lay, "transmon")
    # direct construction oracle: diagonal must enumerate 0..8 on the factor
    diag = np.real(np.diag(nq.matrix)).reshape(9, 3, 3)
    for n in range(9):
        assert np.allclose(diag[n], n)


def test_commutator_below_truncation_edge():
    lay = SpaceLayout((6, 1, 1))
    a = annihilation(lay, 0)
    comm = (a @ a.dag() - a.dag() @ a).matrix
    # identity except the top Fock level of the truncated ladder
    assert np.allclose(np.diag(comm)[:-1], 1.0)
    assert np.isclose(np.diag(comm)[-1].real, 1.0 - 6)


def test_disjoint_factor_operators_commute():
    lay = SpaceLayout((4, 3, 2))
    aq = annihilation(lay, "transmon")
    ab = annihilation(lay, "buffer")
    assert np.allclose((aq @ ab).matrix, (ab @ aq).matrix)


def test_partial_trace_product_state():
    lay = SpaceLayout((3, 2, 2))
    rho_q = np.diag([0.5, 0.3, 0.2]).astype(complex)
    rho_b = np.diag([0.9, 0.1]).astype(complex)
    rho_w = np.array([[0.5, 0.2], [0.2, 0.5]], dtype=complex)
    st = product_density(lay, [rho_q, rho_b, rho_w])
    red = partial_trace(st, "transmon")
    assert np.allclose(red.data, rho_q, atol=1e-12)
    red_w = partial_trace(st, "waste")
    assert np.allclose(red_w.data, rho_w, atol=1e-12)


def test_partial_trace_maximally_entangled():
    lay = SpaceLayout((2, 2, 1))
    v = np.zeros(4, dtype=complex)
    v[0] = v[3] = 1 / math.sqrt(2)
    st = ket(lay, v).as_density()
    red = partial_trace(st, 0)
    assert np.allclose(red.data, np.eye(2) / 2, atol=1e-12)


def _ptrace_bruteforce(rho, dims, keep):
    """Independent index-sum oracle over explicit loops."""
    d = dims[keep]
    out = np.zeros((d, d), dtype=complex)
    idx = [range(x) for x in dims]
    import itertools

    for left in itertools.product(*idx):
        for right in itertools.product(*idx):
            if all(left[m] == right[m] for m in range(len(dims)) if m != keep):
                i = np.ravel_multi_index(left, dims)
                j = np.ravel_multi_index(right, dims)
                out[left[keep], right[keep]] += rho[i, j]
    return out


def test_partial_trace_random_vs_bruteforce():
    rng = np.random.default_rng(42)
    dims = (3, 2, 2)
    n = 12
    m = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    rho = m @ m.conj().T
    rho /= np.trace(rho).real
    st = density(SpaceLayout(dims), rho)
    red = partial_trace(st, "buffer")
    oracle = _ptrace_bruteforce(rho, dims, 1)
    assert np.allclose(red.data, oracle, atol=1e-12)
    assert abs(np.trace(red.data).real - 1.0) < 1e-12


def test_partial_trace_rejects_kets():
    st = fock(SpaceLayout((2, 2, 2)), (0, 0, 0))
    with pytest.raises(ValueError):
        partial_trace(st, 0)


def test_coherent_alpha_zero_is_vacuum():
    st = coherent_state(5, 0.0)
    v = np.zeros(5)
    v[0] = 1.0
    assert np.allclose(st.data, v)


def test_coherent_mean_photon_number():
    st = coherent_state(20, 1.0)
    n = np.arange(20)
    assert abs(np.sum(n * np.abs(st.data) ** 2) - 1.0) < 1e-6


def test_coherent_truncation_renormalization():
    # Poisson tail oracle: untruncated weight of |alpha|^2 = 4 within dim 9
    alpha = 2.0
    kept = sum(math.exp(-4.0) * 4.0**n / math.factorial(n) for n in range(9))
    with pytest.warns(UserWarning):
        st = coherent_state(9, alpha)
    c0 = abs(st.data[0]) ** 2  # renormalized vacuum weight
    assert np.isclose(c0, math.exp(-4.0) / kept, rtol=1e-10)


def test_density_validation():
    lay = SpaceLayout((2,))
    with pytest.raises(ValueError):
        density(lay, np.array([[0.9, 0.0], [0.0, 0.2]]))  # trace 1.1
    with pytest.raises(ValueError):
        density(lay, np.array([[0.5, 0.4], [0.1, 0.5]]))  # not Hermitian
    with pytest.raises(ValueError):
        density(lay, np.array([[1.2, 0.0], [0.0, -0.2]]))  # negative eigenvalue


def test_operator_algebra_and_factors():
    lay = SpaceLayout((3, 2, 2))
    aq = annihilation(lay, 0)
    assert aq.factors is not None
    prod = aq.dag() @ annihilation(lay, 2)
    assert prod.factors is not None
    full = np.kron(prod.factors[0], np.kron(prod.factors[1], prod.factors[2]))
    assert np.allclose(full, prod.matrix)
    # transmon ladder element sits at flat stride d_buffer * d_waste = 4
    assert (2.0 * aq).matrix[0, 4] == pytest.approx(2.0)
