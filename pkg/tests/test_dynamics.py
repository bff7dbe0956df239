import numpy as np
import pytest

from spdsim.constants import TWO_PI
from spdsim.hilbert import (
    QOperator,
    SpaceLayout,
    annihilation,
    density,
    fock,
    identity,
    number,
)
from spdsim.model import (
    CollapseOp,
    DriveSettings,
    SystemParams,
    build_collapse_ops,
    build_hamiltonian,
)
from spdsim.dynamics import (
    DegenerateSteadyStateError,
    PropagationConfig,
    StiffnessError,
    expectations,
    max_step_cap,
    propagate,
    steady_state,
)


def _qubit_decay_setup(gamma=1e5):
    lay = SpaceLayout((2, 1, 1))
    p = SystemParams(
        omega_q=1.0, omega_b=1.0, omega_w=1.0, kappa_b=0.0, kappa_w=0.0,
        gamma_q=gamma, g4=0.0,
    )
    d = DriveSettings(pump_power_dbm=0.0, pump_freq=TWO_PI * 1e9, pump_calib=0.0)
    H = build_hamiltonian(p, d, lay)
    cops = build_collapse_ops(p, lay)
    rho0 = fock(lay, (1, 0, 0)).as_density()
    return lay, H, cops, rho0


@pytest.mark.parametrize("backend", ["numba", "scipy"])
def test_qubit_decay_matches_exponential(backend):
    gamma = 1e5
    lay, H, cops, rho0 = _qubit_decay_setup(gamma)
    times = (2e-6, 5e-6, 1e-5, 2e-5)
    traj = propagate(H, cops, rho0, PropagationConfig(t_final=2e-5, sample_times=times), backend=backend)
    pe = np.array([s.data[1, 1].real for s in traj.states])
    assert np.max(np.abs(pe - np.exp(-gamma * traj.times))) < 1e-6


def test_driven_cavity_steady_photon_number():
    lay = SpaceLayout((2, 12, 1))
    kb = TWO_PI * 3.7e6
    p = SystemParams(omega_q=1.0, omega_b=1.0, omega_w=1.0, kappa_b=kb,
                     kappa_w=0.0, gamma_q=0.0, g4=0.0)
    d = DriveSettings(pump_power_dbm=0.0, pump_freq=TWO_PI * 1e9, pump_calib=0.0,
                      b_in_flux=0.05 * kb / 4.0)
    H = build_hamiltonian(p, d, lay)
    cops = build_collapse_ops(p, lay)
    rho0 = fock(lay, (0, 0, 0)).as_density()
    traj = propagate(H, cops, rho0, PropagationConfig(t_final=30 / kb))
    nb = expectations(traj, {"n_b": number(lay, "buffer")})["n_b"][-1]
    eps = d.eps_b(kb)
    assert abs(nb - 4 * eps**2 / kb**2) < 1e-4


def test_numba_and_scipy_backends_agree():
    lay = SpaceLayout((3, 3, 2))
    p = SystemParams(omega_q=TWO_PI * 5.664e9, omega_b=TWO_PI * 7.955e9,
                     omega_w=TWO_PI * 7.609e9, kappa_b=TWO_PI * 2e6,
                     kappa_w=TWO_PI * 10e6, gamma_q=2e4, g4=TWO_PI * 2e6,
                     chi=(-TWO_PI * 3e8,), t_eff=0.08)
    d = DriveSettings(pump_power_dbm=-60.0, pump_freq=TWO_PI * 5e9, pump_calib=1e3,
                      qubit_drive_calib=TWO_PI * 2e10, b_in_flux=2e5,
                      detuning_qwbp=TWO_PI * 10e6)
    H = build_hamiltonian(p, d, lay)
    cops = build_collapse_ops(p, lay)
    rho0 = fock(lay, (0, 0, 0)).as_density()
    cfg = PropagationConfig(t_final=5e-9, rtol=1e-8, atol=1e-12)
    ta = propagate(H, cops, rho0, cfg, backend="numba")
    tb = propagate(H, cops, rho0, cfg, backend="scipy")
    assert np.max(np.abs(ta.states[-1].data - tb.states[-1].data)) < 1e-9


def test_propagation_linearity():
    lay, H, cops, _ = _qubit_decay_setup()
    r1 = fock(lay, (1, 0, 0)).as_density()
    r0 = fock(lay, (0, 0, 0)).as_density()
    mix = density(lay, 0.5 * (r1.data + r0.data))
    cfg = PropagationConfig(t_final=1e-5)
    out_mix = propagate(H, cops, mix, cfg).states[-1].data
    out_avg = 0.5 * (
        propagate(H, cops, r1, cfg).states[-1].data
        + propagate(H, cops, r0, cfg).states[-1].data
    )
    assert np.max(np.abs(out_mix - out_avg)) < 1e-8


def test_trace_distance_contractivity():
    lay, H, cops, _ = _qubit_decay_setup()
    r1 = fock(lay, (1, 0, 0)).as_density()
    r2 = density(lay, np.array([[0.7, 0.3], [0.3, 0.3]], dtype=complex))
    times = tuple(np.linspace(1e-6, 2e-5, 8))
    cfg = PropagationConfig(t_final=2e-5, sample_times=times)
    t1 = propagate(H, cops, r1, cfg).states
    t2 = propagate(H, cops, r2, cfg).states
    dists = [
        float(np.sum(np.abs(np.linalg.eigvalsh(a.data - b.data)))) / 2
        for a, b in zip(t1, t2)
    ]
    assert all(dists[i + 1] <= dists[i] + 1e-6 for i in range(len(dists) - 1))


def test_everything_off_converges_to_ground():
    lay = SpaceLayout((3, 3, 3))
    p = SystemParams(omega_q=1.0, omega_b=1.0, omega_w=1.0, kappa_b=TWO_PI * 3.7e6,
                     kappa_w=TWO_PI * 16.7e6, gamma_q=1e6, g4=0.0, chi=(0.0,), t_eff=0.0)
    d = DriveSettings(pump_power_dbm=0.0, pump_freq=TWO_PI * 1e9, pump_calib=0.0)
    H = build_hamiltonian(p, d, lay)
    cops = build_collapse_ops(p, lay)
    rho0 = fock(lay, (2, 2, 2)).as_density()
    traj = propagate(H, cops, rho0, PropagationConfig(t_final=2e-5))
    ops = {m: number(lay, m) for m in ("transmon", "buffer", "waste")}
    ex = expectations(traj, ops)
    assert all(ex[m][-1] < 1e-6 for m in ops)


def test_step_halving_stability():
    lay, H, cops, rho0 = _qubit_decay_setup()
    rtol = 1e-8
    base = PropagationConfig(t_final=1e-5, max_step=1e-7, rtol=rtol)
    halved = PropagationConfig(t_final=1e-5, max_step=0.5e-7, rtol=rtol)
    n1 = propagate(H, cops, rho0, base).states[-1].data[1, 1].real
    n2 = propagate(H, cops, rho0, halved).states[-1].data[1, 1].real
    assert abs(n1 - n2) < 10 * rtol


def test_max_step_invariant_enforced():
    lay = SpaceLayout((2, 2, 2))
    p = SystemParams(omega_q=TWO_PI * 5.664e9, omega_b=1.0, omega_w=1.0,
                     kappa_b=0.0, kappa_w=0.0, gamma_q=0.0, g4=0.0)
    d = DriveSettings(pump_power_dbm=0.0, pump_freq=TWO_PI * 5.1595e9,
                      pump_calib=0.0, qubit_drive_calib=1.0)
    H = build_hamiltonian(p, d, lay)
    cap = max_step_cap(H)
    assert np.isclose(cap, 1.0 / (20.0 * (d.pump_freq + p.omega_q) / TWO_PI))
    rho0 = fock(lay, (0, 0, 0)).as_density()
    with pytest.raises(ValueError, match="max_step"):
        propagate(H, [], rho0, PropagationConfig(t_final=1e-9, max_step=10 * cap))


def test_stiffness_guard_reports():
    lay, H, cops, rho0 = _qubit_decay_setup(gamma=1e5)
    with pytest.raises(StiffnessError, match="step budget"):
        propagate(H, cops, rho0, PropagationConfig(t_final=1e-2, max_step=1e-9, max_steps=500))


def test_expectations_identity_and_ground():
    lay, H, cops, rho0 = _qubit_decay_setup()
    traj = propagate(H, cops, rho0, PropagationConfig(t_final=1e-6, sample_times=(0.0, 1e-6)))
    ex = expectations(traj, {"one": identity(lay), "n_q": number(lay, 0)})
    assert np.allclose(ex["one"], 1.0, atol=1e-9)
    ground = fock(lay, (0, 0, 0)).as_density()
    traj0 = propagate(H, cops, ground, PropagationConfig(t_final=1e-6))
    assert expectations(traj0, {"n_q": number(lay, 0)})["n_q"][-1] < 1e-12


def test_steady_state_vacuum_and_driven():
    lay = SpaceLayout((15,))
    a = annihilation(lay, 0)
    kb = TWO_PI * 3.7e6
    hz = QOperator(lay, np.zeros((15, 15)))
    vac = steady_state(hz, [CollapseOp(a, kb)])
    assert vac.data[0, 0].real == pytest.approx(1.0, abs=1e-10)

    eps = 0.05 * kb
    h = 1j * eps * (a.dag() - a)
    ss = steady_state(h, [CollapseOp(a, kb)])
    nb = np.real(np.trace((a.dag() @ a).matrix @ ss.data))
    assert abs(nb - 4 * eps**2 / kb**2) < 1e-10
    alpha = np.trace(a.matrix @ ss.data)
    assert np.isclose(alpha, 2 * eps / kb, atol=1e-9)


def test_steady_state_thermal_detailed_balance():
    lay = SpaceLayout((15,))
    a = annihilation(lay, 0)
    kb = TWO_PI * 16.7e6
    n_th = 0.0247
    hz = QOperator(lay, np.zeros((15, 15)))
    ss = steady_state(hz, [CollapseOp(a, kb * (1 + n_th)), CollapseOp(a.dag(), kb * n_th)])
    n = np.real(np.trace((a.dag() @ a).matrix @ ss.data))
    assert abs(n - n_th) < 1e-8


def test_steady_state_degeneracy_detected():
    lay = SpaceLayout((2, 3))
    ab = annihilation(lay, 1)
    hz = QOperator(lay, np.zeros((6, 6)))
    with pytest.raises(DegenerateSteadyStateError) as exc:
        steady_state(hz, [CollapseOp(ab, 1e6)])  # idle qubit: 4-dim null space
    assert exc.value.null_dim >= 2


def test_steady_state_sparse_path():
    lay = SpaceLayout((40,))
    a = annihilation(lay, 0)
    kb = TWO_PI * 3.7e6
    eps = 0.05 * kb
    h = 1j * eps * (a.dag() - a)
    ss = steady_state(h, [CollapseOp(a, kb)])
    nb = np.real(np.trace((a.dag() @ a).matrix @ ss.data))
    assert abs(nb - 4 * eps**2 / kb**2) < 1e-8
