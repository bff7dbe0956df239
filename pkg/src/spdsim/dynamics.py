"""Time propagation of the density matrix under the time-dependent Lindblad
master equation, steady states, and expectation values.

The propagator is an adaptive embedded Runge-Kutta 5(4) on the vectorized
density matrix.  Two backends implement the identical scheme: a numba kernel
exploiting the banded tensor-product structure of all operators (default) and
a plain scipy ``solve_ivp`` path used for cross-validation.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg
from scipy.integrate import solve_ivp

from . import _kernels
from .constants import TOL
from .hilbert import QOperator, QState, SpaceLayout, density
from .model import (
    CONSTANT,
    COS_PRODUCT,
    EXP_I_DELTA_T,
    CollapseOp,
    TimeDependentHamiltonian,
    TimeFunction,
)


class PropagationError(RuntimeError):
    """A state invariant was breached during integration."""


class StiffnessError(RuntimeError):
    """Step size underflowed; the problem is stiff for this explicit scheme."""


@dataclass(frozen=True)
class PropagationConfig:
    """Integrator settings.

    ``max_step`` must not exceed one twentieth of the fastest oscillation
    period of the time functions present (cyclic frequency ``f_max``); it is
    chosen automatically when None.
    """

    t_final: float
    max_step: float | None = None
    rtol: float = 1e-8
    atol: float = 1e-10
    sample_times: tuple[float, ...] | None = None
    max_steps: int = 50_000_000

    def resolved_samples(self) -> np.ndarray:
        if self.sample_times is None:
            return np.array([self.t_final])
        st = np.asarray(sorted(self.sample_times), dtype=float)
        if st.size and (st[0] < 0 or st[-1] > self.t_final * (1 + 1e-12)):
            raise ValueError("sample_times must lie in [0, t_final]")
        return st


@dataclass
class Trajectory:
    times: np.ndarray
    states: list[QState]
    expectations: dict[str, np.ndarray] = field(default_factory=dict)
    n_steps: int = 0


# --- banded compilation ------------------------------------------------------

_MAX_DIAGS = 12


def _flat_diagonals(matrix: np.ndarray, tol: float = 0.0) -> list[tuple[int, np.ndarray]]:
    """Decompose a matrix into its nonzero flat diagonals M[k+off, k] = w[k].

    Weight vectors are input-indexed and zero-padded to full length."""
    n = matrix.shape[0]
    out = []
    for off in range(-(n - 1), n):
        k0 = max(0, -off)
        k1 = min(n, n - off)
        w = np.zeros(n, dtype=complex)
        w[k0:k1] = matrix[np.arange(k0, k1) + off, np.arange(k0, k1)]
        if np.any(np.abs(w) > tol):
            out.append((off, w))
    return out


def _tf_code(tf: TimeFunction) -> tuple[int, float, float, float, int]:
    if tf.tag == CONSTANT:
        return (_kernels.TF_CONST, 0.0, 0.0, 0.0, 1)
    if tf.tag == EXP_I_DELTA_T:
        return (_kernels.TF_EXP, tf.delta, 0.0, 0.0, 1)
    if tf.tag == COS_PRODUCT:
        return (_kernels.TF_COS, 0.0, tf.omega_p, tf.omega, tf.sign)
    raise ValueError(f"unknown tag {tf.tag}")


class _CompiledSystem:
    """Flat-diagonal encoding of A(t) = H(t) - (i/2) sum r L^dag L and jumps,
    with weight vectors split into real/imaginary planes for the kernel."""

    def __init__(self, H: TimeDependentHamiltonian, collapse: Sequence[CollapseOp]):
        n = H.layout.total_dim
        self.n = n
        self.layout = H.layout
        a_const = H.constant_part().matrix.copy()
        for c in collapse:
            l = c.op.matrix
            a_const -= 0.5j * c.rate * (l.conj().T @ l)
        diags = _flat_diagonals(a_const)
        ws = np.array([d[1] for d in diags]) if diags else np.zeros((0, n), dtype=complex)
        self.c_offs = np.array([d[0] for d in diags], dtype=np.int64)
        self.c_wr = np.ascontiguousarray(ws.real)
        self.c_wi = np.ascontiguousarray(ws.imag)

        td_offs, td_ws, td_tag, td_delta, td_op, td_om, td_sign = [], [], [], [], [], [], []
        for term in H.terms:
            if term.timefn.tag == CONSTANT:
                continue
            code = _tf_code(term.timefn)
            for off, w in _flat_diagonals(term.op.matrix):
                td_offs.append(off)
                td_ws.append(w)
                td_tag.append(code[0])
                td_delta.append(code[1])
                td_op.append(code[2])
                td_om.append(code[3])
                td_sign.append(code[4])
        tws = np.array(td_ws) if td_ws else np.zeros((0, n), dtype=complex)
        self.td_offs = np.array(td_offs, dtype=np.int64)
        self.td_wr = np.ascontiguousarray(tws.real)
        self.td_wi = np.ascontiguousarray(tws.imag)
        self.td_tag = np.array(td_tag, dtype=np.int64)
        self.td_delta = np.array(td_delta, dtype=float)
        self.td_omega_p = np.array(td_op, dtype=float)
        self.td_omega = np.array(td_om, dtype=float)
        self.td_sign = np.array(td_sign, dtype=float)

        jp_offs: list[int] = []
        jp_ws: list[np.ndarray] = []
        jp_rates: list[float] = []
        single_diag_jumps = True
        for c in collapse:
            ds = _flat_diagonals(c.op.matrix)
            if len(ds) != 1:
                single_diag_jumps = False
                break
            jp_offs.append(ds[0][0])
            jp_ws.append(ds[0][1])
            jp_rates.append(c.rate)
        jws = np.array(jp_ws) if jp_ws else np.zeros((0, n), dtype=complex)
        self.jp_offs = np.array(jp_offs or [], dtype=np.int64)
        self.jp_wr = np.ascontiguousarray(jws.real)
        self.jp_wi = np.ascontiguousarray(jws.imag)
        self.jp_rates = np.array(jp_rates or [], dtype=float)

        self.banded_ok = single_diag_jumps and len(diags) <= _MAX_DIAGS


def _dense_rhs_factory(H: TimeDependentHamiltonian, collapse: Sequence[CollapseOp]):
    """Reference RHS built from dense matrices (scipy backend)."""
    n = H.layout.total_dim
    a_const = H.constant_part().matrix.copy()
    for c in collapse:
        l = c.op.matrix
        a_const -= 0.5j * c.rate * (l.conj().T @ l)
    td = [(t.op.matrix, t.timefn) for t in H.terms if t.timefn.tag != CONSTANT]
    jumps = [(c.rate, c.op.matrix, c.op.matrix.conj().T) for c in collapse]

    def rhs(t, y):
        rho = y.reshape(n, n)
        a = a_const
        if td:
            a = a_const.copy()
            for m, tf in td:
                a = a + complex(tf(t)) * m
        g = a @ rho
        out = -1j * (g - g.conj().T)
        for r, l, ld in jumps:
            out += r * (l @ rho @ ld)
        return out.reshape(-1)

    return rhs


def max_step_cap(H: TimeDependentHamiltonian) -> float:
    """One twentieth of the fastest time-function period; inf when constant."""
    f_max = H.max_cyclic_frequency
    if f_max <= 0.0:
        return np.inf
    return 1.0 / (20.0 * f_max)


def _initial_step(rhs, y0, t_final, rtol, atol, max_step):
    f0 = rhs(0.0, y0)
    scale = atol + rtol * np.abs(y0)
    d0 = np.sqrt(np.mean(np.abs(y0 / scale) ** 2))
    d1 = np.sqrt(np.mean(np.abs(f0 / scale) ** 2))
    h0 = 1e-6 * t_final if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    return float(min(h0, max_step, t_final))


def propagate(
    H: TimeDependentHamiltonian,
    collapse: Sequence[CollapseOp],
    rho0: QState,
    cfg: PropagationConfig,
    backend: str = "numba",
) -> Trajectory:
    """Solve d rho/dt = -i[H(t), rho] + sum_L r (L rho L+ - {L+L, rho}/2)."""
    if not rho0.is_density:
        raise ValueError("initial state must be a density matrix")
    if rho0.layout != H.layout:
        raise ValueError("state/Hamiltonian layout mismatch")
    n = H.layout.total_dim
    cap = max_step_cap(H)
    if cfg.max_step is not None:
        if np.isfinite(cap) and cfg.max_step > cap * (1 + 1e-12):
            raise ValueError(
                f"max_step {cfg.max_step:.3e} exceeds cap {cap:.3e} "
                "(one twentieth of the fastest drive period)"
            )
        max_step = cfg.max_step
    else:
        max_step = cap if np.isfinite(cap) else cfg.t_final / 10.0
    samples = cfg.resolved_samples()

    if backend == "numba":
        sysm = _CompiledSystem(H, collapse)
        if not sysm.banded_ok:
            backend = "scipy"
    if backend == "numba":
        dense = _dense_rhs_factory(H, collapse)
        h0 = _initial_step(dense, rho0.data.reshape(-1), cfg.t_final, cfg.rtol, cfg.atol, max_step)
        size = n * n
        y0 = np.concatenate(
            [rho0.data.real.reshape(-1), rho0.data.imag.reshape(-1)]
        ).astype(float)
        out_states = np.zeros((samples.size, 2 * size))
        status, nsteps, t_reached = _kernels.integrate_dp54(
            y0,
            cfg.t_final,
            h0,
            float(max_step),
            cfg.rtol,
            cfg.atol,
            samples,
            out_states,
            n,
            sysm.c_offs,
            sysm.c_wr,
            sysm.c_wi,
            sysm.td_offs,
            sysm.td_wr,
            sysm.td_wi,
            sysm.td_tag,
            sysm.td_delta,
            sysm.td_omega_p,
            sysm.td_omega,
            sysm.td_sign,
            sysm.jp_offs,
            sysm.jp_wr,
            sysm.jp_wi,
            sysm.jp_rates,
            _kernels.DP_A,
            _kernels.DP_B,
            _kernels.DP_C,
            _kernels.DP_E,
            _kernels.DP_P,
            cfg.max_steps,
        )
        if status == _kernels.ERR_STEP_UNDERFLOW:
            raise StiffnessError(
                f"step size underflow at t = {t_reached:.3e} s after {nsteps} steps; "
                "the generator is stiff for an explicit RK5(4) scheme"
            )
        if status == _kernels.ERR_MAX_STEPS:
            raise StiffnessError(
                f"step budget exhausted at t = {t_reached:.3e} s of {cfg.t_final:.3e} s "
                f"({nsteps} accepted steps); the generator is stiff for this scheme"
            )
        raw = [
            (out_states[i, :size] + 1j * out_states[i, size:]).reshape(n, n)
            for i in range(samples.size)
        ]
    elif backend == "scipy":
        rhs = _dense_rhs_factory(H, collapse)
        sol = solve_ivp(
            rhs,
            (0.0, cfg.t_final),
            rho0.data.reshape(-1).astype(complex),
            method="RK45",
            rtol=cfg.rtol,
            atol=cfg.atol,
            max_step=max_step,
            t_eval=samples if samples.size else None,
            dense_output=False,
        )
        if not sol.success:
            raise StiffnessError(f"scipy RK45 failed: {sol.message}")
        raw = [sol.y[:, i].reshape(n, n) for i in range(sol.t.size)]
        nsteps = -1
    else:
        raise ValueError(f"unknown backend {backend!r}")

    states = []
    for t_s, m in zip(samples, raw):
        m = 0.5 * (m + m.conj().T)
        tr = np.trace(m).real
        if abs(tr - 1.0) > TOL.traj_trace:
            raise PropagationError(
                f"trace drift {tr - 1.0:+.3e} beyond {TOL.traj_trace} at t = {t_s:.3e} s"
            )
        evmin = float(np.linalg.eigvalsh(m).min())
        if evmin < TOL.traj_eig_floor:
            raise PropagationError(
                f"negative eigenvalue {evmin:.3e} beyond {TOL.traj_eig_floor} at t = {t_s:.3e} s"
            )
        states.append(
            density(
                H.layout,
                m,
                trace_tol=TOL.traj_trace,
                herm_tol=1.0,  # symmetrized above
                eig_floor=TOL.traj_eig_floor,
            )
        )
    return Trajectory(times=samples, states=states, n_steps=int(nsteps))


def expectations(traj: Trajectory, ops: dict[str, QOperator]) -> dict[str, np.ndarray]:
    """Tr(rho(t) O) per named operator; Hermitian operators get real series."""
    out: dict[str, np.ndarray] = {}
    for name, op in ops.items():
        vals = []
        for st in traj.states:
            if st.layout != op.layout:
                raise ValueError(f"layout mismatch for op {name!r}")
            v = np.trace(op.matrix @ st.data)
            vals.append(v)
        arr = np.array(vals)
        if op.is_hermitian():
            resid = float(np.max(np.abs(arr.imag))) if arr.size else 0.0
            if resid > 1e-9:
                raise PropagationError(
                    f"imaginary residue {resid:.3e} in Hermitian expectation {name!r}"
                )
            arr = arr.real
        out[name] = arr
    traj.expectations.update(out)
    return out


# --- steady states -----------------------------------------------------------

_DENSE_STEADY_LIMIT = 34  # total dim above which the sparse path is used


def _liouvillian_dense(h: np.ndarray, collapse: Sequence[CollapseOp]) -> np.ndarray:
    n = h.shape[0]
    eye = np.eye(n)
    lv = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
    for c in collapse:
        l = c.op.matrix
        ld = l.conj().T
        lv += c.rate * (
            np.kron(l, ld.T)
            - 0.5 * np.kron(ld @ l, eye)
            - 0.5 * np.kron(eye, (ld @ l).T)
        )
    return lv


class DegenerateSteadyStateError(RuntimeError):
    def __init__(self, dim: int):
        super().__init__(f"Liouvillian null space is {dim}-dimensional")
        self.null_dim = dim


def steady_state(H_constant: QOperator, collapse: Sequence[CollapseOp]) -> QState:
    """Null vector of the Liouvillian, normalized to unit trace."""
    n = H_constant.layout.total_dim
    h = H_constant.matrix
    if n <= _DENSE_STEADY_LIMIT:
        lv = _liouvillian_dense(h, collapse)
        _, s, vh = np.linalg.svd(lv)
        scale = max(s[0], 1.0)
        null_mask = s < 1e-12 * scale
        ndim = int(np.sum(null_mask))
        if ndim == 0:
            ndim = 1  # smallest singular vector is the best candidate
        if ndim > 1:
            raise DegenerateSteadyStateError(ndim)
        vec = vh[-1].conj()
    else:
        lv = scipy.sparse.csc_matrix(_liouvillian_dense(h, collapse))
        vals, vecs = scipy.sparse.linalg.eigs(lv, k=2, sigma=0.0, which="LM")
        order = np.argsort(np.abs(vals))
        if abs(vals[order[1]]) < 1e-10:
            raise DegenerateSteadyStateError(2)
        vec = vecs[:, order[0]]
    rho = vec.reshape(n, n)
    rho = 0.5 * (rho + rho.conj().T)
    rho = rho / np.trace(rho).real
    resid = float(np.linalg.norm(_apply_liouvillian(h, collapse, rho)))
    if resid > TOL.steady_residual * max(1.0, _liouvillian_scale(h, collapse)):
        raise RuntimeError(f"steady-state residual {resid:.3e} too large")
    return density(H_constant.layout, rho, eig_floor=-1e-8, trace_tol=1e-8, herm_tol=1e-8)


def _apply_liouvillian(h, collapse, rho):
    out = -1j * (h @ rho - rho @ h)
    for c in collapse:
        l = c.op.matrix
        ld = l.conj().T
        out += c.rate * (l @ rho @ ld - 0.5 * (ld @ l @ rho + rho @ ld @ l))
    return out


def _liouvillian_scale(h, collapse) -> float:
    s = float(np.linalg.norm(h, ord=np.inf))
    for c in collapse:
        s += c.rate * float(np.linalg.norm(c.op.matrix, ord=np.inf)) ** 2
    return s
