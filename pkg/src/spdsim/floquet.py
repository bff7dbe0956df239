"""Floquet modes and quasienergies of the periodically driven Hamiltonian,
overlaps with bare states and Lindblad-evolved density matrices, and mode
tracking across pump sweeps.

The analysis is closed-system: dissipation enters only through the density
matrix handed to :func:`floquet_weights`.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .constants import TOL, TWO_PI
from .hilbert import QOperator, QState, SpaceLayout
from .model import (
    CONSTANT,
    COS_PRODUCT,
    EXP_I_DELTA_T,
    HamiltonianTerm,
    TimeDependentHamiltonian,
    TimeFunction,
)

#: steps per period of the 4th-order Magnus (two-point Gauss-Legendre) stepper
DEFAULT_STEPS_PER_PERIOD = 2000

#: the drive phase frequency is rounded to this fraction of the pump frequency
COMMENSURATE_GRID = 1000


class NonPeriodicTermError(ValueError):
    pass


@dataclass(frozen=True)
class FloquetSpectrum:
    """Floquet modes at t = 0, quasienergies folded into the first Brillouin
    zone (-w_p/2, w_p/2], and bare-state labels (n_q, n_b, n_w)."""

    layout: SpaceLayout
    period: float
    modes: np.ndarray  # columns are |phi_j>
    quasienergies: np.ndarray  # rad/s
    labels: tuple[tuple[int, ...], ...]
    diagnostics: dict = field(default_factory=dict, compare=False)

    @property
    def omega_p(self) -> float:
        return TWO_PI / self.period

    def mode(self, label: tuple[int, ...]) -> np.ndarray:
        j = self.labels.index(tuple(label))
        return self.modes[:, j]


def fold_quasienergy(eps: np.ndarray | float, omega_p: float) -> np.ndarray | float:
    """Fold into (-w_p/2, w_p/2]; idempotent."""
    folded = eps - omega_p * np.round(np.asarray(eps, dtype=float) / omega_p)
    folded = np.where(folded <= -omega_p / 2, folded + omega_p, folded)
    return folded if np.ndim(eps) else float(folded)


def _commensurate(H: TimeDependentHamiltonian, omega_p: float) -> TimeDependentHamiltonian:
    """Enforce T-periodicity of every time function.

    exp terms must sit at integer multiples of the pump frequency; the drive
    phase frequency of cos_product terms is rounded to the nearest multiple of
    omega_p / COMMENSURATE_GRID (a declared approximation for the
    quasiperiodic drive), with the rounding error reported via a warning and
    the returned Hamiltonian's evaluation."""
    terms = []
    for term in H.terms:
        tf = term.timefn
        if tf.tag == CONSTANT:
            terms.append(term)
            continue
        if tf.tag == EXP_I_DELTA_T:
            ratio = tf.delta / omega_p
            if abs(ratio - round(ratio)) > 1e-9:
                raise NonPeriodicTermError(
                    f"term {term.group!r}: exp detuning {tf.delta:.6e} rad/s is not an "
                    f"integer multiple of the pump frequency {omega_p:.6e}"
                )
            terms.append(term)
            continue
        if tf.tag == COS_PRODUCT:
            if abs(tf.omega_p - omega_p) > 1e-6 * omega_p:
                raise NonPeriodicTermError(
                    f"term {term.group!r}: cosine frequency differs from the pump frequency"
                )
            ratio = tf.omega / omega_p
            snapped = round(ratio * COMMENSURATE_GRID) / COMMENSURATE_GRID
            err = abs(ratio - snapped) * omega_p
            if err > 0.0:
                warnings.warn(
                    f"drive phase frequency rounded by {err:.3e} rad/s "
                    f"({err / omega_p:.2e} of the pump frequency) for periodicity",
                    stacklevel=3,
                )
            new_tf = TimeFunction(
                COS_PRODUCT, omega_p=tf.omega_p, omega=snapped * omega_p, sign=tf.sign
            )
            terms.append(HamiltonianTerm(term.op, new_tf, term.group))
            continue
        raise NonPeriodicTermError(f"unknown time tag {tf.tag}")
    return TimeDependentHamiltonian(H.layout, tuple(terms))


def one_period_propagator(
    H: TimeDependentHamiltonian,
    omega_p: float,
    steps_per_period: int = DEFAULT_STEPS_PER_PERIOD,
) -> QOperator:
    """Unitary U(T) over one pump period by 4th-order Magnus (two-point
    Gauss-Legendre) exponential stepping."""
    Hc = _commensurate(H, omega_p)
    n = H.layout.total_dim
    T = TWO_PI / omega_p
    h = T / steps_per_period
    # Gauss-Legendre nodes
    c1 = 0.5 - np.sqrt(3.0) / 6.0
    c2 = 0.5 + np.sqrt(3.0) / 6.0
    u = np.eye(n, dtype=complex)
    for s in range(steps_per_period):
        t0 = s * h
        h1 = Hc.evaluate(t0 + c1 * h).matrix
        h2 = Hc.evaluate(t0 + c2 * h).matrix
        omega = -0.5j * h * (h1 + h2) - (np.sqrt(3.0) / 12.0) * h * h * (h2 @ h1 - h1 @ h2)
        u = scipy.linalg.expm(omega) @ u
    resid = np.max(np.abs(u.conj().T @ u - np.eye(n)))
    if resid > TOL.unitarity:
        raise RuntimeError(f"one-period propagator unitarity residual {resid:.3e}")
    return QOperator(H.layout, u)


def _assign_labels(modes: np.ndarray, layout: SpaceLayout) -> tuple[tuple[int, ...], ...]:
    """Greedy bare-state labeling by maximum overlap (bijective)."""
    n = modes.shape[1]
    ov = np.abs(modes) ** 2  # ov[i, j] = |<bare_i | phi_j>|^2
    labels: list[tuple[int, ...] | None] = [None] * n
    taken_rows = np.zeros(n, dtype=bool)
    taken_cols = np.zeros(n, dtype=bool)
    flat = [(-ov[i, j], i, j) for i in range(n) for j in range(n)]
    flat.sort()
    assigned = 0
    for _, i, j in flat:
        if not taken_rows[i] and not taken_cols[j]:
            labels[j] = tuple(int(x) for x in np.unravel_index(i, layout.dims))
            taken_rows[i] = True
            taken_cols[j] = True
            assigned += 1
            if assigned == n:
                break
    return tuple(labels)  # type: ignore[arg-type]


def floquet_modes(U: QOperator, omega_p: float) -> FloquetSpectrum:
    """Eigendecomposition U |phi_j> = exp(-i eps_j T) |phi_j> via a Schur
    decomposition (orthonormal modes even for clustered eigenphases)."""
    n = U.layout.total_dim
    u = U.matrix
    if np.max(np.abs(u.conj().T @ u - np.eye(n))) > 1e-6:
        raise ValueError("input propagator is not unitary")
    T, Q = scipy.linalg.schur(u, output="complex")
    lams = np.diag(T)
    resid = np.max(np.abs(u @ Q - Q @ np.diag(lams)))
    if resid > TOL.floquet_residual:
        raise RuntimeError(f"defective Floquet eigenproblem, residual {resid:.3e}")
    period = TWO_PI / omega_p
    eps = fold_quasienergy(-np.angle(lams) / period, omega_p)
    labels = _assign_labels(Q, U.layout)
    return FloquetSpectrum(
        layout=U.layout,
        period=period,
        modes=Q,
        quasienergies=np.asarray(eps, dtype=float),
        labels=labels,
        diagnostics={"eig_residual": float(resid)},
    )


def track_modes(sweep: list[FloquetSpectrum], margin_warn: float = 0.1) -> list[FloquetSpectrum]:
    """Propagate labels along a pump sweep by greedy maximum-overlap matching.

    The first spectrum's labels are kept.  Each consecutive pair is matched by
    descending |<phi_j(k) | phi_j'(k+1)>|^2 with rows/columns removed as they
    are assigned, so the result is always a bijection.  The minimal margin
    (best minus second-best overlap among the new modes) is recorded; steps
    below ``margin_warn`` are flagged as anticrossings."""
    if not sweep:
        return []
    out = [sweep[0]]
    for spec in sweep[1:]:
        prev = out[-1]
        ov = np.abs(prev.modes.conj().T @ spec.modes) ** 2  # [old, new]
        n = ov.shape[0]
        flat = [(-ov[i, j], i, j) for i in range(n) for j in range(n)]
        flat.sort()
        rows_taken = np.zeros(n, dtype=bool)
        cols_taken = np.zeros(n, dtype=bool)
        assign: dict[int, int] = {}
        for _, i, j in flat:
            if not rows_taken[i] and not cols_taken[j]:
                assign[j] = i
                rows_taken[i] = True
                cols_taken[j] = True
                if len(assign) == n:
                    break
        sorted_cols = np.sort(ov, axis=0)
        margins = sorted_cols[-1] - sorted_cols[-2] if n > 1 else np.ones(n)
        margin = float(np.min(margins))
        labels = tuple(prev.labels[assign[j]] for j in range(n))
        diag = dict(spec.diagnostics)
        diag["assignment_margin"] = margin
        diag["anticrossing_warning"] = margin < margin_warn
        out.append(
            FloquetSpectrum(
                layout=spec.layout,
                period=spec.period,
                modes=spec.modes,
                quasienergies=spec.quasienergies,
                labels=labels,
                diagnostics=diag,
            )
        )
    return out


def floquet_weights(rho: QState, spec: FloquetSpectrum) -> dict[tuple[int, ...], float]:
    """p_j = <phi_j| rho |phi_j>, keyed by the mode labels; sums to one."""
    if rho.layout != spec.layout:
        raise ValueError("layout mismatch")
    dm = rho.as_density().data
    probs = np.real(np.einsum("ij,ik,kj->j", spec.modes.conj(), dm, spec.modes))
    total = float(np.sum(probs))
    if abs(total - 1.0) > 1e-9:
        raise RuntimeError(f"Floquet weights sum to {total}, not 1")
    return {lab: float(p) for lab, p in zip(spec.labels, probs)}


def bare_overlaps(spec: FloquetSpectrum) -> np.ndarray:
    """|<bare_i | phi_j>|^2 matrix (rows: bare states, columns: modes)."""
    return np.abs(spec.modes) ** 2
