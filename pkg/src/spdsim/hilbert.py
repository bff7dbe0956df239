"""Operator algebra on truncated tensor-product Hilbert spaces.

The mode ordering convention is fixed everywhere as
(transmon, buffer, waste) = indices (0, 1, 2).  Dimension-1 factors are
allowed and represent absent modes; reduced (two-mode or single-mode)
layouts reuse the same machinery.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import reduce
from typing import Iterable, Sequence, Union

import numpy as np

from .constants import TOL

TRANSMON, BUFFER, WASTE = 0, 1, 2
_MODE_NAMES = {"transmon": TRANSMON, "buffer": BUFFER, "waste": WASTE}

ModeIndex = Union[int, str]


def _mode_index(which: ModeIndex, nmodes: int) -> int:
    if isinstance(which, str):
        try:
            idx = _MODE_NAMES[which]
        except KeyError:
            raise ValueError(f"unknown mode name {which!r}") from None
    else:
        idx = int(which)
    if not 0 <= idx < nmodes:
        raise ValueError(f"mode index {idx} out of range for {nmodes} modes")
    return idx


@dataclass(frozen=True, eq=False)
class SpaceLayout:
    """Ordered subsystem dimensions of a truncated tensor-product space."""

    dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if not dims or any(d < 1 for d in dims):
            raise ValueError(f"invalid layout dims {self.dims}")
        object.__setattr__(self, "dims", dims)

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.dims))

    @property
    def nmodes(self) -> int:
        return len(self.dims)

    def mode(self, which: ModeIndex) -> int:
        return _mode_index(which, self.nmodes)

    def __eq__(self, other) -> bool:
        return isinstance(other, SpaceLayout) and self.dims == other.dims

    def __hash__(self) -> int:
        return hash(self.dims)

    def __repr__(self) -> str:
        return f"SpaceLayout{self.dims}"


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class QOperator:
    """Dense complex operator on a :class:`SpaceLayout`.

    ``factors`` optionally records a separable decomposition
    ``matrix = kron(factors[0], factors[1], ...)``; it is carried purely as
    metadata so that propagators can apply the operator factor-by-factor.
    Hermiticity is a checkable predicate, not an invariant: drive terms are
    built from non-Hermitian pieces.
    """

    layout: SpaceLayout
    matrix: np.ndarray
    factors: tuple[np.ndarray, ...] | None = field(default=None, repr=False)

    def __post_init__(self):
        m = _freeze(self.matrix)
        n = self.layout.total_dim
        if m.shape != (n, n):
            raise ValueError(f"matrix shape {m.shape} does not match layout dim {n}")
        object.__setattr__(self, "matrix", m)
        if self.factors is not None:
            fs = tuple(_freeze(f) for f in self.factors)
            if len(fs) != self.layout.nmodes or any(
                f.shape != (d, d) for f, d in zip(fs, self.layout.dims)
            ):
                raise ValueError("factor shapes do not match layout")
            object.__setattr__(self, "factors", fs)

    # -- algebra ------------------------------------------------------------
    def _check(self, other: "QOperator"):
        if self.layout != other.layout:
            raise ValueError("layout mismatch")

    def __add__(self, other: "QOperator") -> "QOperator":
        self._check(other)
        return QOperator(self.layout, self.matrix + other.matrix)

    def __sub__(self, other: "QOperator") -> "QOperator":
        self._check(other)
        return QOperator(self.layout, self.matrix - other.matrix)

    def __mul__(self, c: complex) -> "QOperator":
        fs = None
        if self.factors is not None:
            fs = (c * self.factors[0],) + self.factors[1:]
        return QOperator(self.layout, c * self.matrix, fs)

    __rmul__ = __mul__

    def __neg__(self) -> "QOperator":
        return self * (-1.0)

    def __matmul__(self, other: "QOperator") -> "QOperator":
        self._check(other)
        fs = None
        if self.factors is not None and other.factors is not None:
            fs = tuple(a @ b for a, b in zip(self.factors, other.factors))
        return QOperator(self.layout, self.matrix @ other.matrix, fs)

    def dag(self) -> "QOperator":
        fs = None
        if self.factors is not None:
            fs = tuple(f.conj().T for f in self.factors)
        return QOperator(self.layout, self.matrix.conj().T, fs)

    def is_hermitian(self, tol: float = TOL.herm_eval) -> bool:
        return bool(np.max(np.abs(self.matrix - self.matrix.conj().T)) <= tol)

    def expect(self, state: "QState") -> complex:
        rho = state.as_density().data
        return complex(np.trace(self.matrix @ rho))


def identity(layout: SpaceLayout) -> QOperator:
    facs = tuple(np.eye(d, dtype=complex) for d in layout.dims)
    return QOperator(layout, np.eye(layout.total_dim, dtype=complex), facs)


def lowering_matrix(dim: int) -> np.ndarray:
    """Truncated lowering matrix with a[n-1, n] = sqrt(n)."""
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1).astype(complex)


def embed(layout: SpaceLayout, which: ModeIndex, local: np.ndarray) -> QOperator:
    """Embed a single-factor matrix as I x ... x local x ... x I."""
    idx = layout.mode(which)
    local = np.asarray(local, dtype=complex)
    d = layout.dims[idx]
    if local.shape != (d, d):
        raise ValueError(f"local shape {local.shape} does not match dim {d}")
    facs = [np.eye(n, dtype=complex) for n in layout.dims]
    facs[idx] = local
    full = reduce(np.kron, facs)
    return QOperator(layout, full, tuple(facs))


def annihilation(layout: SpaceLayout, which: ModeIndex) -> QOperator:
    """Annihilation operator of one mode, embedded in the full space."""
    idx = layout.mode(which)
    return embed(layout, idx, lowering_matrix(layout.dims[idx]))


def number(layout: SpaceLayout, which: ModeIndex) -> QOperator:
    a = annihilation(layout, which)
    return a.dag() @ a


@dataclass(frozen=True, eq=False)
class QState:
    """Pure ket or density matrix with layout metadata."""

    layout: SpaceLayout
    kind: str  # "ket" | "density"
    data: np.ndarray

    def __post_init__(self):
        if self.kind not in ("ket", "density"):
            raise ValueError(f"unknown state kind {self.kind!r}")
        object.__setattr__(self, "data", _freeze(self.data))

    @property
    def is_density(self) -> bool:
        return self.kind == "density"

    def as_density(self) -> "QState":
        if self.is_density:
            return self
        v = self.data
        return density(self.layout, np.outer(v, v.conj()))

    def norm(self) -> float:
        if self.is_density:
            return float(np.real(np.trace(self.data)))
        return float(np.linalg.norm(self.data))


def ket(layout: SpaceLayout, vector: np.ndarray, *, norm_tol: float = TOL.ket_norm) -> QState:
    v = np.asarray(vector, dtype=complex).reshape(-1)
    if v.shape[0] != layout.total_dim:
        raise ValueError("vector length does not match layout")
    n = np.linalg.norm(v)
    if abs(n - 1.0) > norm_tol:
        raise ValueError(f"ket norm {n} deviates from 1 beyond {norm_tol}")
    return QState(layout, "ket", v)


def density(
    layout: SpaceLayout,
    matrix: np.ndarray,
    *,
    trace_tol: float = TOL.density_trace,
    herm_tol: float = TOL.density_herm,
    eig_floor: float = TOL.density_eig_floor,
) -> QState:
    m = np.asarray(matrix, dtype=complex)
    n = layout.total_dim
    if m.shape != (n, n):
        raise ValueError("matrix shape does not match layout")
    herm = np.max(np.abs(m - m.conj().T))
    if herm > herm_tol:
        raise ValueError(f"density Hermiticity residual {herm:.3e} exceeds {herm_tol}")
    tr = np.trace(m).real
    if abs(tr - 1.0) > trace_tol:
        raise ValueError(f"density trace {tr} deviates from 1 beyond {trace_tol}")
    evals = np.linalg.eigvalsh((m + m.conj().T) / 2.0)
    if evals.min() < eig_floor:
        raise ValueError(f"density eigenvalue {evals.min():.3e} below floor {eig_floor}")
    return QState(layout, "density", m)


def fock(layout: SpaceLayout, occupations: Sequence[int]) -> QState:
    """Product Fock ket |n_0 n_1 ...> on the layout."""
    if len(occupations) != layout.nmodes:
        raise ValueError("occupation list length does not match layout")
    v = np.zeros(layout.total_dim, dtype=complex)
    idx = np.ravel_multi_index(tuple(occupations), layout.dims)
    v[idx] = 1.0
    return ket(layout, v)


def product_density(layout: SpaceLayout, locals_: Iterable[np.ndarray]) -> QState:
    rho = reduce(np.kron, [np.asarray(x, dtype=complex) for x in locals_])
    return density(layout, rho)


def partial_trace(state: QState, keep: ModeIndex, *, eig_floor: float | None = None) -> QState:
    """Reduced density matrix on one kept factor.

    Ket inputs are rejected; convert to a projector first.  The eigenvalue
    floor defaults to the post-integration tolerance, since reduced states are
    typically taken from propagated trajectories.
    """
    if not state.is_density:
        raise ValueError("partial_trace requires a density state; convert kets first")
    layout = state.layout
    k = layout.mode(keep)
    dims = layout.dims
    nm = layout.nmodes
    rho = state.data.reshape(dims + dims)
    # trace out every axis pair except the kept one, back to front
    axes = [i for i in range(nm) if i != k]
    for i in reversed(axes):
        rho = np.trace(rho, axis1=i, axis2=i + rho.ndim // 2)
    reduced = rho
    out_layout = SpaceLayout((dims[k],))
    return density(
        out_layout,
        reduced,
        trace_tol=max(TOL.ptrace_trace, abs(state.norm() - 1.0) + TOL.ptrace_trace),
        eig_floor=TOL.traj_eig_floor if eig_floor is None else eig_floor,
    )


def coherent_state(dim: int, alpha: complex) -> QState:
    """Normalized truncated coherent ket; renormalized after truncation.

    Warns when the truncated Poisson tail weight exceeds the configured
    threshold (the amplitude is too large for the cutoff).
    """
    n = np.arange(dim)
    log_fact = np.concatenate(([0.0], np.cumsum(np.log(np.arange(1, dim)))))
    if alpha == 0:
        v = np.zeros(dim, dtype=complex)
        v[0] = 1.0
        return ket(SpaceLayout((dim,)), v)
    log_amp = n * np.log(complex(alpha)) - 0.5 * log_fact
    v = np.exp(log_amp - 0.5 * abs(alpha) ** 2)
    weight = float(np.sum(np.abs(v) ** 2))
    tail = 1.0 - weight
    if tail > TOL.coherent_tail:
        warnings.warn(
            f"coherent state truncated: |alpha|^2={abs(alpha)**2:.3g} vs dim={dim}, "
            f"tail weight {tail:.3e}",
            stacklevel=2,
        )
    v = v / np.sqrt(weight)
    return ket(SpaceLayout((dim,)), v)
