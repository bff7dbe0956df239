"""Physical model assembly: drive-frame Hamiltonian and dissipators.

All frequency-like parameters are angular (rad/s); plain rates (1/s) carry no
2*pi.  The Hamiltonian is the rotating-frame four-wave-mixing model

    H/hbar = sum_k chi_k/k! (aq+)^k aq^k
           + chi_qw nq nw + chi_qb nq nb
           + i eps_b (ab+ - ab)
           + g4 xi_p aq+ aw+ ab e^{i Delta t} + h.c.
           + 2 i eps_q cos(w_p t) (aq+ e^{i w_q' t} - aq e^{-i w_q' t}),

with the waste mode damped by a thermal bath and the buffer/qubit by plain
decay.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.constants import hbar, k as k_B

from .constants import TOL, dbm_to_amplitude
from .hilbert import (
    BUFFER,
    TRANSMON,
    WASTE,
    QOperator,
    SpaceLayout,
    annihilation,
    embed,
    lowering_matrix,
    number,
)


@dataclass(frozen=True)
class SystemParams:
    """Device constants.  Frequencies and Kerr terms angular (rad/s), plain
    rates in 1/s.  ``g_w``/``g_b`` and ``t2`` are retained as metadata only."""

    omega_q: float
    omega_b: float
    omega_w: float
    kappa_b: float
    kappa_w: float
    gamma_q: float
    g4: float
    chi: tuple[float, ...] = ()
    chi_qw: float = 0.0
    chi_qb: float = 0.0
    gamma_phi: float = 0.0
    omega_q_shift: float | None = None
    omega_b_shift: float | None = None
    omega_w_shift: float | None = None
    g_w: float = 0.0
    g_b: float = 0.0
    t_eff: float = 0.0
    t2: float | None = None

    def __post_init__(self):
        for name in ("omega_q", "omega_b", "omega_w"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        for name in ("kappa_b", "kappa_w", "gamma_q", "gamma_phi", "t_eff"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        object.__setattr__(self, "chi", tuple(float(c) for c in self.chi))
        for name in ("omega_q_shift", "omega_b_shift", "omega_w_shift"):
            if getattr(self, name) is None:
                object.__setattr__(self, name, getattr(self, name.replace("_shift", "")))

    @property
    def n_th_w(self) -> float:
        return thermal_occupancy(self.t_eff, self.omega_w)

    def with_(self, **kwargs) -> "SystemParams":
        return replace(self, **kwargs)


def thermal_occupancy(t_eff: float, omega_w: float) -> float:
    """Mean thermal photon number 1/(exp(hbar w / kB T) - 1); 0 at T = 0."""
    if t_eff < 0:
        raise ValueError("temperature must be nonnegative")
    if t_eff == 0.0:
        return 0.0
    x = hbar * omega_w / (k_B * t_eff)
    return 1.0 / math.expm1(x)


@dataclass(frozen=True)
class DriveSettings:
    """Pump and buffer drive configuration.

    ``pump_calib`` (c_p) maps dBm to the dimensionless pump amplitude xi_p;
    ``qubit_drive_calib`` (c_q, rad/s) maps dBm to the direct qubit drive
    eps_q.  Both scale as 10^(P/20).  ``b_in_flux`` is a photon flux in 1/s;
    the buffer drive amplitude derives as eps_b = sqrt(kappa_b * flux).
    ``detuning_qwbp`` is the effective four-wave detuning (rad/s), an
    independent knob defaulting to resonant conversion.
    """

    pump_power_dbm: float
    pump_freq: float  # angular rad/s
    pump_calib: float
    qubit_drive_calib: float = 0.0
    b_in_flux: float = 0.0
    buffer_pulse_len: float = 0.0
    detuning_qwbp: float = 0.0

    def __post_init__(self):
        if self.pump_calib < 0 or self.qubit_drive_calib < 0 or self.b_in_flux < 0:
            raise ValueError("calibrations and flux must be nonnegative")

    @property
    def xi_p(self) -> float:
        return dbm_to_amplitude(self.pump_power_dbm, self.pump_calib)

    @property
    def eps_q(self) -> float:
        return dbm_to_amplitude(self.pump_power_dbm, self.qubit_drive_calib)

    def eps_b(self, kappa_b: float) -> float:
        return math.sqrt(kappa_b * self.b_in_flux)

    def with_(self, **kwargs) -> "DriveSettings":
        return replace(self, **kwargs)


def steady_buffer_photons(b_in_flux: float, kappa_b: float) -> float:
    """Steady photon number of the bare driven buffer, n_b = 4|b_in|^2/kappa_b."""
    return 4.0 * b_in_flux / kappa_b


def flux_for_buffer_photons(n_b: float, kappa_b: float) -> float:
    """Inverse of :func:`steady_buffer_photons`."""
    return n_b * kappa_b / 4.0


# --- time dependence -------------------------------------------------------

CONSTANT = "constant"
EXP_I_DELTA_T = "exp_i_delta_t"
COS_PRODUCT = "cos_product"


@dataclass(frozen=True)
class TimeFunction:
    """Scalar time dependence attached to a Hamiltonian term.

    constant:       f(t) = 1
    exp_i_delta_t:  f(t) = exp(i delta t)
    cos_product:    f(t) = cos(omega_p t) * exp(i sign omega t)
    """

    tag: str
    delta: float = 0.0
    omega_p: float = 0.0
    omega: float = 0.0
    sign: int = +1

    def __call__(self, t):
        if self.tag == CONSTANT:
            return np.ones_like(np.asarray(t, dtype=float)) + 0j if np.ndim(t) else 1.0 + 0j
        if self.tag == EXP_I_DELTA_T:
            return np.exp(1j * self.delta * np.asarray(t, dtype=float))
        if self.tag == COS_PRODUCT:
            t = np.asarray(t, dtype=float)
            return np.cos(self.omega_p * t) * np.exp(1j * self.sign * self.omega * t)
        raise ValueError(f"unknown time function tag {self.tag!r}")

    @property
    def max_cyclic_frequency(self) -> float:
        """Fastest cyclic frequency (Hz) present in this time function."""
        if self.tag == CONSTANT:
            return 0.0
        if self.tag == EXP_I_DELTA_T:
            return abs(self.delta) / (2.0 * math.pi)
        return (self.omega_p + abs(self.omega)) / (2.0 * math.pi)


@dataclass(frozen=True)
class HamiltonianTerm:
    op: QOperator
    timefn: TimeFunction
    group: str = ""


@dataclass(frozen=True)
class TimeDependentHamiltonian:
    """Sum of (constant operator, scalar time function) pairs."""

    layout: SpaceLayout
    terms: tuple[HamiltonianTerm, ...]

    def evaluate(self, t: float) -> QOperator:
        m = np.zeros((self.layout.total_dim,) * 2, dtype=complex)
        for term in self.terms:
            m += complex(term.timefn(t)) * term.op.matrix
        return QOperator(self.layout, m)

    @property
    def max_cyclic_frequency(self) -> float:
        if not self.terms:
            return 0.0
        return max(term.timefn.max_cyclic_frequency for term in self.terms)

    @property
    def is_constant(self) -> bool:
        return all(t.timefn.tag == CONSTANT for t in self.terms)

    def constant_part(self) -> QOperator:
        m = np.zeros((self.layout.total_dim,) * 2, dtype=complex)
        for term in self.terms:
            if term.timefn.tag == CONSTANT:
                m += term.op.matrix
        return QOperator(self.layout, m)


def kerr_diagonal(chi: Sequence[float], dim: int) -> np.ndarray:
    """Diagonal of sum_k chi_k/k! (a+)^k a^k, i.e. sum_k chi_k/k! n!/(n-k)!."""
    diag = np.zeros(dim)
    for j, chi_k in enumerate(chi):
        k = j + 2
        for n in range(k, dim):
            diag[n] += chi_k / math.factorial(k) * math.factorial(n) / math.factorial(n - k)
    return diag


def build_hamiltonian(
    p: SystemParams, d: DriveSettings, layout: SpaceLayout
) -> TimeDependentHamiltonian:
    """Assemble the five drive-frame term groups; zero-amplitude terms are
    dropped so the returned structure reflects the active physics."""
    if layout.nmodes != 3:
        raise ValueError("the converter model requires a (transmon, buffer, waste) layout")
    n_t = layout.dims[TRANSMON]
    if n_t < 2:
        raise ValueError("transmon dimension must be at least 2")
    if n_t >= 3 and len(p.chi) != n_t - 2:
        raise ValueError(
            f"chi list length {len(p.chi)} inconsistent with transmon dim {n_t} "
            f"(need {n_t - 2})"
        )

    terms: list[HamiltonianTerm] = []
    const = TimeFunction(CONSTANT)

    # (i) transmon self-Kerr ladder
    if n_t >= 3 and any(c != 0.0 for c in p.chi):
        diag = kerr_diagonal(p.chi, n_t)
        op = embed(layout, TRANSMON, np.diag(diag.astype(complex)))
        terms.append(HamiltonianTerm(op, const, "self_kerr"))

    # (ii) cross-Kerr couplings
    if p.chi_qw != 0.0 or p.chi_qb != 0.0:
        nq = number(layout, TRANSMON)
        op = p.chi_qw * (nq @ number(layout, WASTE)) + p.chi_qb * (nq @ number(layout, BUFFER))
        terms.append(HamiltonianTerm(op, const, "cross_kerr"))

    # (iii) buffer drive
    eps_b = d.eps_b(p.kappa_b)
    if eps_b != 0.0:
        ab = annihilation(layout, BUFFER)
        terms.append(HamiltonianTerm(1j * eps_b * (ab.dag() - ab), const, "buffer_drive"))

    # (iv) four-wave conversion + h.c.
    g4xi = p.g4 * d.xi_p
    if g4xi != 0.0:
        conv = (
            annihilation(layout, TRANSMON).dag()
            @ annihilation(layout, WASTE).dag()
            @ annihilation(layout, BUFFER)
        )
        if d.detuning_qwbp == 0.0:
            terms.append(HamiltonianTerm(g4xi * (conv + conv.dag()), const, "four_wave"))
        else:
            fwd = TimeFunction(EXP_I_DELTA_T, delta=d.detuning_qwbp)
            bwd = TimeFunction(EXP_I_DELTA_T, delta=-d.detuning_qwbp)
            terms.append(HamiltonianTerm(g4xi * conv, fwd, "four_wave"))
            terms.append(HamiltonianTerm(g4xi * conv.dag(), bwd, "four_wave"))

    # (v) direct qubit drive
    eps_q = d.eps_q
    if eps_q != 0.0:
        aq = annihilation(layout, TRANSMON)
        up = TimeFunction(COS_PRODUCT, omega_p=d.pump_freq, omega=p.omega_q_shift, sign=+1)
        dn = TimeFunction(COS_PRODUCT, omega_p=d.pump_freq, omega=p.omega_q_shift, sign=-1)
        terms.append(HamiltonianTerm(2j * eps_q * aq.dag(), up, "qubit_drive"))
        terms.append(HamiltonianTerm(-2j * eps_q * aq, dn, "qubit_drive"))

    return TimeDependentHamiltonian(layout, tuple(terms))


@dataclass(frozen=True)
class CollapseOp:
    """Bare jump operator plus its rate; the dissipator is rate * D[op]."""

    op: QOperator
    rate: float

    @property
    def scaled(self) -> QOperator:
        return math.sqrt(self.rate) * self.op


def build_collapse_ops(
    p: SystemParams,
    layout: SpaceLayout,
    include_qubit: bool = True,
    include_buffer: bool = True,
    include_dephasing: bool = False,
) -> list[CollapseOp]:
    """Dissipators of the master equation: thermal waste bath, buffer decay,
    qubit relaxation, and (optionally) pure dephasing at rate 2*gamma_phi."""
    ops: list[CollapseOp] = []
    n_th = p.n_th_w
    if layout.nmodes >= 3 and layout.dims[WASTE] > 1 and p.kappa_w > 0:
        aw = annihilation(layout, WASTE)
        ops.append(CollapseOp(aw, p.kappa_w * (1.0 + n_th)))
        if n_th > 0.0:
            ops.append(CollapseOp(aw.dag(), p.kappa_w * n_th))
    if include_buffer and layout.nmodes >= 2 and layout.dims[BUFFER] > 1 and p.kappa_b > 0:
        ops.append(CollapseOp(annihilation(layout, BUFFER), p.kappa_b))
    if include_qubit and p.gamma_q > 0:
        ops.append(CollapseOp(annihilation(layout, TRANSMON), p.gamma_q))
    if include_dephasing and p.gamma_phi > 0:
        ops.append(CollapseOp(number(layout, TRANSMON), 2.0 * p.gamma_phi))
    return ops
