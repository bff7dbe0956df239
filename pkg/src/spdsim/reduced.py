"""Effective two-mode model obtained by adiabatically eliminating the
fast-decaying waste mode: nonlinear decay rate, conversion efficiency,
closed-form qubit evolutions with decoherence and thermal corrections, and
the reduced Lindblad right-hand side used to validate the analytic path."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .hilbert import QOperator, QState, SpaceLayout, annihilation

#: adiabatic elimination is trusted while |g4 xi_p|/kappa_w and |chi_qw|/kappa_w
#: stay below this ratio
VALIDITY_RATIO = 0.1

#: thermal expansion (first order in n_th) is trusted below this occupancy
THERMAL_VALIDITY = 0.1


class ValidityError(ValueError):
    pass


@dataclass(frozen=True)
class ReducedModelParams:
    """Rates of the eliminated-waste model.  ``g4_xi`` and ``kappa_w`` are
    kept for validity bookkeeping and the off-resonant shift term; they are
    not independent inputs of the analytic formulas."""

    kappa_nl: float
    kappa_b: float
    gamma_q: float = 0.0
    n_th_w: float = 0.0
    b_in_flux: float = 0.0
    delta_w: float = 0.0
    chi_qw: float = 0.0
    g4_xi: float = 0.0
    kappa_w: float | None = None

    def __post_init__(self):
        for name in ("kappa_nl", "kappa_b", "gamma_q", "n_th_w", "b_in_flux"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")

    @property
    def elimination_ratio(self) -> float | None:
        if not self.kappa_w:
            return None
        return max(abs(self.g4_xi), abs(self.chi_qw)) / self.kappa_w

    @property
    def is_valid(self) -> bool:
        r = self.elimination_ratio
        return r is None or r < VALIDITY_RATIO


def kappa_nl(g4_xi: float, kappa_w: float, delta_w: float = 0.0, chi_qw: float = 0.0) -> float:
    """Nonlinear decay rate of the eliminated waste mode,
    |g4 xi_p|^2 kappa_w / ((kappa_w/2)^2 + (delta_w - chi_qw)^2);
    equals 4|g4 xi_p|^2/kappa_w on resonance."""
    if kappa_w <= 0:
        raise ValueError("kappa_w must be positive")
    det = delta_w - chi_qw
    return abs(g4_xi) ** 2 * kappa_w / ((kappa_w / 2.0) ** 2 + det**2)


def conversion_efficiency(kappa_nl_: float, kappa_b: float) -> float:
    """Impedance-matching factor 4 k_nl k_b / (k_nl + k_b)^2, in [0, 1] and
    equal to one exactly at matched rates."""
    if kappa_nl_ < 0 or kappa_b < 0:
        raise ValueError("rates must be nonnegative")
    if kappa_nl_ == 0 and kappa_b == 0:
        raise ValueError("at least one rate must be positive")
    return 4.0 * kappa_nl_ * kappa_b / (kappa_nl_ + kappa_b) ** 2


def qubit_evolution_decoherence(
    eta_c: float,
    b_in_flux: float,
    gamma_q: float,
    t: float | np.ndarray,
    p_g0: float = 1.0,
    p_e0: float = 0.0,
) -> tuple[np.ndarray, np.ndarray]:
    """Exact solution of the two-level rate equations with conversion rate
    R = eta_c |b_in|^2 and relaxation gamma_q; saturates at R/(R + gamma_q)."""
    if min(eta_c, b_in_flux, gamma_q) < 0:
        raise ValueError("inputs must be nonnegative")
    if abs(p_g0 + p_e0 - 1.0) > 1e-12:
        raise ValueError("initial populations must sum to one")
    t = np.asarray(t, dtype=float)
    r = eta_c * b_in_flux
    lam = r + gamma_q
    if lam == 0.0:
        ones = np.ones_like(t)
        return p_g0 * ones, p_e0 * ones
    decay = np.exp(-lam * t)
    p_g = (r / lam) * decay * p_g0 + (gamma_q / lam) * p_g0 + (gamma_q / lam) * (1 - decay) * p_e0
    p_e = (r / lam) * (1 - decay) * p_g0 + ((r / lam) + (gamma_q / lam) * decay) * p_e0
    return p_g, p_e


def saturated_population_decoherence(eta_c: float, b_in_flux: float, gamma_q: float) -> float:
    """p_e(t -> inf) = R / (R + gamma_q) with R = eta_c |b_in|^2; strictly
    below one for any nonzero relaxation."""
    r = eta_c * b_in_flux
    if r == 0 and gamma_q == 0:
        raise ValueError("undefined limit with all rates zero")
    return r / (r + gamma_q)


def saturated_population_thermal(n_th_w: float) -> float:
    """(1 - 6 n_th) / (1 - 4 n_th), valid for small thermal occupancy."""
    if n_th_w < 0:
        raise ValueError("occupancy must be nonnegative")
    if n_th_w >= THERMAL_VALIDITY:
        raise ValidityError(
            f"n_th_w = {n_th_w} outside the small-occupancy expansion (< {THERMAL_VALIDITY})"
        )
    return (1.0 - 6.0 * n_th_w) / (1.0 - 4.0 * n_th_w)


def thermal_conversion_efficiency(kappa_nl_: float, kappa_b: float, n_th_w: float) -> float:
    """Modified matching factor 4 k_b k_nl (1-4n) / (k_nl (1-4n) + k_b)^2."""
    if n_th_w >= THERMAL_VALIDITY:
        raise ValidityError(f"n_th_w = {n_th_w} outside the expansion validity")
    keff = kappa_nl_ * (1.0 - 4.0 * n_th_w)
    return 4.0 * kappa_b * keff / (keff + kappa_b) ** 2


def qubit_evolution_thermal(
    kappa_nl_: float,
    kappa_b: float,
    n_th_w: float,
    b_in_flux: float,
    t: float | np.ndarray,
) -> np.ndarray:
    """p_e(t) = (1-6n)/(1-4n) (1 - exp(-eta_c' |b_in|^2 t)); reduces to the
    zero-relaxation decoherence solution at n_th = 0."""
    sat = saturated_population_thermal(n_th_w)
    eta_p = thermal_conversion_efficiency(kappa_nl_, kappa_b, n_th_w)
    t = np.asarray(t, dtype=float)
    return sat * (1.0 - np.exp(-eta_p * b_in_flux * t))


def _qb_ops(layout: SpaceLayout) -> tuple[QOperator, QOperator]:
    if layout.nmodes != 2 or layout.dims[0] != 2:
        raise ValueError("reduced model expects a (2, N_b) qubit (x) buffer layout")
    return annihilation(layout, 0), annihilation(layout, 1)


def _dissipator(l: np.ndarray, rho: np.ndarray) -> np.ndarray:
    ld = l.conj().T
    return l @ rho @ ld - 0.5 * (ld @ l @ rho + rho @ ld @ l)


def reduced_lindblad_rhs(
    rho_00: QState, params: ReducedModelParams, eps_b: float | None = None
) -> np.ndarray:
    """Right-hand side of the eliminated-waste master equation on the
    qubit (x) buffer space.

    Includes k_nl (1-4n) D[a_b s+], the -2 k_nl n (a_b s+ rho a_b+ s) term,
    buffer decay, the drive commutator eps_b [a_b - a_b+, rho], qubit
    relaxation, and (at n_th = 0 only) the dispersive-shift commutator
    (k_nl det / kappa_w) [n_b s s+, rho] that survives off resonance."""
    if not rho_00.is_density:
        raise ValueError("expected a density state")
    lay = rho_00.layout
    sig, ab = _qb_ops(lay)
    rho = rho_00.data
    n = params.n_th_w
    if eps_b is None:
        eps_b = math.sqrt(params.kappa_b * params.b_in_flux)

    lnl = (ab @ sig.dag()).matrix  # a_b sigma+
    out = params.kappa_nl * (1.0 - 4.0 * n) * _dissipator(lnl, rho)
    if n > 0:
        out -= 2.0 * params.kappa_nl * n * (lnl @ rho @ lnl.conj().T)
    else:
        det = params.delta_w - params.chi_qw
        if det != 0.0:
            if not params.kappa_w:
                raise ValueError("kappa_w is required for the off-resonant shift term")
            lam = params.kappa_nl * det / params.kappa_w
            h_shift = lam * ((ab.dag() @ ab) @ (sig @ sig.dag())).matrix
            out += -1j * (h_shift @ rho - rho @ h_shift)
    out += params.kappa_b * _dissipator(ab.matrix, rho)
    if eps_b:
        comm = (ab - ab.dag()).matrix
        out += eps_b * (comm @ rho - rho @ comm)
    if params.gamma_q > 0:
        out += params.gamma_q * _dissipator(sig.matrix, rho)
    return out


def propagate_reduced(
    rho0: QState,
    params: ReducedModelParams,
    t_final: float,
    sample_times: np.ndarray,
    rtol: float = 1e-8,
    atol: float = 1e-10,
) -> list[np.ndarray]:
    """Integrate the reduced master equation (same RK5(4) scheme as the full
    solver, via scipy) and return density matrices at the sample times."""
    from scipy.integrate import solve_ivp

    lay = rho0.layout
    nn = lay.total_dim

    def rhs(t, y):
        from .hilbert import QState as _QS

        rho = QState(lay, "density", y.reshape(nn, nn))
        return reduced_lindblad_rhs(rho, params).reshape(-1)

    sol = solve_ivp(
        rhs,
        (0.0, t_final),
        rho0.data.reshape(-1).astype(complex),
        method="RK45",
        rtol=rtol,
        atol=atol,
        t_eval=np.asarray(sample_times, dtype=float),
    )
    if not sol.success:
        raise RuntimeError(f"reduced-model integration failed: {sol.message}")
    return [sol.y[:, i].reshape(nn, nn) for i in range(sol.t.size)]
