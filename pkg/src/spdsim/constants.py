"""Centralized numerical tolerances and unit helpers.

All frequency-like quantities are stored in angular units (rad/s) internally;
configuration files carry cyclic values (Hz) and are converted exactly once at
ingestion.  Plain rates (inverse lifetimes, photon fluxes) carry no 2*pi.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class Tolerances:
    """Fixed tolerances used across the library (single source of truth)."""

    density_trace: float = 1e-9        # trace of a density matrix = 1 +/- this
    density_herm: float = 1e-10        # Hermiticity residual of a density matrix
    density_eig_floor: float = -1e-9   # smallest admissible eigenvalue
    ket_norm: float = 1e-10            # ket normalization
    ptrace_trace: float = 1e-12        # trace preservation of a partial trace
    traj_trace: float = 1e-6           # trace drift allowed after integration
    traj_eig_floor: float = -1e-6      # negativity excursion allowed after integration
    herm_eval: float = 1e-10           # Hermiticity of an evaluated Hamiltonian
    unitarity: float = 1e-9            # one-period propagator unitarity
    floquet_orthonormal: float = 1e-8  # Floquet mode orthonormality
    floquet_residual: float = 1e-6     # eigen-residual before declaring defect
    steady_residual: float = 1e-10     # Liouvillian residual of a steady state
    coherent_tail: float = 1e-6        # truncated coherent-state weight warning


TOL = Tolerances()


def cyclic_to_angular(f_hz: float) -> float:
    """Convert a cyclic frequency in Hz to angular rad/s."""
    return TWO_PI * f_hz


def angular_to_cyclic(w: float) -> float:
    """Convert an angular frequency in rad/s to cyclic Hz."""
    return w / TWO_PI


def dbm_to_amplitude(power_dbm: float, calib: float) -> float:
    """Map an instrument power in dBm to a drive amplitude via a calibration
    constant.  Amplitudes scale as the square root of power, i.e. 10^(P/20)."""
    return calib * 10.0 ** (power_dbm / 20.0)


def amplitude_to_dbm(amplitude: float, calib: float) -> float:
    """Exact inverse of :func:`dbm_to_amplitude`."""
    if amplitude <= 0.0 or calib <= 0.0:
        raise ValueError("amplitude and calibration must be positive")
    return 20.0 * np.log10(amplitude / calib)
