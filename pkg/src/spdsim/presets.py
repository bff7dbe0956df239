"""Bundled parameter sets for the reference device (a fixed-frequency
transmon in a two-mode 3D cavity operated as an irreversible frequency
converter) and its calibrated drive defaults.

The pump-power calibration constants map instrument dBm to the dimensionless
pump amplitude and to the direct qubit-drive rate; both were fixed once by
matching the simulated critical pump power and conversion optimum to the
device's operating point at -67 dBm, since the line attenuation is not known
independently.
"""
from __future__ import annotations

from .constants import TWO_PI
from .hilbert import SpaceLayout
from .model import DriveSettings, SystemParams, flux_for_buffer_photons

#: transmon levels, buffer levels, waste levels used in the full simulations
REFERENCE_LAYOUT = (9, 3, 3)

#: pump amplitude per 10^(P/20): conversion matching near the critical power
PUMP_CALIB = 1995.6

#: qubit-drive rate (rad/s) per 10^(P/20); see module docstring
QUBIT_DRIVE_CALIB = TWO_PI * 45e6 / 10 ** (-67.0 / 20.0)

#: pump frequency of the drive tone (angular rad/s)
PUMP_FREQ = TWO_PI * 5.1595e9

#: critical pump power of the calibrated model (dBm)
CPP_DBM = -67.0


def reference_device(**overrides) -> SystemParams:
    """Device constants; anharmonicity -490 MHz, higher Kerr terms zero."""
    n_t = REFERENCE_LAYOUT[0]
    base = dict(
        omega_q=TWO_PI * 5.664e9,
        omega_b=TWO_PI * 7.955e9,
        omega_w=TWO_PI * 7.609e9,
        kappa_b=TWO_PI * 3.7e6,
        kappa_w=TWO_PI * 16.7e6,
        gamma_q=1.0 / 28e-6,
        g4=TWO_PI * 3.6e6,
        chi=(-TWO_PI * 490e6,) + (0.0,) * (n_t - 3),
        # dispersive estimates from the mode couplings; the effective values
        # are not known independently
        chi_qw=-TWO_PI * 0.186e6,
        chi_qb=-TWO_PI * 0.050e6,
        g_w=TWO_PI * 30e6,
        g_b=TWO_PI * 18e6,
        t_eff=0.098,
        t2=16e-6,
    )
    base.update(overrides)
    if "chi" in overrides:
        base["chi"] = tuple(overrides["chi"])
    return SystemParams(**base)


def reference_drive(**overrides) -> DriveSettings:
    base = dict(
        pump_power_dbm=CPP_DBM,
        pump_freq=PUMP_FREQ,
        pump_calib=PUMP_CALIB,
        qubit_drive_calib=QUBIT_DRIVE_CALIB,
        b_in_flux=flux_for_buffer_photons(0.25, TWO_PI * 3.7e6),
        buffer_pulse_len=0.55e-6,
        detuning_qwbp=0.0,
    )
    base.update(overrides)
    return DriveSettings(**base)


def reference_layout() -> SpaceLayout:
    return SpaceLayout(REFERENCE_LAYOUT)
