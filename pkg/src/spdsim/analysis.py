"""State diagnostics: Renyi entropy, Husimi Q maps, bimodality detection,
population decompositions, critical-power detection, and the correction that
strips higher-excited-state weight from the qubit population."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import uniform_filter
from scipy.special import gammaincc

from .hilbert import QState

#: default phase-space window and resolution for a 9-level transmon
DEFAULT_GRID = ((-4.0, 4.0), (-4.0, 4.0), 81)

#: bimodality heuristics: relative peak height, minimal separation (cells)
PEAK_MIN_HEIGHT = 0.2
PEAK_MIN_SEPARATION = 3.0
PEAK_SMOOTH_CELLS = 3

#: a jump must exceed this multiple of the median absolute consecutive step
CPP_JUMP_FACTOR = 3.0


@dataclass(frozen=True)
class HusimiGrid:
    re_axis: np.ndarray
    im_axis: np.ndarray
    values: np.ndarray  # [im, re], nonnegative
    truncation_weight: float

    @property
    def cell_area(self) -> float:
        return float((self.re_axis[1] - self.re_axis[0]) * (self.im_axis[1] - self.im_axis[0]))

    def normalization(self) -> float:
        return float(np.sum(self.values) * self.cell_area)


@dataclass(frozen=True)
class PopulationBreakdown:
    """P_q(n) for n = 0..N_t-1 and the weighted contributions n * P_q(n)."""

    probs: np.ndarray
    weighted: np.ndarray

    @property
    def total_population(self) -> float:
        return float(np.sum(self.weighted))


def renyi_entropy(rho_t: QState, alpha: float = 2.0) -> float:
    """Renyi entropy in bits, S_alpha = log2(Tr rho^alpha) / (1 - alpha).

    For alpha = 2 this is -log2 Tr(rho^2), zero for pure states."""
    if not rho_t.is_density:
        raise ValueError("renyi_entropy requires a density state")
    if alpha == 1.0:
        raise ValueError("alpha = 1 (von Neumann limit) is not supported")
    evals = np.linalg.eigvalsh(rho_t.data)
    evals = np.clip(evals.real, 0.0, None)
    tr_alpha = float(np.sum(evals**alpha))
    return float(np.log2(tr_alpha) / (1.0 - alpha))


def population_breakdown(rho_t: QState) -> PopulationBreakdown:
    if rho_t.layout.nmodes != 1:
        raise ValueError("expected a single-mode reduced state")
    probs = np.clip(np.real(np.diag(rho_t.data)), 0.0, None)
    n = np.arange(probs.size)
    return PopulationBreakdown(probs=probs, weighted=n * probs)


def husimi_q(
    rho_t: QState,
    re_range: tuple[float, float] = DEFAULT_GRID[0],
    im_range: tuple[float, float] = DEFAULT_GRID[1],
    n_points: int = DEFAULT_GRID[2],
) -> HusimiGrid:
    """Q(alpha) = <alpha| rho |alpha> / pi on a rectangular grid.

    The reported truncation weight bounds the Q mass falling outside the grid
    radius (per-Fock-level Poisson tails)."""
    if rho_t.layout.nmodes != 1:
        raise ValueError("husimi_q expects a single-mode reduced state")
    rho = rho_t.as_density().data
    dim = rho.shape[0]
    re = np.linspace(*re_range, n_points)
    im = np.linspace(*im_range, n_points)
    A = re[None, :] + 1j * im[:, None]
    ns = np.arange(dim)
    log_fact = np.concatenate(([0.0], np.cumsum(np.log(np.arange(1, dim)))))
    flat = A.reshape(-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        logs = np.where(
            flat[:, None] == 0,
            np.where(ns[None, :] == 0, 0.0, -np.inf),
            ns[None, :] * np.log(np.where(flat[:, None] == 0, 1.0, flat[:, None])),
        )
    coh = np.exp(logs - 0.5 * log_fact[None, :] - 0.5 * (np.abs(flat) ** 2)[:, None])
    q = np.real(np.einsum("xi,ij,xj->x", coh.conj(), rho, coh)) / np.pi
    q = np.clip(q, 0.0, None).reshape(n_points, n_points)
    radius = min(abs(re_range[0]), abs(re_range[1]), abs(im_range[0]), abs(im_range[1]))
    pops = np.clip(np.real(np.diag(rho)), 0.0, None)
    tail = float(np.sum(pops * gammaincc(ns + 1.0, radius**2)))
    return HusimiGrid(re_axis=re, im_axis=im, values=q, truncation_weight=tail)


def detect_bimodality(grid: HusimiGrid) -> tuple[int, list[complex]]:
    """Count local maxima of the 3x3-mean-smoothed map that exceed 20% of the
    global maximum and sit at least 3 cells apart; returns (count, locations)."""
    sm = uniform_filter(grid.values, size=PEAK_SMOOTH_CELLS, mode="nearest")
    peak = float(sm.max())
    if peak <= 0.0:
        return 0, []
    ny, nx = sm.shape
    cands = []
    for iy in range(ny):
        for ix in range(nx):
            v = sm[iy, ix]
            if v < PEAK_MIN_HEIGHT * peak:
                continue
            y0, y1 = max(0, iy - 1), min(ny, iy + 2)
            x0, x1 = max(0, ix - 1), min(nx, ix + 2)
            window = sm[y0:y1, x0:x1]
            if v >= window.max() and np.count_nonzero(window == v) <= window.size:
                if v == window.max():
                    cands.append((v, iy, ix))
    cands.sort(reverse=True)
    accepted: list[tuple[int, int]] = []
    for v, iy, ix in cands:
        if all(np.hypot(iy - jy, ix - jx) >= PEAK_MIN_SEPARATION for jy, jx in accepted):
            accepted.append((iy, ix))
    locs = [complex(grid.re_axis[ix], grid.im_axis[iy]) for iy, ix in accepted]
    return len(accepted), locs


def detect_cpp(powers_dbm: np.ndarray, n_q_series: np.ndarray) -> float | None:
    """Power at the maximum consecutive forward difference, provided it
    exceeds three times the median absolute consecutive difference; None when
    no such jump exists."""
    p = np.asarray(powers_dbm, dtype=float)
    y = np.asarray(n_q_series, dtype=float)
    if p.size < 5:
        raise ValueError("need at least 5 sweep points")
    dp = np.diff(p)
    if not (np.all(dp > 0) or np.all(dp < 0)):
        raise ValueError("power grid must be monotone")
    d = np.diff(y)
    med = float(np.median(np.abs(d)))
    imax = int(np.argmax(d))
    if d[imax] <= CPP_JUMP_FACTOR * med or d[imax] <= 0:
        return None
    return float(p[imax + 1])


def ti_correction(rho_t: QState, cutoff: int = 2) -> float:
    """Population with weight above ``cutoff`` removed:
    sum_{n <= cutoff} n P_q(n)."""
    bd = population_breakdown(rho_t)
    if cutoff >= bd.probs.size:
        raise ValueError("cutoff must be below the transmon dimension")
    return float(np.sum(bd.weighted[: cutoff + 1]))
