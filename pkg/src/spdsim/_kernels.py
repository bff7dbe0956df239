"""Numba kernels: an embedded Dormand-Prince 5(4) loop on the vectorized
density matrix, specialized to banded tensor-product operators.

Every operator appearing in the master equation (Kerr diagonals, drive
ladders, tensor-product jump operators) is a sum of a few "flat diagonals"
of the full matrix: M[k + off, k] = w[k].  The right-hand side fuses into two
streaming passes: one accumulating G = A(t) rho row by row, and one combining
-i(G - G+) with the jump terms on the upper triangle only (the generator
preserves Hermiticity, so the lower triangle is mirrored).  State vectors are
stored as separate real and imaginary planes, which keeps every hot loop a
pure real fused-multiply-add stream.
"""
from __future__ import annotations

import numpy as np
from numba import njit

# Dormand-Prince 5(4) tableau
DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
DP_A = np.zeros((7, 7))
DP_A[1, 0] = 1 / 5
DP_A[2, :2] = (3 / 40, 9 / 40)
DP_A[3, :3] = (44 / 45, -56 / 15, 32 / 9)
DP_A[4, :4] = (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729)
DP_A[5, :5] = (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656)
DP_A[6, :6] = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84)
DP_B = DP_A[6].copy()
DP_E = np.array(
    [71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40]
)
# dense-output polynomial (quartic interpolant)
DP_P = np.array(
    [
        [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
        [0.0, 0.0, 0.0, 0.0],
        [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
        [0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
        [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
        [0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
        [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
    ]
)

TF_CONST = 0
TF_EXP = 1
TF_COS = 2

OK = 0
ERR_STEP_UNDERFLOW = 1
ERR_MAX_STEPS = 2


@njit(cache=True, fastmath=True, inline="always")
def _rhs(
    t,
    y,
    out,
    g,
    n,
    size,
    c_offs,
    c_wr,
    c_wi,
    td_offs,
    td_wr,
    td_wi,
    td_tag,
    td_delta,
    td_omega_p,
    td_omega,
    td_sign,
    jp_offs,
    jp_wr,
    jp_wi,
    jp_rates,
):
    """out = -i (G - G+) + sum_l r_l L_l rho L_l+ with G = A(t) rho.

    A = H(t) - (i/2) sum r L+L is encoded as flat diagonals (constant part in
    c_*, time-dependent terms in td_*); every jump operator is a single flat
    diagonal (jp_*).  y/out are (2*size,) with real plane first; rho must be
    Hermitian and out is written Hermitian."""
    rr = y[0:size].reshape(n, n)
    ri = y[size:].reshape(n, n)
    orr = out[0:size].reshape(n, n)
    oii = out[size:].reshape(n, n)
    gr = g[0:size].reshape(n, n)
    gi = g[size:].reshape(n, n)

    ntd = td_offs.shape[0]
    fr = np.empty(ntd)
    fi = np.empty(ntd)
    for m in range(ntd):
        tag = td_tag[m]
        if tag == TF_EXP:
            ph = td_delta[m] * t
            fr[m] = np.cos(ph)
            fi[m] = np.sin(ph)
        elif tag == TF_COS:
            ph = td_sign[m] * td_omega[m] * t
            cc = np.cos(td_omega_p[m] * t)
            fr[m] = cc * np.cos(ph)
            fi[m] = cc * np.sin(ph)
        else:
            fr[m] = 1.0
            fi[m] = 0.0

    # pass 1: G = A(t) rho, accumulated by output row
    for i in range(n):
        for j in range(n):
            gr[i, j] = 0.0
            gi[i, j] = 0.0
        for d in range(c_offs.shape[0]):
            k = i - c_offs[d]
            if 0 <= k < n:
                cr = c_wr[d, k]
                ci = c_wi[d, k]
                if cr != 0.0 or ci != 0.0:
                    for j in range(n):
                        a = rr[k, j]
                        b = ri[k, j]
                        gr[i, j] += cr * a - ci * b
                        gi[i, j] += cr * b + ci * a
        for m in range(ntd):
            k = i - td_offs[m]
            if 0 <= k < n:
                wr = td_wr[m, k]
                wi = td_wi[m, k]
                cr = fr[m] * wr - fi[m] * wi
                ci = fr[m] * wi + fi[m] * wr
                if cr != 0.0 or ci != 0.0:
                    for j in range(n):
                        a = rr[k, j]
                        b = ri[k, j]
                        gr[i, j] += cr * a - ci * b
                        gi[i, j] += cr * b + ci * a

    # pass 2: upper triangle of -i(G - G+) + jumps, mirrored to the lower
    nl = jp_offs.shape[0]
    for i in range(n):
        for j in range(i, n):
            orr[i, j] = gi[i, j] + gi[j, i]
            oii[i, j] = gr[j, i] - gr[i, j]
        for l in range(nl):
            off = jp_offs[l]
            ki = i - off
            if 0 <= ki < n:
                ar = jp_rates[l] * jp_wr[l, ki]
                ai = jp_rates[l] * jp_wi[l, ki]
                if ar != 0.0 or ai != 0.0:
                    j0 = max(i, off)
                    j1 = min(n, n + off)
                    for j in range(j0, j1):
                        kj = j - off
                        # c = r * w[ki] * conj(w[kj])
                        cr = ar * jp_wr[l, kj] + ai * jp_wi[l, kj]
                        ci = ai * jp_wr[l, kj] - ar * jp_wi[l, kj]
                        a = rr[ki, kj]
                        b = ri[ki, kj]
                        orr[i, j] += cr * a - ci * b
                        oii[i, j] += cr * b + ci * a
        for j in range(i + 1, n):
            orr[j, i] = orr[i, j]
            oii[j, i] = -oii[i, j]
        oii[i, i] = 0.0


@njit(cache=True, fastmath=True)
def _error_norm(err, y0, y1, atol, rtol, size):
    s = 0.0
    for i in range(size):
        m0 = np.sqrt(y0[i] ** 2 + y0[size + i] ** 2)
        m1 = np.sqrt(y1[i] ** 2 + y1[size + i] ** 2)
        sc = atol + rtol * max(m0, m1)
        e2 = (err[i] ** 2 + err[size + i] ** 2) / (sc * sc)
        s += e2
    return np.sqrt(s / size)


@njit(cache=True, fastmath=True)
def integrate_dp54(
    y0,
    t_final,
    h0,
    max_step,
    rtol,
    atol,
    sample_times,
    out_states,
    n,
    c_offs,
    c_wr,
    c_wi,
    td_offs,
    td_wr,
    td_wi,
    td_tag,
    td_delta,
    td_omega_p,
    td_omega,
    td_sign,
    jp_offs,
    jp_wr,
    jp_wi,
    jp_rates,
    A,
    B,
    C,
    E,
    P,
    max_steps,
):
    """Adaptive embedded RK5(4) with quartic dense output at sample_times.

    y0 and out_states rows are split-plane vectors (2*size,).
    Returns (status, n_steps, t_reached)."""
    size = n * n
    full = 2 * size
    y = y0.copy()
    k = np.zeros((7, full))
    ytmp = np.zeros(full)
    ynew = np.zeros(full)
    yerr = np.zeros(full)
    gbuf = np.zeros(full)

    t = 0.0
    h = min(h0, max_step, t_final)
    isamp = 0
    nsamp = sample_times.shape[0]
    nsteps = 0
    hmin_factor = 10.0 * 2.220446049250313e-16
    rejected = False

    while isamp < nsamp and sample_times[isamp] <= 0.0:
        out_states[isamp, :] = y
        isamp += 1

    _rhs(t, y, k[0], gbuf, n, size, c_offs, c_wr, c_wi, td_offs, td_wr, td_wi,
         td_tag, td_delta, td_omega_p, td_omega, td_sign, jp_offs, jp_wr,
         jp_wi, jp_rates)

    attempts = 0
    while t < t_final:
        if h < hmin_factor * max(abs(t), 1e-300):
            return ERR_STEP_UNDERFLOW, nsteps, t
        attempts += 1
        if attempts > max_steps:
            return ERR_MAX_STEPS, nsteps, t
        if t + h > t_final:
            h = t_final - t
        # stages 2..7
        for s in range(1, 7):
            ytmp[:] = y
            for q in range(s):
                a = A[s, q]
                if a != 0.0:
                    ah = h * a
                    kq = k[q]
                    for i in range(full):
                        ytmp[i] += ah * kq[i]
            _rhs(t + C[s] * h, ytmp, k[s], gbuf, n, size, c_offs, c_wr, c_wi,
                 td_offs, td_wr, td_wi, td_tag, td_delta, td_omega_p, td_omega,
                 td_sign, jp_offs, jp_wr, jp_wi, jp_rates)
        # 5th-order solution is stage-7 input (FSAL): ynew = y + h * sum b_q k_q
        ynew[:] = y
        yerr[:] = 0.0
        for q in range(7):
            if B[q] != 0.0:
                bh = h * B[q]
                kq = k[q]
                for i in range(full):
                    ynew[i] += bh * kq[i]
            if E[q] != 0.0:
                eh = h * E[q]
                kq = k[q]
                for i in range(full):
                    yerr[i] += eh * kq[i]
        err = _error_norm(yerr, y, ynew, atol, rtol, size)
        if err <= 1.0:
            # dense output for samples inside (t, t+h]
            while isamp < nsamp and sample_times[isamp] <= t + h + 1e-300:
                theta = (sample_times[isamp] - t) / h
                if theta > 1.0:
                    theta = 1.0
                if theta < 0.0:
                    theta = 0.0
                row = out_states[isamp]
                row[:] = y
                for q in range(7):
                    pv = 0.0
                    tp = theta
                    for j in range(4):
                        pv += P[q, j] * tp
                        tp *= theta
                    if pv != 0.0:
                        hp = h * pv
                        kq = k[q]
                        for i in range(full):
                            row[i] += hp * kq[i]
                isamp += 1
            t += h
            y[:] = ynew
            k[0, :] = k[6]  # FSAL
            nsteps += 1
            factor = 10.0
            if err > 0.0:
                factor = 0.9 * err ** (-0.2)
                if factor > 10.0:
                    factor = 10.0
                if factor < 0.2:
                    factor = 0.2
            if rejected and factor > 1.0:
                factor = 1.0  # no growth right after a rejection
            rejected = False
            h = min(h * factor, max_step)
        else:
            rejected = True
            factor = 0.9 * err ** (-0.2)
            if factor < 0.2:
                factor = 0.2
            h *= factor
    while isamp < nsamp:
        out_states[isamp, :] = y
        isamp += 1
    return OK, nsteps, t
