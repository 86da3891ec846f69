"""Lockstep batched bisection kernel for Monte Carlo control-cost evaluation.

Integrates many coupling samples simultaneously so the inner loops vectorize
across the sample axis.  The oscillator state is carried as the unit complex
phasor z = exp(i*theta); the phase ODE theta' = w_i + Im(conj(z_i) * sum_j
a_ij z_j) then has a trig-free right-hand side, and RK4 is applied to z with
a renormalization after every step.  Decisions (doubling, bisection) advance
in lockstep over the active samples of a batch.
"""

from __future__ import annotations

import numpy as np
from numba import njit

__all__ = ["xi_batch_kernel"]


@njit(cache=True, fastmath=True)
def _dtheta(zr, zi, omega, aext, out, sr, si):
    n1, ka = zr.shape
    for i in range(n1):
        for s in range(ka):
            sr[s] = 0.0
            si[s] = 0.0
        for j in range(n1):
            for s in range(ka):
                a = aext[i, j, s]
                sr[s] += a * zr[j, s]
                si[s] += a * zi[j, s]
        w = omega[i]
        for s in range(ka):
            # Im(conj(z_i) * S_i)
            out[i, s] = w + zr[i, s] * si[s] - zi[i, s] * sr[s]


@njit(cache=True, fastmath=True)
def _spread_batch(omega, aext, h, n_steps, w_start):
    """Windowed average max pairwise frequency spread for each sample."""
    n1 = omega.shape[0]
    ka = aext.shape[2]
    zr = np.ones((n1, ka))
    zi = np.zeros((n1, ka))
    br = np.empty((n1, ka))
    bi = np.empty((n1, ka))
    accr = np.empty((n1, ka))
    acci = np.empty((n1, ka))
    dth = np.empty((n1, ka))
    sr = np.empty(ka)
    si = np.empty(ka)
    acc = np.zeros(ka)
    half = 0.5 * h
    sixth = h / 6.0
    for step in range(n_steps):
        # stage 1 at z
        _dtheta(zr, zi, omega, aext, dth, sr, si)
        if step >= w_start:
            for s in range(ka):
                lo = dth[0, s]
                hi = dth[0, s]
                for i in range(1, n1):
                    v = dth[i, s]
                    if v < lo:
                        lo = v
                    if v > hi:
                        hi = v
                acc[s] += hi - lo
        for i in range(n1):
            for s in range(ka):
                d = dth[i, s]
                kr = -d * zi[i, s]
                ki = d * zr[i, s]
                accr[i, s] = kr
                acci[i, s] = ki
                br[i, s] = zr[i, s] + half * kr
                bi[i, s] = zi[i, s] + half * ki
        # stage 2
        _dtheta(br, bi, omega, aext, dth, sr, si)
        for i in range(n1):
            for s in range(ka):
                d = dth[i, s]
                kr = -d * bi[i, s]
                ki = d * br[i, s]
                accr[i, s] += 2.0 * kr
                acci[i, s] += 2.0 * ki
                br[i, s] = zr[i, s] + half * kr
                bi[i, s] = zi[i, s] + half * ki
        # stage 3
        _dtheta(br, bi, omega, aext, dth, sr, si)
        for i in range(n1):
            for s in range(ka):
                d = dth[i, s]
                kr = -d * bi[i, s]
                ki = d * br[i, s]
                accr[i, s] += 2.0 * kr
                acci[i, s] += 2.0 * ki
                br[i, s] = zr[i, s] + h * kr
                bi[i, s] = zi[i, s] + h * ki
        # stage 4 and update
        _dtheta(br, bi, omega, aext, dth, sr, si)
        for i in range(n1):
            for s in range(ka):
                d = dth[i, s]
                kr = -d * bi[i, s]
                ki = d * br[i, s]
                r = zr[i, s] + sixth * (accr[i, s] + kr)
                m = zi[i, s] + sixth * (acci[i, s] + ki)
                norm = np.sqrt(r * r + m * m)
                zr[i, s] = r / norm
                zi[i, s] = m / norm
    wcount = n_steps - w_start
    for s in range(ka):
        acc[s] /= wcount
        if not np.isfinite(acc[s]):
            acc[s] = np.inf
    return acc


@njit(cache=True, fastmath=True)
def _gather_run(omega, aext, cvals, idx, h, n_steps, w_start):
    """Integrate the samples listed in idx with per-sample control strength
    cvals[idx]; returns their window spreads (compacted)."""
    n1 = omega.shape[0]
    ka = idx.shape[0]
    sub = np.empty((n1, n1, ka))
    for i in range(n1):
        for j in range(n1):
            for s in range(ka):
                sub[i, j, s] = aext[i, j, idx[s]]
    n = n1 - 1
    for s in range(ka):
        c = cvals[idx[s]]
        for i in range(n):
            sub[i, n, s] = c
            sub[n, i, s] = c
    return _spread_batch(omega, sub, h, n_steps, w_start)


@njit(cache=True, fastmath=True)
def xi_batch_kernel(omega, coups, control_omega, h, n_steps, w_start,
                    sync_tol, max_control, bisect_tol):
    """Minimal synchronizing control strength for each coupling sample.

    Returns -1.0 where the doubling search exceeded max_control and -2.0 on
    numerical blowup.
    """
    n = omega.shape[0]
    n1 = n + 1
    k = coups.shape[0]
    omega_ext = np.empty(n1)
    for i in range(n):
        omega_ext[i] = omega[i]
    omega_ext[n] = control_omega
    aext = np.zeros((n1, n1, k))
    p = 0
    for i in range(n - 1):
        for j in range(i + 1, n):
            for s in range(k):
                aext[i, j, s] = coups[s, p]
                aext[j, i, s] = coups[s, p]
            p += 1

    hi = np.full(k, 2.0)
    lo = np.zeros(k)
    xi = np.zeros(k)
    status = np.zeros(k, dtype=np.int8)  # 0 active, 1 done, -1 nosync, -2 blowup

    # doubling phase: raise hi by +2 until synchronized
    active = np.arange(k)
    if 2.0 > max_control:
        for s in range(k):
            status[s] = -1
        active = active[:0]
    while active.shape[0] > 0:
        spreads = _gather_run(omega_ext, aext, hi, active, h, n_steps, w_start)
        keep = 0
        for t in range(active.shape[0]):
            s = active[t]
            if not np.isfinite(spreads[t]):
                status[s] = -2
            elif spreads[t] < sync_tol:
                status[s] = 1
            else:
                hi[s] += 2.0
                if hi[s] > max_control:
                    status[s] = -1
                else:
                    active[keep] = s
                    keep += 1
        active = active[:keep]

    # bisection phase
    while True:
        cnt = 0
        for s in range(k):
            if status[s] == 1 and hi[s] - lo[s] > bisect_tol:
                cnt += 1
        if cnt == 0:
            break
        active = np.empty(cnt, dtype=np.int64)
        t = 0
        for s in range(k):
            if status[s] == 1 and hi[s] - lo[s] > bisect_tol:
                active[t] = s
                t += 1
        mid = np.empty(k)
        for t in range(cnt):
            s = active[t]
            mid[s] = 0.5 * (hi[s] + lo[s])
        spreads = _gather_run(omega_ext, aext, mid, active, h, n_steps, w_start)
        for t in range(cnt):
            s = active[t]
            if not np.isfinite(spreads[t]):
                status[s] = -2
            elif spreads[t] < sync_tol:
                hi[s] = mid[s]
            else:
                lo[s] = mid[s]

    for s in range(k):
        if status[s] == 1:
            xi[s] = 0.5 * (hi[s] + lo[s])
        else:
            xi[s] = float(status[s])
    return xi
