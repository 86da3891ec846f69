"""Extended Kuramoto integration (RK4), frequency-synchronization detection,
and the minimal control cost xi(a) via doubling + bisection.

The hot path (per-sample bisection inside Monte Carlo MOCU estimation) is
compiled with numba; everything here is a pure function of its inputs and
deterministic (all initial phases are zero).
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, asdict

import numpy as np
from numba import njit, prange, set_num_threads

from ._batch import xi_batch_kernel
from .core import KuramotoInstance

__all__ = [
    "SimConfig",
    "NumericalBlowupError",
    "NoSynchronizationError",
    "integrate",
    "is_synchronized",
    "min_control_cost",
    "xi_batch",
]

_threads = os.environ.get("KOED_THREADS")
if _threads:
    set_num_threads(max(1, int(_threads)))


class NumericalBlowupError(RuntimeError):
    """Integration produced a non-finite state."""


class NoSynchronizationError(RuntimeError):
    """Doubling search exceeded max_control without reaching synchronization."""


@dataclass(frozen=True)
class SimConfig:
    """Integrator and detector parameters.

    The bisection threshold 2.5e-4 follows the published sampling algorithm;
    the remaining defaults are implementation choices (see README).
    """

    step: float = 0.02
    duration: float = 10.0
    window_fraction: float = 0.2
    sync_tol: float = 1e-2
    max_control: float = 512.0
    bisect_tol: float = 2.5e-4

    def __post_init__(self):
        if self.step <= 0:
            raise ValueError("step must be > 0")
        if self.duration < 10 * self.step:
            raise ValueError("duration must be >= 10 * step")
        if not (0 < self.window_fraction < 1):
            raise ValueError("window_fraction must be in (0, 1)")
        if self.sync_tol <= 0:
            raise ValueError("sync_tol must be > 0")
        if self.bisect_tol <= 0:
            raise ValueError("bisect_tol must be > 0")

    @property
    def n_steps(self) -> int:
        return max(1, int(round(self.duration / self.step)))

    @property
    def window_start(self) -> int:
        n = self.n_steps
        return n - max(1, int(round(self.window_fraction * n)))

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, obj: dict) -> "SimConfig":
        known = {f for f in cls.__dataclass_fields__}
        return cls(**{k: v for k, v in obj.items() if k in known})

    @classmethod
    def from_json_file(cls, path: str) -> "SimConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


@njit(cache=True, fastmath=True)
def _deriv(theta, omega, amat, out, sbuf, cbuf):
    n1 = theta.shape[0]
    for i in range(n1):
        sbuf[i] = np.sin(theta[i])
        cbuf[i] = np.cos(theta[i])
    for i in range(n1):
        s_acc = 0.0
        c_acc = 0.0
        for j in range(n1):
            a = amat[i, j]
            s_acc += a * sbuf[j]
            c_acc += a * cbuf[j]
        # sum_j a_ij * sin(theta_j - theta_i)
        out[i] = omega[i] + s_acc * cbuf[i] - c_acc * sbuf[i]


@njit(cache=True, fastmath=True)
def _window_spread(omega, amat, h, n_steps, w_start):
    """Integrate from all-zero phases; return the time-averaged max pairwise
    instantaneous-frequency spread over steps [w_start, n_steps), or NaN on
    numerical blowup."""
    n1 = omega.shape[0]
    theta = np.zeros(n1)
    tmp = np.empty(n1)
    k1 = np.empty(n1)
    k2 = np.empty(n1)
    k3 = np.empty(n1)
    k4 = np.empty(n1)
    sbuf = np.empty(n1)
    cbuf = np.empty(n1)
    acc = 0.0
    count = 0
    for step in range(n_steps):
        _deriv(theta, omega, amat, k1, sbuf, cbuf)
        if step >= w_start:
            lo = k1[0]
            hi = k1[0]
            for i in range(1, n1):
                v = k1[i]
                if v < lo:
                    lo = v
                if v > hi:
                    hi = v
            acc += hi - lo
            count += 1
        for i in range(n1):
            tmp[i] = theta[i] + 0.5 * h * k1[i]
        _deriv(tmp, omega, amat, k2, sbuf, cbuf)
        for i in range(n1):
            tmp[i] = theta[i] + 0.5 * h * k2[i]
        _deriv(tmp, omega, amat, k3, sbuf, cbuf)
        for i in range(n1):
            tmp[i] = theta[i] + h * k3[i]
        _deriv(tmp, omega, amat, k4, sbuf, cbuf)
        for i in range(n1):
            theta[i] += (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
    for i in range(n1):
        if not np.isfinite(theta[i]):
            return np.nan
    return acc / count


@njit(cache=True, fastmath=True)
def _freq_trajectory(omega, amat, h, n_steps, w_start):
    """As _window_spread, but returns the instantaneous frequencies sampled
    over the measurement window, shape (n_steps - w_start, N+1)."""
    n1 = omega.shape[0]
    theta = np.zeros(n1)
    tmp = np.empty(n1)
    k1 = np.empty(n1)
    k2 = np.empty(n1)
    k3 = np.empty(n1)
    k4 = np.empty(n1)
    sbuf = np.empty(n1)
    cbuf = np.empty(n1)
    out = np.empty((n_steps - w_start, n1))
    for step in range(n_steps):
        _deriv(theta, omega, amat, k1, sbuf, cbuf)
        if step >= w_start:
            for i in range(n1):
                out[step - w_start, i] = k1[i]
        for i in range(n1):
            tmp[i] = theta[i] + 0.5 * h * k1[i]
        _deriv(tmp, omega, amat, k2, sbuf, cbuf)
        for i in range(n1):
            tmp[i] = theta[i] + 0.5 * h * k2[i]
        _deriv(tmp, omega, amat, k3, sbuf, cbuf)
        for i in range(n1):
            tmp[i] = theta[i] + h * k3[i]
        _deriv(tmp, omega, amat, k4, sbuf, cbuf)
        for i in range(n1):
            theta[i] += (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
    for i in range(n1):
        if not np.isfinite(theta[i]):
            out[0, 0] = np.nan
    return out


@njit(cache=True, fastmath=True)
def _build_extended(omega, coup, control_omega):
    """Extended system: N model oscillators plus a control oscillator coupled
    to every other at strength written separately via _set_control."""
    n = omega.shape[0]
    n1 = n + 1
    omega_ext = np.empty(n1)
    for i in range(n):
        omega_ext[i] = omega[i]
    omega_ext[n] = control_omega
    amat = np.zeros((n1, n1))
    k = 0
    for i in range(n - 1):
        for j in range(i + 1, n):
            amat[i, j] = coup[k]
            amat[j, i] = coup[k]
            k += 1
    return omega_ext, amat


@njit(cache=True, fastmath=True)
def _set_control(amat, c):
    n = amat.shape[0] - 1
    for i in range(n):
        amat[i, n] = c
        amat[n, i] = c


@njit(cache=True, fastmath=True)
def _xi_single(omega, coup, control_omega, h, n_steps, w_start, sync_tol,
               max_control, bisect_tol):
    """Doubling (+2 increments) then bisection for the minimal synchronizing
    control strength.  Returns -1.0 if max_control is exceeded, -2.0 on
    numerical blowup."""
    omega_ext, amat = _build_extended(omega, coup, control_omega)
    hi = 2.0
    while True:
        if hi > max_control:
            return -1.0
        _set_control(amat, hi)
        spread = _window_spread(omega_ext, amat, h, n_steps, w_start)
        if np.isnan(spread):
            return -2.0
        if spread < sync_tol:
            break
        hi += 2.0
    lo = 0.0
    while hi - lo > bisect_tol:
        c = 0.5 * (hi + lo)
        _set_control(amat, c)
        spread = _window_spread(omega_ext, amat, h, n_steps, w_start)
        if np.isnan(spread):
            return -2.0
        if spread < sync_tol:
            hi = c
        else:
            lo = c
    return 0.5 * (hi + lo)


@njit(cache=True, fastmath=True, parallel=True)
def _xi_batch(omega, coups, control_omega, h, n_steps, w_start, sync_tol,
              max_control, bisect_tol):
    k = coups.shape[0]
    out = np.empty(k)
    for s in prange(k):
        out[s] = _xi_single(omega, coups[s], control_omega, h, n_steps,
                            w_start, sync_tol, max_control, bisect_tol)
    return out


def _extended_for(instance: KuramotoInstance, control_strength: float,
                  control_omega: float):
    omega_ext, amat = _build_extended(instance.omegas, instance.couplings,
                                      float(control_omega))
    _set_control(amat, float(control_strength))
    return omega_ext, amat


def integrate(instance: KuramotoInstance, control_strength: float,
              control_omega: float, config: SimConfig = SimConfig()) -> np.ndarray:
    """Instantaneous frequencies of all N+1 oscillators sampled over the
    final measurement window, shape (window_steps, N+1)."""
    if control_strength < 0:
        raise ValueError("control_strength must be >= 0")
    omega_ext, amat = _extended_for(instance, control_strength, control_omega)
    out = _freq_trajectory(omega_ext, amat, config.step, config.n_steps,
                           config.window_start)
    if not np.all(np.isfinite(out)):
        raise NumericalBlowupError(
            f"non-finite state integrating N={instance.n} at "
            f"control={control_strength}")
    return out


def is_synchronized(instance: KuramotoInstance, control_strength: float,
                    control_omega: float,
                    config: SimConfig = SimConfig()) -> bool:
    """True iff the time-averaged max pairwise frequency spread over the
    measurement window is below sync_tol."""
    if control_strength < 0:
        raise ValueError("control_strength must be >= 0")
    omega_ext, amat = _extended_for(instance, control_strength, control_omega)
    spread = _window_spread(omega_ext, amat, config.step, config.n_steps,
                            config.window_start)
    if np.isnan(spread):
        raise NumericalBlowupError(
            f"non-finite state integrating N={instance.n} at "
            f"control={control_strength}")
    return bool(spread < config.sync_tol)


def min_control_cost(instance: KuramotoInstance, control_omega: float,
                     config: SimConfig = SimConfig()) -> float:
    """Minimal control strength synchronizing the extended system (midpoint
    of the final bisection bracket)."""
    xi = _xi_single(instance.omegas, instance.couplings, float(control_omega),
                    config.step, config.n_steps, config.window_start,
                    config.sync_tol, config.max_control, config.bisect_tol)
    return _check_xi(xi, instance.n, config)


def xi_batch(omegas: np.ndarray, couplings: np.ndarray, control_omega: float,
             config: SimConfig = SimConfig()) -> np.ndarray:
    """Vectorized min_control_cost over a batch of coupling vectors sharing
    one frequency vector.  Raises on the first failed sample."""
    couplings = np.ascontiguousarray(couplings, dtype=np.float64)
    omegas = np.ascontiguousarray(omegas, dtype=np.float64)
    xis = xi_batch_kernel(omegas, couplings, float(control_omega), config.step,
                          config.n_steps, config.window_start, config.sync_tol,
                          config.max_control, config.bisect_tol)
    bad = np.where(xis < 0)[0]
    if bad.size:
        _check_xi(float(xis[bad[0]]), omegas.shape[0], config,
                  sample=int(bad[0]))
    return xis


def _check_xi(xi: float, n: int, config: SimConfig, sample: int | None = None):
    where = "" if sample is None else f" (sample {sample})"
    if xi == -1.0:
        raise NoSynchronizationError(
            f"no synchronization up to control={config.max_control}{where}")
    if xi == -2.0:
        raise NumericalBlowupError(
            f"non-finite state during bisection for N={n}{where}")
    return float(xi)
