"""Integrating-factor Runge-Kutta stepping with embedded error control.

The scheme is the classical Kutta-Merson 4(3) pair applied in Lawson
form: an exactly integrable diagonal decay exp(-integral of lam(s) ds)
is absorbed per component before the explicit stages act.  The absorbed
integral is supplied in closed form by the caller, so no stiffness from
the absorbed part leaks into the error estimate.  Merson's stage times
are nondecreasing, so every decay factor points forward in time and is
bounded by 1 (no overflow for strongly damped components).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = ["MERSON", "if_rk_step", "StepControls", "StepFailure", "error_norm"]

# Kutta-Merson 4(3): order 4 solution, order 3 embedded error estimate.
_A = np.zeros((5, 5))
_A[1, 0] = 1 / 3
_A[2, 0], _A[2, 1] = 1 / 6, 1 / 6
_A[3, 0], _A[3, 2] = 1 / 8, 3 / 8
_A[4, 0], _A[4, 2], _A[4, 3] = 1 / 2, -3 / 2, 2.0
_C = np.array([0.0, 1 / 3, 1 / 3, 1 / 2, 1.0])
_B4 = np.array([1 / 6, 0.0, 0.0, 2 / 3, 1 / 6])
_B3 = np.array([1 / 10, 0.0, 3 / 10, 2 / 5, 1 / 5])

MERSON = {"A": _A, "c": _C, "b": _B4, "b_err": _B3, "order": 4, "err_order": 3}


class StepFailure(RuntimeError):
    """Raised when the controller cannot reach the requested accuracy."""

    def __init__(self, message: str, t: float):
        super().__init__(message)
        self.t = t


@dataclass
class StepControls:
    rtol: float = 1e-8
    atol: float = 1e-12
    safety: float = 0.9
    min_factor: float = 0.2
    max_factor: float = 5.0
    dt_min: float = 1e-12


def if_rk_step(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    decay: Callable[[float, float], "np.ndarray | float"],
    t: float,
    u: np.ndarray,
    dt: float,
):
    """One Kutta-Merson 4(3) step in Lawson (integrating-factor) form.

    Parameters
    ----------
    rhs : callable(t, u) -> du/dt
        Explicit part of the right-hand side (absorbed decay excluded).
    decay : callable(t0, t1) -> factor broadcastable to u
        Exact decay factor exp(-integral_{t0}^{t1} lam) per component,
        for t1 >= t0.
    t, u, dt :
        Current time, state, step size.

    Returns
    -------
    u4, err
        Fourth-order solution at t + dt and the embedded error vector.
    """
    c, A, b, berr = MERSON["c"], MERSON["A"], MERSON["b"], MERSON["b_err"]
    times = t + c * dt
    ks = []
    for i in range(5):
        ui = decay(t, times[i]) * u
        for j in range(i):
            if A[i, j] != 0.0:
                fac = 1.0 if times[j] == times[i] else decay(times[j], times[i])
                ui = ui + dt * A[i, j] * fac * ks[j]
        ks.append(rhs(times[i], ui))
    tend = t + dt
    u4 = decay(t, tend) * u
    err = np.zeros_like(u)
    for j in range(5):
        fac = 1.0 if times[j] == tend else decay(times[j], tend)
        if b[j] != 0.0:
            u4 = u4 + dt * b[j] * fac * ks[j]
        db = b[j] - berr[j]
        if db != 0.0:
            err = err + dt * db * fac * ks[j]
    return u4, err


def error_norm(err: np.ndarray, u_old: np.ndarray, u_new: np.ndarray, ctl: StepControls) -> float:
    """Scaled RMS norm of the embedded error (<= 1 means accept)."""
    scale = ctl.atol + ctl.rtol * np.maximum(np.abs(u_old), np.abs(u_new))
    return float(np.sqrt(np.mean(np.abs(err / scale) ** 2)))


def propose_dt(dt: float, errn: float, ctl: StepControls) -> float:
    """PI-free elementary controller: new dt from the embedded error."""
    if errn == 0.0:
        return dt * ctl.max_factor
    fac = ctl.safety * errn ** (-1.0 / (MERSON["err_order"] + 1))
    return dt * min(ctl.max_factor, max(ctl.min_factor, fac))
