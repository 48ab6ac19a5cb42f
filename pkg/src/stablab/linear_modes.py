"""Per-mode integration of the linearized moving-frame system.

For each wavenumber pair (k, xi) the Fourier amplitudes of density,
divergence and the good unknown W = Omega + N - mu*D obey a closed 3x3
ODE system with time-dependent coefficients built from
p(t) = k^2 + (xi - k t)^2.  This module integrates single modes, provides
the exactly solvable one-component toy reduction used as an oracle, and
runs growth/decay envelope scans over families of modes.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .params import PhysParams
from .stepping import StepControls, StepFailure, error_norm, if_rk_step, propose_dt

__all__ = [
    "ModeState",
    "ModeTrajectory",
    "linear_rhs",
    "integrate_mode",
    "toy_exact",
    "toy_rhs",
    "p_integral",
    "envelope_scan",
    "EnvelopeScanResult",
]


def p_of(t, k, xi):
    return float(k) ** 2 + (xi - k * t) ** 2


def dtp_of(t, k, xi):
    return -2.0 * k * (xi - k * t)


def p_integral(t, k, xi):
    """Closed form of integral_0^t p(s) ds."""
    if k == 0:
        return xi**2 * t
    return k**2 * t + (xi**3 - (xi - k * t) ** 3) / (3.0 * k)


@dataclass(frozen=True)
class ModeState:
    """Complex (Nhat, Dhat, What) amplitudes at a fixed mode and time."""

    Nhat: complex
    Dhat: complex
    What: complex
    k: int
    xi: float
    t: float = 0.0

    def __post_init__(self):
        for z in (self.Nhat, self.Dhat, self.What):
            if not np.isfinite(z):
                raise ValueError("mode state components must be finite")

    def as_vector(self) -> np.ndarray:
        return np.array([self.Nhat, self.Dhat, self.What], dtype=complex)


@dataclass
class ModeTrajectory:
    """Sampled history of one mode, with the norms used by the scans.

    abs_U is p^(-1/2)|Dhat|, the compressible-velocity amplitude.
    """

    k: int
    xi: float
    times: np.ndarray
    N: np.ndarray
    D: np.ndarray
    W: np.ndarray
    abs_U: np.ndarray = field(init=False)

    def __post_init__(self):
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("sample times must be strictly increasing")
        p = np.array([p_of(t, self.k, self.xi) for t in self.times])
        with np.errstate(divide="ignore", invalid="ignore"):
            u = np.abs(self.D) / np.sqrt(p)
        self.abs_U = np.where(p > 0, u, 0.0)

    def state_at(self, i: int) -> ModeState:
        return ModeState(
            Nhat=complex(self.N[i]),
            Dhat=complex(self.D[i]),
            What=complex(self.W[i]),
            k=self.k,
            xi=self.xi,
            t=float(self.times[i]),
        )


def linear_rhs(state: ModeState, params: PhysParams) -> tuple[complex, complex, complex]:
    """Time derivative of (Nhat, Dhat, What) for the zero-forcing system.

    The k = 0 convention zeroes the k^2/p and dtp/p coefficients (both
    vanish identically there, including at the (0, 0) mode where p = 0).
    """
    k, xi, t = state.k, state.xi, state.t
    mu, nu = params.mu, params.nu
    p = p_of(t, k, xi)
    if k != 0:
        k2_over_p = k**2 / p
        dtp_over_p = dtp_of(t, k, xi) / p
    else:
        k2_over_p = 0.0
        dtp_over_p = 0.0
    N, D, W = state.Nhat, state.Dhat, state.What
    lift = W - N + mu * D
    dN = -D
    dD = dtp_over_p * D - 2.0 * k2_over_p * lift + p * N - nu * p * D
    dW = -mu * p * W + mu * (mu + params.mu_prime) * p * D - mu * dtp_over_p * D + 2.0 * mu * k2_over_p * lift
    return dN, dD, dW


def _rhs_vector(t, y, k, xi, params: PhysParams, include_diag: bool = True):
    """Vectorized right-hand side; y = [N, D, W] stacked over modes."""
    k = np.asarray(k)
    xi = np.asarray(xi)
    m = y.shape[0] // 3
    N, D, W = y[:m], y[m : 2 * m], y[2 * m :]
    mu, nu = params.mu, params.nu
    eta = xi - k * t
    p = k.astype(float) ** 2 + eta**2
    nzk = k != 0
    with np.errstate(divide="ignore", invalid="ignore"):
        k2_over_p = np.where(nzk, k.astype(float) ** 2 / p, 0.0)
        dtp_over_p = np.where(nzk, -2.0 * k * eta / p, 0.0)
    lift = W - N + mu * D
    dN = -D
    dD = dtp_over_p * D - 2.0 * k2_over_p * lift + p * N
    dW = mu * (mu + params.mu_prime) * p * D - mu * dtp_over_p * D + 2.0 * mu * k2_over_p * lift
    if include_diag:
        dD = dD - nu * p * D
        dW = dW - mu * p * W
    return np.concatenate([dN, dD, dW])


def integrate_mode(
    k: int,
    xi: float,
    init: ModeState,
    t_end: float,
    rtol: float = 1e-8,
    atol: float = 1e-12,
    params: PhysParams | None = None,
    t_eval: np.ndarray | None = None,
    method: str = "RK45",
) -> ModeTrajectory:
    """Integrate one mode of the linear system adaptively.

    ``method`` is a scipy solver name ("RK45", "DOP853") or
    "if_merson" for the integrating-factor Kutta-Merson scheme, which
    absorbs exp(-nu*I_p) / exp(-mu*I_p) on D / W exactly and removes the
    diffusive stiffness for long-time runs.
    """
    if params is None:
        raise ValueError("params is required")
    if t_end <= init.t:
        raise ValueError("t_end must exceed the initial time")
    if rtol <= 0 or atol < 0:
        raise ValueError("tolerances must be positive")
    if t_eval is None:
        t_eval = np.linspace(init.t, t_end, 201)
    y0 = init.as_vector()

    if method == "if_merson":
        ys = _integrate_if_merson(k, xi, y0, init.t, np.asarray(t_eval, dtype=float), params, rtol, atol)
    else:
        sol = solve_ivp(
            _rhs_vector,
            (init.t, t_end),
            y0,
            t_eval=t_eval,
            rtol=rtol,
            atol=atol,
            method=method,
            args=(np.array([k]), np.array([xi]), params),
        )
        if not sol.success:
            raise StepFailure(f"mode integration failed: {sol.message}", t=float(sol.t[-1]) if sol.t.size else init.t)
        if not np.all(np.isfinite(sol.y)):
            raise StepFailure("NaN detected in mode integration", t=float(sol.t[-1]))
        ys = sol.y
    return ModeTrajectory(k=k, xi=xi, times=np.asarray(t_eval, dtype=float), N=ys[0], D=ys[1], W=ys[2])


def _integrate_if_merson(k, xi, y0, t0, t_eval, params: PhysParams, rtol, atol):
    """Integrating-factor Merson integration of one mode, dense at t_eval."""
    nu, mu = params.nu, params.mu

    def decay(ta, tb):
        dI = p_integral(tb, k, xi) - p_integral(ta, k, xi)
        return np.array([1.0, np.exp(-nu * dI), np.exp(-mu * dI)])

    def rhs(t, y):
        return _rhs_vector(t, y.reshape(3, 1).ravel(), np.array([k]), np.array([xi]), params, include_diag=False)

    ctl = StepControls(rtol=rtol, atol=atol)
    out = np.empty((3, t_eval.size), dtype=complex)
    t, y = float(t0), y0.astype(complex)
    i = 0
    if t_eval[0] == t0:
        out[:, 0] = y
        i = 1
    dt = min(0.1, (t_eval[-1] - t0) / 10)
    while i < t_eval.size:
        target = t_eval[i]
        h = min(dt, target - t)
        y_new, err = if_rk_step(rhs, decay, t, y, h)
        errn = error_norm(err, y, y_new, ctl)
        if errn <= 1.0:
            t, y = t + h, y_new
            if not np.all(np.isfinite(y)):
                raise StepFailure("NaN detected in mode integration", t=t)
            if abs(t - target) <= 1e-12 * max(1.0, abs(target)):
                out[:, i] = y
                i += 1
        dt = propose_dt(h, errn, ctl)
        if dt < ctl.dt_min:
            raise StepFailure("step size underflow", t=t)
    return out


def toy_rhs(t: float, D: complex, k: int, xi: float, nu: float) -> complex:
    """Right-hand side of the one-component toy reduction."""
    p = p_of(t, k, xi)
    return (dtp_of(t, k, xi) / p) * D - nu * p * D


def toy_exact(t, k: int, xi: float, nu: float, D0: complex):
    """Exact toy-model solution D0 * (p(t)/p(0)) * exp(-nu*I_p(t)).

    I_p(t) = k^2 t + (xi^3 - (xi - k t)^3)/(3 k) in closed form; k = 0 is
    rejected (the toy reduction concerns sheared modes only).
    """
    if k == 0:
        raise ValueError("toy model requires k != 0")
    t = np.asarray(t, dtype=float)
    p0 = p_of(0.0, k, xi)
    p = float(k) ** 2 + (xi - k * t) ** 2
    Ip = k**2 * t + (xi**3 - (xi - k * t) ** 3) / (3.0 * k)
    out = D0 * (p / p0) * np.exp(-nu * Ip)
    return out if out.ndim else complex(out)


@dataclass
class EnvelopeScanResult:
    """Amplification and fitted tail rate for one viscosity value."""

    mu: float
    k: int
    family: str
    times: np.ndarray
    env_W: np.ndarray
    env_NU: np.ndarray
    amp_W: float
    amp_NU: float
    rate: float
    fit_r2: float
    fit_window: tuple[float, float]
    failures: list[str] = field(default_factory=list)

    def row(self) -> dict:
        return {
            "mu": self.mu,
            "k": self.k,
            "family": self.family,
            "amp_W": self.amp_W,
            "amp_NU": self.amp_NU,
            "rate": self.rate,
            "fit_r2": self.fit_r2,
        }


def _init_family(family: str, k: int, xi: float) -> np.ndarray:
    """Unit t=0 weighted-norm initial data (N, D, W) for one mode."""
    p0 = p_of(0.0, k, xi)
    if family == "W":
        return np.array([0.0, 0.0, 1.0], dtype=complex)
    if family == "N":
        return np.array([1.0, 0.0, 0.0], dtype=complex)
    if family == "equi":
        # equal shares for |N|, |U| = p^(-1/2)|D|, |W|
        s = 1.0 / np.sqrt(3.0)
        return np.array([s, s * np.sqrt(p0), s], dtype=complex)
    raise ValueError(f"unknown init family {family!r}")


def envelope_scan(
    mu_list: Sequence[float],
    k: int,
    xi_values: Sequence[float],
    init_family: str = "W",
    t_end: float | Callable[[float], float] | None = None,
    mu_prime_ratio: float = 0.0,
    n_out: int = 400,
    rtol: float = 1e-9,
    atol: float = 1e-16,
    tail_fraction: float = 0.5,
) -> list[EnvelopeScanResult]:
    """Sup-over-modes amplification and tail decay rates across viscosities.

    All modes (k, xi) for xi in ``xi_values`` are integrated as one
    stacked system per viscosity.  The envelope is the sup over xi of the
    per-mode norms at each output time; the tail rate is a pure
    exponential fit of log(env_W) over the tail of the run, starting at
    the envelope maximum plus ``tail_fraction`` of the remaining span.

    ``t_end`` defaults to max(0, xi/k) + 6*mu^(-1/3), the enhanced
    dissipation horizon past the last critical time.
    """
    from .energy import fit_decay

    xi_arr = np.asarray(list(xi_values), dtype=float)
    m = xi_arr.size
    kk = np.full(m, k, dtype=int)
    results: list[EnvelopeScanResult] = []
    for mu in mu_list:
        if not (0.0 < mu <= 1.0):
            raise ValueError("all mu must lie in (0, 1]")
        params = PhysParams(mu=mu, mu_prime=mu_prime_ratio * mu)
        t_crit_max = max(0.0, float(np.max(xi_arr)) / k)
        if t_end is None:
            T = t_crit_max + 6.0 * mu ** (-1.0 / 3.0)
        elif callable(t_end):
            T = float(t_end(mu))
        else:
            T = float(t_end)
        times = np.linspace(0.0, T, n_out)
        y0 = np.concatenate(
            [np.array([_init_family(init_family, k, x)[c] for x in xi_arr]) for c in range(3)]
        )
        failures: list[str] = []
        sol = solve_ivp(
            _rhs_vector,
            (0.0, T),
            y0,
            t_eval=times,
            rtol=rtol,
            atol=atol,
            method="RK45",
            args=(kk, xi_arr, params),
        )
        if not sol.success:
            failures.append(str(sol.message))
        N = sol.y[:m]
        D = sol.y[m : 2 * m]
        W = sol.y[2 * m :]
        eta = xi_arr[:, None] - k * times[None, :]
        p = float(k) ** 2 + eta**2
        U = np.abs(D) / np.sqrt(p)
        env_W = np.max(np.abs(W), axis=0)
        env_NU = np.max(np.sqrt(np.abs(N) ** 2 + U**2), axis=0)

        ref_W = env_W[0] if env_W[0] > 0 else np.max(env_W)
        ref_NU = env_NU[0] if env_NU[0] > 0 else np.max(env_NU)
        i_star = int(np.argmax(env_W))
        t_star = times[i_star]
        t1 = t_star + tail_fraction * (T - t_star)
        fit = fit_decay(
            list(zip(times, env_W)),
            model="exp_rate",
            window=(t1, T),
            sigma=0.0,
        )
        results.append(
            EnvelopeScanResult(
                mu=mu,
                k=k,
                family=init_family,
                times=times,
                env_W=env_W,
                env_NU=env_NU,
                amp_W=float(np.max(env_W) / ref_W),
                amp_NU=float(np.max(env_NU) / ref_NU),
                rate=fit.rate,
                fit_r2=fit.r2,
                fit_window=(float(t1), float(T)),
                failures=failures,
            )
        )
    return results
