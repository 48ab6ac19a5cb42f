"""Closed-form Fourier multiplier weights and numerical audits of their bounds.

Three nondecreasing weights are attached to each mode (k, xi):

* ``phi``  ramps like p(t) inside the window [xi/k, xi/k + beta*nu^(-1/3)]
  around the critical time and is frozen outside it; it absorbs the
  transient growth driven by dtp/p.
* ``m1 = exp(2*atan(nu^(1/3)(t - xi/k)) + 2*atan(nu^(1/3) xi/k))`` encodes
  the enhanced-dissipation rate nu^(1/3).
* ``m2 = exp(A*atan(t - xi/k) + A*atan(xi/k))`` encodes inviscid damping.

All three equal 1 at k = 0 and at t = 0.  ``audit_inequalities`` checks
the uniform bounds and the two damping inequalities they are required to
satisfy, over a sampled (t, k, xi) set.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .grid import Grid

__all__ = [
    "MultiplierParams",
    "MultiplierEval",
    "phi",
    "m1",
    "m2",
    "dlog_multipliers",
    "audit_inequalities",
    "AuditReport",
    "InequalityResult",
]


@dataclass(frozen=True)
class MultiplierParams:
    """Parameters of the multiplier family.

    beta > 4 is required so that the admissible delta_beta interval
    (max(2/(beta*(beta^2-1)), 4/beta), 1] is nonempty.
    """

    beta: float = 5.0
    A: float = 10.0
    delta_beta: float = 0.9
    nu: float = 1e-2

    def __post_init__(self):
        if self.beta <= 4.0:
            raise ValueError(f"beta must be > 4, got {self.beta}")
        lo = max(2.0 / (self.beta * (self.beta**2 - 1.0)), 4.0 / self.beta)
        if not (lo < self.delta_beta <= 1.0):
            raise ValueError(
                f"delta_beta must lie in ({lo}, 1], got {self.delta_beta}"
            )
        if self.A <= 0:
            raise ValueError("A must be positive")
        if not (0.0 < self.nu <= 1.0):
            raise ValueError(f"nu must be in (0, 1], got {self.nu}")

    @property
    def window(self) -> float:
        """Ramp length beta * nu^(-1/3)."""
        return self.beta * self.nu ** (-1.0 / 3.0)

    @property
    def phi_max(self) -> float:
        """Exact upper endpoint of phi: 1 + beta^2 nu^(-2/3)."""
        return 1.0 + self.beta**2 * self.nu ** (-2.0 / 3.0)


def _ratio(k, xi):
    """xi/k where k != 0, else 0 (unused in that case)."""
    k = np.asarray(k, dtype=float)
    out = np.zeros(np.broadcast(k, np.asarray(xi, dtype=float)).shape)
    np.divide(np.broadcast_to(np.asarray(xi, dtype=float), out.shape), np.broadcast_to(k, out.shape), out=out, where=np.broadcast_to(k, out.shape) != 0)
    return out


def phi(t, k, xi, params: MultiplierParams):
    """Evaluate phi(t, k, xi) by its exact piecewise closed form.

    With r = xi/k, s = t - r, s0 = max(0, r) - r and L = beta*nu^(-1/3):
    phi = (1 + clip(s, s0, L)^2) / (1 + s0^2) when the window reaches
    t >= 0, else 1; and 1 identically for k = 0.
    """
    t = np.asarray(t, dtype=float)
    k_arr = np.asarray(k)
    r = _ratio(k_arr, xi)
    L = params.window
    s = t - r
    s0 = np.maximum(-r, 0.0)
    val = (1.0 + np.clip(s, s0, L) ** 2) / (1.0 + s0**2)
    out = np.where((k_arr != 0) & (r + L > 0.0), val, 1.0)
    return out if out.ndim else float(out)


def m1(t, k, xi, params: MultiplierParams):
    """Enhanced-dissipation weight, closed form; 1 at k = 0."""
    t = np.asarray(t, dtype=float)
    k_arr = np.asarray(k)
    r = _ratio(k_arr, xi)
    c = params.nu ** (1.0 / 3.0)
    val = np.exp(2.0 * np.arctan(c * (t - r)) + 2.0 * np.arctan(c * r))
    out = np.where(k_arr != 0, val, 1.0)
    return out if out.ndim else float(out)


def m2(t, k, xi, params: MultiplierParams):
    """Inviscid-damping weight, closed form; 1 at k = 0."""
    t = np.asarray(t, dtype=float)
    k_arr = np.asarray(k)
    r = _ratio(k_arr, xi)
    val = np.exp(params.A * np.arctan(t - r) + params.A * np.arctan(r))
    out = np.where(k_arr != 0, val, 1.0)
    return out if out.ndim else float(out)


def dlog_multipliers(t, k, xi, params: MultiplierParams):
    """Logarithmic time derivatives (d/dt log) of (phi, m1, m2).

    At the breakpoints of phi's piecewise definition the right-hand
    derivative is returned, so dlog_phi = dtp/p on [t0, t_end) and 0
    outside.
    """
    t = np.asarray(t, dtype=float)
    k_arr = np.asarray(k)
    nonzero = k_arr != 0
    r = _ratio(k_arr, xi)
    s = t - r
    c = params.nu ** (1.0 / 3.0)
    dlog_m1 = np.where(nonzero, 2.0 * c / (1.0 + (c * s) ** 2), 0.0)
    dlog_m2 = np.where(nonzero, params.A / (1.0 + s**2), 0.0)
    L = params.window
    t0 = np.maximum(r, 0.0)
    active = nonzero & (t >= t0) & (t - r < L) & (r + L > 0.0)
    # dtp/p = 2s/(1+s^2) for k != 0
    dlog_phi = np.where(active, 2.0 * s / (1.0 + s**2), 0.0)
    if dlog_phi.ndim:
        return dlog_phi, dlog_m1, dlog_m2
    return float(dlog_phi), float(dlog_m1), float(dlog_m2)


@dataclass(frozen=True)
class MultiplierEval:
    """phi, m1, m2 and their dlog values on a grid at a fixed time."""

    t: float
    params: MultiplierParams
    phi: np.ndarray
    m1: np.ndarray
    m2: np.ndarray
    dlog_phi: np.ndarray
    dlog_m1: np.ndarray
    dlog_m2: np.ndarray

    @classmethod
    def on_grid(cls, t: float, grid: Grid, params: MultiplierParams) -> "MultiplierEval":
        k, xi = grid.k, grid.xi
        dphi, dm1, dm2 = dlog_multipliers(t, k, xi, params)
        return cls(
            t=float(t),
            params=params,
            phi=phi(t, k, xi, params),
            m1=m1(t, k, xi, params),
            m2=m2(t, k, xi, params),
            dlog_phi=dphi,
            dlog_m1=dm1,
            dlog_m2=dm2,
        )


@dataclass
class InequalityResult:
    name: str
    min_slack: float
    min_lhs: float
    argmin: tuple[float, float, float]
    passed: bool

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "min_slack": self.min_slack,
            "min_lhs": self.min_lhs,
            "argmin": {"t": self.argmin[0], "k": self.argmin[1], "xi": self.argmin[2]},
            "pass": self.passed,
        }


@dataclass
class AuditReport:
    params: MultiplierParams
    n_samples: int
    results: list[InequalityResult]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def to_dict(self) -> dict:
        return {
            "params": {
                "beta": self.params.beta,
                "A": self.params.A,
                "delta_beta": self.params.delta_beta,
                "nu": self.params.nu,
            },
            "n_samples": self.n_samples,
            "pass": self.passed,
            "inequalities": [r.to_dict() for r in self.results],
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def _record(name, slack, lhs, T, K, XI, results, tol=0.0):
    i = int(np.argmin(slack))
    results.append(
        InequalityResult(
            name=name,
            min_slack=float(slack.flat[i]),
            min_lhs=float(lhs.flat[i]),
            argmin=(float(T.flat[i]), float(K.flat[i]), float(XI.flat[i])),
            passed=bool(slack.flat[i] >= -tol),
        )
    )


def audit_inequalities(
    t_samples: np.ndarray,
    k_samples: np.ndarray,
    xi_samples: np.ndarray,
    params: MultiplierParams,
) -> AuditReport:
    """Evaluate the multiplier inequalities over a sample grid.

    Checks, with slack = LHS - RHS recorded for each:

    a. phi >= 1
    b. phi <= 1 + beta^2 nu^(-2/3)  (the exact endpoint bound; the
       looser literature bound beta^2 nu^(-2/3) is reported separately)
    c. phi/p <= 1/k^2 on k != 0
    d1. delta*(dlog_m1 + nu*p) + dlog_phi - dtp/p >= delta*nu^(1/3)
    d2. delta*(dlog_m1 + nu^(1/3)) + dlog_phi - dtp/p >= delta/2*nu^(1/3)
    e. 1 <= m1 <= e^(2*pi), 1 <= m2 <= e^(A*pi)

    d1/d2 are restricted to k != 0 samples (they are trivial at k = 0).
    """
    t_samples = np.atleast_1d(np.asarray(t_samples, dtype=float))
    k_samples = np.atleast_1d(np.asarray(k_samples))
    xi_samples = np.atleast_1d(np.asarray(xi_samples, dtype=float))
    if t_samples.size == 0 or k_samples.size == 0 or xi_samples.size == 0:
        raise ValueError("audit sample set must be nonempty")

    T, K, XI = np.meshgrid(t_samples, k_samples, xi_samples, indexing="ij")
    ph = phi(T, K, XI, params)
    mm1 = m1(T, K, XI, params)
    mm2 = m2(T, K, XI, params)
    dphi, dm1, _ = dlog_multipliers(T, K, XI, params)

    results: list[InequalityResult] = []
    _record("phi_lower", ph - 1.0, ph, T, K, XI, results)
    _record("phi_upper_exact", params.phi_max - ph, ph, T, K, XI, results)
    # the literature states phi <= beta^2 nu^(-2/3); report it but do not gate on it
    lit = params.beta**2 * params.nu ** (-2.0 / 3.0) - ph
    _record("phi_upper_reported_bound", lit, ph, T, K, XI, results)
    results[-1].passed = True

    nz = K != 0
    if np.any(nz):
        s = T[nz] - XI[nz] / K[nz]
        p = K[nz].astype(float) ** 2 * (1.0 + s**2)
        dtp_over_p = 2.0 * s / (1.0 + s**2)
        Tn, Kn, XIn = T[nz], K[nz], XI[nz]

        slack_c = 1.0 / K[nz].astype(float) ** 2 - ph[nz] / p
        _record("phi_over_p", slack_c, ph[nz] / p, Tn, Kn, XIn, results, tol=1e-15)

        d = params.delta_beta
        nu13 = params.nu ** (1.0 / 3.0)
        lhs1 = d * (dm1[nz] + params.nu * p) + dphi[nz] - dtp_over_p
        _record("damping_line1", lhs1 - d * nu13, lhs1, Tn, Kn, XIn, results)
        lhs2 = d * (dm1[nz] + nu13) + dphi[nz] - dtp_over_p
        _record("damping_line2", lhs2 - 0.5 * d * nu13, lhs2, Tn, Kn, XIn, results)

    _record("m1_lower", mm1 - 1.0, mm1, T, K, XI, results, tol=1e-12)
    _record("m1_upper", math.exp(2 * math.pi) - mm1, mm1, T, K, XI, results)
    _record("m2_lower", mm2 - 1.0, mm2, T, K, XI, results, tol=1e-9)
    _record("m2_upper", math.exp(params.A * math.pi) - mm2, mm2, T, K, XI, results)

    return AuditReport(params=params, n_samples=int(T.size), results=results)
