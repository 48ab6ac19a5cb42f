"""Weighted spectral unknowns, energy/dissipation functionals, decay fits.

The diagnostics weight each mode by the multiplier combination
m1^-1 m2^-1 (phi^(-1/4) on the compressible pair), a bracket factor
<k,xi>^(s-j) with <k,xi> = (1 + k^2 + xi^2)^(1/2), and powers of
p = k^2 + (xi - k t)^2, for derivative counts 0 <= j <= s <= 3.  At k = 0
all multipliers equal 1 and the (j, s-j) weights collapse to the (0, s)
ones; the k = 0 rows are built directly from the collapsed form so the
collapse identity holds exactly.

Six quadratic families are accumulated from these unknowns (a low- and a
high-order compressible pair plus an incompressible one, each with its
dissipation counterpart) and combined into the totals E(t), D(t) with
configurable weights.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .grid import Grid, SpectralField
from .multipliers import MultiplierEval, MultiplierParams
from .operators import frame_symbol
from .params import PhysParams

__all__ = [
    "EnergyWeights",
    "WeightedUnknowns",
    "weighted_unknowns",
    "energy_family",
    "total_energy",
    "EnergyReport",
    "DecayFit",
    "fit_decay",
    "zero_mode_norms",
]

S_MAX = 3


@dataclass(frozen=True)
class EnergyWeights:
    """Weights of the composite functionals.

    c[j] multiplies the j-th derivative-level pair (scaled by mu^(2j/3));
    delta1_t and delta2_t weight the incompressible and high-order
    compressible families.  ``deltas`` (delta_1..delta_6) are the
    auxiliary-functional constants; they are carried in configuration and
    echoed in reports but the auxiliary cross-term functionals themselves
    are not computed here.
    """

    c: tuple[float, float, float, float] = (1.0, 0.25, 0.0625, 0.015625)
    delta1_t: float = 0.1
    delta2_t: float = 0.1
    deltas: tuple[float, ...] = (0.05,) * 6
    C1: float = 1.0

    def __post_init__(self):
        if len(self.c) != 4 or any(cj <= 0 for cj in self.c):
            raise ValueError("c must be four positive weights")
        if self.delta1_t <= 0 or self.delta2_t <= 0 or any(d <= 0 for d in self.deltas):
            raise ValueError("all delta weights must be positive")
        for j in range(1, 4):
            if self.c[j] > self.C1 * self.c[j - 1]:
                raise ValueError(f"c[{j}] must be <= C1 * c[{j-1}]")


@dataclass
class WeightedUnknowns:
    """Arrays of the weighted unknowns, indexed [j, s] for 0 <= j <= s <= 3.

    Entries with j > s are zero.  N_lo/U_lo carry the extra phi^(-1/4)
    weight; W_in, N_hi (one extra p^(1/2) on N) and D_hi do not.
    """

    t: float
    grid: Grid
    N_lo: np.ndarray
    U_lo: np.ndarray
    W_in: np.ndarray
    N_hi: np.ndarray
    D_hi: np.ndarray
    mult_params: MultiplierParams
    p: np.ndarray


def weighted_unknowns(
    fields: tuple[SpectralField, SpectralField, SpectralField],
    t: float,
    mult: MultiplierEval,
) -> WeightedUnknowns:
    """Build all weighted unknowns from spectral (N, D, W) at time t."""
    Nf, Df, Wf = fields
    grid = Nf.grid
    if not (grid.compatible(Df.grid) and grid.compatible(Wf.grid)):
        raise ValueError("fields must share one grid")
    if abs(mult.t - t) > 1e-12 * max(1.0, abs(t)):
        raise ValueError(f"MultiplierEval at t={mult.t} does not match fields at t={t}")

    p = frame_symbol(t, grid).p
    base = 1.0 / (mult.m1 * mult.m2)
    phiw = mult.phi ** -0.25
    br = np.sqrt(1.0 + grid.k.astype(float) ** 2 + grid.xi**2)

    shape = (S_MAX + 1, S_MAX + 1) + grid.shape
    N_lo = np.zeros(shape, dtype=complex)
    U_lo = np.zeros(shape, dtype=complex)
    W_in = np.zeros(shape, dtype=complex)
    N_hi = np.zeros(shape, dtype=complex)
    D_hi = np.zeros(shape, dtype=complex)

    sqrt_p = np.sqrt(p)
    inv_sqrt_p = np.zeros_like(p)
    np.divide(1.0, sqrt_p, out=inv_sqrt_p, where=p > 0)

    for j in range(S_MAX + 1):
        pj = p ** (0.5 * j)
        for s in range(j, S_MAX + 1):
            bw = br ** (s - j)
            N_lo[j, s] = base * phiw * bw * pj * Nf.coeffs
            U_lo[j, s] = base * phiw * bw * pj * inv_sqrt_p * Df.coeffs
            W_in[j, s] = base * bw * pj * Wf.coeffs
            N_hi[j, s] = base * bw * pj * sqrt_p * Nf.coeffs
            D_hi[j, s] = base * bw * pj * Df.coeffs

    # k = 0 rows: multipliers are 1 and the (j, s-j) weights collapse to
    # the (0, s) form; build them directly so the identity is exact.
    br0 = np.sqrt(1.0 + grid.xi[0] ** 2)
    absxi = np.abs(grid.xi[0])
    inv_absxi = np.zeros_like(absxi)
    np.divide(1.0, absxi, out=inv_absxi, where=absxi > 0)
    for s in range(S_MAX + 1):
        bws = br0**s
        n0 = bws * Nf.coeffs[0]
        u0 = bws * inv_absxi * Df.coeffs[0]
        w0 = bws * Wf.coeffs[0]
        n1 = bws * absxi * Nf.coeffs[0]
        d0 = bws * Df.coeffs[0]
        for j in range(s + 1):
            N_lo[j, s][0] = n0
            U_lo[j, s][0] = u0
            W_in[j, s][0] = w0
            N_hi[j, s][0] = n1
            D_hi[j, s][0] = d0

    return WeightedUnknowns(
        t=float(t), grid=grid, N_lo=N_lo, U_lo=U_lo, W_in=W_in, N_hi=N_hi,
        D_hi=D_hi, mult_params=mult.params, p=p,
    )


def _sq(a: np.ndarray) -> np.ndarray:
    return np.abs(a) ** 2


def energy_family(
    which: str,
    j: int,
    wu: WeightedUnknowns,
    phys: PhysParams,
) -> tuple[float, float]:
    """One (E_{j,3-j}, D_{j,3-j}) pair for which in {com_l, in, com}.

    xi-integrals are dxi-weighted sums over the grid; the dissipation
    adds mu*p under the norms, the (mu^(1/3) + A k^2/p) weight on k != 0
    modes, and for the compressible pairs the (3-j)*mu zero-mode density
    term summed over s = j+1..3.
    """
    if not 0 <= j <= S_MAX:
        raise ValueError(f"j must be in 0..3, got {j}")
    grid, p = wu.grid, wu.p
    dxi = grid.dxi
    mu = phys.mu
    A = wu.mult_params.A
    knz = (grid.k != 0)
    diss_w = np.zeros_like(p)
    np.divide(grid.k.astype(float) ** 2, p, out=diss_w, where=p > 0)
    diss_w = (mu ** (1.0 / 3.0) + A * diss_w) * knz

    if which == "com_l":
        pair = (wu.N_lo, wu.U_lo)
        zero_mode_of = wu.N_lo
        diss_p_on = (wu.U_lo,)
    elif which == "in":
        pair = (wu.W_in,)
        zero_mode_of = None
        diss_p_on = (wu.W_in,)
    elif which == "com":
        pair = (wu.N_hi, wu.D_hi)
        zero_mode_of = wu.N_hi
        diss_p_on = (wu.D_hi,)
    else:
        raise ValueError(f"unknown family {which!r}")

    E = 0.0
    D = 0.0
    for s in range(j, S_MAX + 1):
        sq_sum = sum(_sq(a[j, s]) for a in pair)
        E += dxi * float(np.sum(sq_sum))
        D += dxi * float(np.sum(diss_w * sq_sum))
        for a in diss_p_on:
            D += mu * dxi * float(np.sum(p * _sq(a[j, s])))
    if zero_mode_of is not None:
        for s in range(j + 1, S_MAX + 1):
            D += (3 - j) * mu * dxi * float(np.sum(_sq(zero_mode_of[j, s][0])))
    return E, D


def total_energy(
    wu: WeightedUnknowns,
    phys: PhysParams,
    weights: EnergyWeights,
) -> tuple[float, float]:
    """Composite (E, D): sum_j c_j mu^(2j/3) (com_l + d1*in + d2*mu^(5/3)*com)."""
    mu = phys.mu
    E = 0.0
    D = 0.0
    for j in range(S_MAX + 1):
        e_cl, d_cl = energy_family("com_l", j, wu, phys)
        e_in, d_in = energy_family("in", j, wu, phys)
        e_c, d_c = energy_family("com", j, wu, phys)
        w = weights.c[j] * mu ** (2.0 * j / 3.0)
        E += w * (e_cl + weights.delta1_t * e_in + weights.delta2_t * mu ** (5.0 / 3.0) * e_c)
        D += w * (d_cl + weights.delta1_t * d_in + weights.delta2_t * mu ** (5.0 / 3.0) * d_c)
    return E, D


_FAMILY_COLUMNS = [
    f"{lead}_{fam}_{j}"
    for fam in ("com_l", "in", "com")
    for lead in ("E", "D")
    for j in range(S_MAX + 1)
]


@dataclass
class EnergyReport:
    """All functional families at sampled times, plus totals and int_D."""

    times: np.ndarray
    columns: dict[str, np.ndarray]
    weights: EnergyWeights
    mult_params: MultiplierParams

    @classmethod
    def from_samples(
        cls,
        samples: list[tuple[float, WeightedUnknowns]],
        phys: PhysParams,
        weights: EnergyWeights,
    ) -> "EnergyReport":
        times = np.array([t for t, _ in samples])
        cols: dict[str, list[float]] = {name: [] for name in _FAMILY_COLUMNS}
        cols["E_total"] = []
        cols["D_total"] = []
        mp = samples[0][1].mult_params if samples else MultiplierParams()
        for _, wu in samples:
            for fam in ("com_l", "in", "com"):
                for j in range(S_MAX + 1):
                    e, d = energy_family(fam, j, wu, phys)
                    cols[f"E_{fam}_{j}"].append(e)
                    cols[f"D_{fam}_{j}"].append(d)
            e_tot, d_tot = total_energy(wu, phys, weights)
            cols["E_total"].append(e_tot)
            cols["D_total"].append(d_tot)
        arrays = {k: np.array(v) for k, v in cols.items()}
        if times.size >= 2:
            arrays["int_D"] = np.concatenate(
                [[0.0], np.cumsum(np.diff(times) * 0.5 * (arrays["D_total"][1:] + arrays["D_total"][:-1]))]
            )
        else:
            arrays["int_D"] = np.zeros_like(times)
        return cls(times=times, columns=arrays, weights=weights, mult_params=mp)

    def to_rows(self) -> tuple[list[str], list[list[float]]]:
        header = ["t"] + list(self.columns.keys())
        rows = [
            [float(self.times[i])] + [float(self.columns[c][i]) for c in self.columns]
            for i in range(self.times.size)
        ]
        return header, rows


@dataclass
class DecayFit:
    """Result of fitting (1+t)^sigma e^(-c t) or (1 + a t)^sigma to a series."""

    model: str
    rate: float
    sigma: float
    prefactor: float
    window: tuple[float, float]
    r2: float
    n_points: int

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "rate": self.rate,
            "sigma": self.sigma,
            "prefactor": self.prefactor,
            "window": list(self.window),
            "r2": self.r2,
            "n_points": self.n_points,
        }


def _r2(y: np.ndarray, yhat: np.ndarray) -> float:
    sst = float(np.sum((y - np.mean(y)) ** 2))
    sse = float(np.sum((y - yhat) ** 2))
    if sst == 0.0:
        return 1.0 if sse <= 1e-28 else 0.0
    return 1.0 - sse / sst


def fit_decay(
    series,
    model: str = "exp_rate",
    window: tuple[float, float] | None = None,
    sigma: float | None = 0.5,
    a: float | None = None,
) -> DecayFit:
    """Least-squares decay fit on log(value).

    model "exp_rate" fits value = C (1+t)^sigma exp(-c t); sigma may be
    fixed (pass a float) or fitted (pass None).  model "power" fits
    value = C (1 + a t)^sigma; ``a`` may be fixed or fitted by 1-D
    search, sigma fixed or fitted.  Requires >= 8 positive samples in the
    window.
    """
    pts = np.asarray([(float(t), float(v)) for t, v in series])
    if window is None:
        window = (float(pts[0, 0]), float(pts[-1, 0]))
    t1, t2 = window
    if not t1 < t2:
        raise ValueError("degenerate fit window")
    sel = (pts[:, 0] >= t1 - 1e-12) & (pts[:, 0] <= t2 + 1e-12)
    t = pts[sel, 0]
    v = pts[sel, 1]
    if t.size < 8:
        raise ValueError(f"need >= 8 samples in window, got {t.size}")
    if np.any(v <= 0):
        raise ValueError("series values must be positive in the fit window")
    y = np.log(v)

    if model == "exp_rate":
        if sigma is None:
            X = np.column_stack([np.ones_like(t), np.log1p(t), -t])
            coef, *_ = np.linalg.lstsq(X, y, rcond=None)
            logC, sig, c = coef
        else:
            sig = float(sigma)
            X = np.column_stack([np.ones_like(t), -t])
            coef, *_ = np.linalg.lstsq(X, y - sig * np.log1p(t), rcond=None)
            logC, c = coef
        yhat = logC + sig * np.log1p(t) - c * t
        return DecayFit("exp_rate", float(c), float(sig), float(np.exp(logC)),
                        (t1, t2), _r2(y, yhat), int(t.size))

    if model == "power":
        def sse_of(log_a: float):
            aa = 10.0**log_a
            reg = np.log1p(aa * t)
            if sigma is None:
                X = np.column_stack([np.ones_like(t), reg])
                coef, *_ = np.linalg.lstsq(X, y, rcond=None)
                logC, sig_ = coef
            else:
                sig_ = float(sigma)
                logC = float(np.mean(y - sig_ * reg))
            yhat = logC + sig_ * reg
            return float(np.sum((y - yhat) ** 2)), (logC, sig_, yhat)

        if a is not None:
            aa = float(a)
            _, (logC, sig_, yhat) = sse_of(math.log10(aa))
        else:
            from scipy.optimize import minimize_scalar

            tspan = max(t2 - t1, 1e-30)
            res = minimize_scalar(
                lambda la: sse_of(la)[0],
                bounds=(math.log10(1e-8 / tspan), math.log10(1e8 / tspan)),
                method="bounded",
                options={"xatol": 1e-12},
            )
            aa = 10.0**res.x
            _, (logC, sig_, yhat) = sse_of(res.x)
        return DecayFit("power", float(aa), float(sig_), float(np.exp(logC)),
                        (t1, t2), _r2(y, yhat), int(t.size))

    raise ValueError(f"unknown model {model!r}")


def zero_mode_norms(state) -> tuple[float, float, float]:
    """(||P0 dy N||, ||P0 D||, ||P0 dy Omega||) of a simulation state.

    Norms are dxi-weighted l2 sums over the k = 0 row (P0 projects onto
    the x-average; dy is the i*xi symbol there).
    """
    from .solver import extract_ndw

    Nf, Df, Of, _ = extract_ndw(state)
    grid = Nf.grid
    xi = grid.xi[0]
    dxi = grid.dxi

    def norm(coeff_row, weight):
        return float(np.sqrt(dxi * np.sum(np.abs(weight * coeff_row) ** 2)))

    return (
        norm(Nf.coeffs[0], xi),
        norm(Df.coeffs[0], 1.0),
        norm(Of.coeffs[0], xi),
    )
