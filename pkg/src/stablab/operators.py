"""Moving-frame differential operators as time-dependent Fourier symbols.

In the sheared coordinates (x1, y1) = (x - t*y, y) every x-frame operator
becomes a multiplier in (k, xi): the gradient is (i*k, i*(xi - k*t)) and
the Laplacian is -p with p = k^2 + (xi - k*t)^2.  The symbol operators
R1..R5 used by the weighted energy machinery are also evaluated here.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .grid import Grid, SpectralField

if TYPE_CHECKING:  # pragma: no cover
    from .multipliers import MultiplierEval

__all__ = [
    "FrameSymbol",
    "frame_symbol",
    "grad_tilde",
    "grad_perp_tilde",
    "div_tilde",
    "curl_tilde",
    "laplace_tilde",
    "inv_laplace_tilde",
    "r1",
    "r2",
    "r3",
    "r4",
    "r5",
    "apply_operator",
]


@dataclass(frozen=True)
class FrameSymbol:
    """p = k^2 + (xi - k*t)^2 and dtp = -2k(xi - k*t) on a grid at time t."""

    t: float
    p: np.ndarray
    dtp: np.ndarray


def frame_symbol(t: float, grid: Grid) -> FrameSymbol:
    """Evaluate p and its time derivative on the grid at time t."""
    eta = grid.xi - grid.k * t
    p = grid.k.astype(float) ** 2 + eta**2
    dtp = -2.0 * grid.k * eta
    return FrameSymbol(t=float(t), p=p, dtp=dtp)


def _shear_wavenumber(grid: Grid, t: float) -> np.ndarray:
    return grid.xi - grid.k * t


def grad_tilde(f: SpectralField, t: float) -> tuple[SpectralField, SpectralField]:
    """Moving-frame gradient: symbols (i*k, i*(xi - k*t))."""
    g = f.grid
    eta = _shear_wavenumber(g, t)
    return (
        f.with_coeffs(1j * g.k * f.coeffs, label=f"dx~{f.label}"),
        f.with_coeffs(1j * eta * f.coeffs, label=f"dy~{f.label}"),
    )


def grad_perp_tilde(f: SpectralField, t: float) -> tuple[SpectralField, SpectralField]:
    """Perp gradient (-(dy1 - t dx1), dx1): symbols (-i*(xi - k*t), i*k)."""
    g = f.grid
    eta = _shear_wavenumber(g, t)
    return (
        f.with_coeffs(-1j * eta * f.coeffs, label=f"perp1~{f.label}"),
        f.with_coeffs(1j * g.k * f.coeffs, label=f"perp2~{f.label}"),
    )


def div_tilde(v1: SpectralField, v2: SpectralField, t: float) -> SpectralField:
    """Moving-frame divergence of the vector (v1, v2)."""
    g = v1.grid
    eta = _shear_wavenumber(g, t)
    return v1.with_coeffs(1j * g.k * v1.coeffs + 1j * eta * v2.coeffs, label="D")


def curl_tilde(v1: SpectralField, v2: SpectralField, t: float) -> SpectralField:
    """Moving-frame curl: -(dy1 - t dx1)v1 + dx1 v2."""
    g = v1.grid
    eta = _shear_wavenumber(g, t)
    return v1.with_coeffs(-1j * eta * v1.coeffs + 1j * g.k * v2.coeffs, label="Omega")


def laplace_tilde(f: SpectralField, t: float) -> SpectralField:
    return f.with_coeffs(-frame_symbol(t, f.grid).p * f.coeffs)


def inv_laplace_tilde(f: SpectralField, t: float) -> SpectralField:
    """Inverse Laplacian: symbol -1/p, with the (0,0) mode zeroed."""
    p = frame_symbol(t, f.grid).p
    out = np.zeros_like(f.coeffs)
    np.divide(f.coeffs, -p, out=out, where=p > 0)
    return f.with_coeffs(out)


def r1(f: SpectralField, mult: "MultiplierEval") -> SpectralField:
    """Symbol m1^-1 m2^-1 phi^(-1/4)."""
    w = (mult.m1 * mult.m2) ** -1 * mult.phi**-0.25
    return f.with_coeffs(w * f.coeffs)


def r2(f: SpectralField, mult: "MultiplierEval") -> SpectralField:
    """Symbol m1^-1 m2^-1."""
    return f.with_coeffs(f.coeffs / (mult.m1 * mult.m2))


def r3(f: SpectralField, t: float) -> SpectralField:
    """Symbol dtp/p; zero wherever k = 0 (dtp vanishes there, (0,0) by convention)."""
    sym = frame_symbol(t, f.grid)
    out = np.zeros_like(f.coeffs)
    np.divide(sym.dtp * f.coeffs, sym.p, out=out, where=sym.p > 0)
    return f.with_coeffs(out)


def r4(f: SpectralField) -> SpectralField:
    """Symbol i*xi/|xi|, zero at xi = 0."""
    xi = f.grid.xi
    sign = np.sign(xi)
    return f.with_coeffs(1j * sign * f.coeffs)


def r5(v1: SpectralField, v2: SpectralField, t: float) -> SpectralField:
    """Vector -> p^(-1/2) * (div~ symbol): the operator Delta~^(-1/2) div~."""
    sym = frame_symbol(t, v1.grid)
    d = div_tilde(v1, v2, t).coeffs
    out = np.zeros_like(d)
    np.divide(d, np.sqrt(sym.p), out=out, where=sym.p > 0)
    return v1.with_coeffs(out, label="R5")


_SCALAR_OPS = {
    "grad_tilde",
    "grad_tilde_x",
    "grad_tilde_y",
    "laplace_tilde",
    "inv_laplace_tilde",
    "R1",
    "R2",
    "R3",
    "R4",
}
_VECTOR_OPS = {"div_tilde", "curl_tilde", "R5"}


def apply_operator(field, op: str, t: float = 0.0, mult: "MultiplierEval | None" = None):
    """Dispatch a named symbol operator.

    ``field`` is a SpectralField for scalar operators, or a (v1, v2) pair
    for div_tilde / curl_tilde / R5.  R1 and R2 require a MultiplierEval
    at the same time t.
    """
    if op in _VECTOR_OPS:
        v1, v2 = field
        if op == "div_tilde":
            return div_tilde(v1, v2, t)
        if op == "curl_tilde":
            return curl_tilde(v1, v2, t)
        return r5(v1, v2, t)
    if op not in _SCALAR_OPS:
        raise ValueError(f"unknown operator {op!r}")
    if op == "grad_tilde":
        return grad_tilde(field, t)
    if op == "grad_tilde_x":
        return grad_tilde(field, t)[0]
    if op == "grad_tilde_y":
        return grad_tilde(field, t)[1]
    if op == "laplace_tilde":
        return laplace_tilde(field, t)
    if op == "inv_laplace_tilde":
        return inv_laplace_tilde(field, t)
    if op == "R3":
        return r3(field, t)
    if op == "R4":
        return r4(field)
    if mult is None:
        raise ValueError(f"{op} requires a MultiplierEval")
    if abs(mult.t - t) > 1e-12 * max(1.0, abs(t)):
        raise ValueError(f"MultiplierEval time {mult.t} does not match t={t}")
    return r1(field, mult) if op == "R1" else r2(field, mult)
