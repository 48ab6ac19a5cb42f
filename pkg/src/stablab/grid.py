"""Truncated Fourier grids and spectral fields on T x [0, Ly).

A field q(x1, y1) is represented by complex mode amplitudes c(k, xi) with

    q(x1, y1) = sum_{k, xi} c(k, xi) exp(i k x1 + i xi y1),

where k runs over the integers {-Kmax, ..., Kmax} (the x-period is 2*pi)
and xi over dxi * {-My/2, ..., My/2 - 1} with dxi = 2*pi/Ly.  The array
layout is the standard FFT ordering on an (Nx, My) grid with Nx = 2*Kmax+1
(odd, so the k set is exactly symmetric).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Grid",
    "SpectralField",
    "make_grid",
    "to_physical",
    "from_physical",
    "dealiased_product",
    "field_l2",
    "coeff_l2",
]


@dataclass(frozen=True)
class Grid:
    """Wavenumber bookkeeping for a truncated Fourier representation.

    Attributes
    ----------
    Kmax : int
        Largest retained x-wavenumber; k in {-Kmax, ..., Kmax}.
    My : int
        Number of y modes (even); xi in dxi*{-My/2, ..., My/2-1}.
    Ly : float
        y-period; dxi = 2*pi/Ly.
    k : (Nx, 1) int array
        x-wavenumbers in FFT order.
    xi : (1, My) float array
        y-wavenumbers in FFT order.
    dealias_mask : (Nx, My) bool array
        True on modes kept by the 2/3 rule on both axes.
    """

    Kmax: int
    My: int
    Ly: float
    k: np.ndarray = field(repr=False)
    xi: np.ndarray = field(repr=False)
    dealias_mask: np.ndarray = field(repr=False)

    @property
    def dxi(self) -> float:
        return 2.0 * np.pi / self.Ly

    @property
    def Nx(self) -> int:
        return 2 * self.Kmax + 1

    @property
    def shape(self) -> tuple[int, int]:
        return (self.Nx, self.My)

    @property
    def area(self) -> float:
        return 2.0 * np.pi * self.Ly

    def compatible(self, other: "Grid") -> bool:
        return (
            self.Kmax == other.Kmax
            and self.My == other.My
            and self.Ly == other.Ly
        )


def make_grid(Kmax: int, My: int, Ly: float) -> Grid:
    """Build a Grid with the 2/3-rule dealias mask.

    Parameters
    ----------
    Kmax : int
        Max x-wavenumber, >= 1.
    My : int
        Number of y modes, even, >= 4.
    Ly : float
        y-period, > 0.
    """
    if Kmax < 1:
        raise ValueError(f"Kmax must be >= 1, got {Kmax}")
    if My < 4 or My % 2 != 0:
        raise ValueError(f"My must be an even integer >= 4, got {My}")
    if Ly <= 0:
        raise ValueError(f"Ly must be positive, got {Ly}")
    Nx = 2 * Kmax + 1
    k = np.rint(np.fft.fftfreq(Nx) * Nx).astype(int).reshape(Nx, 1)
    dxi = 2.0 * np.pi / Ly
    xi = (np.rint(np.fft.fftfreq(My) * My).astype(int) * dxi).reshape(1, My)
    kcut = (2 * Kmax) // 3
    xicut = (2.0 / 3.0) * (dxi * My / 2.0)
    mask = (np.abs(k) <= kcut) & (np.abs(xi) <= xicut + 1e-12 * dxi)
    for a in (k, xi, mask):
        a.setflags(write=False)
    return Grid(Kmax=Kmax, My=My, Ly=Ly, k=k, xi=xi, dealias_mask=mask)


@dataclass(frozen=True)
class SpectralField:
    """Complex mode amplitudes of a scalar field on a Grid.

    ``label`` tags the physical role (N, V1, V2, D, Omega, W); it is
    carried through operators for bookkeeping only.
    """

    grid: Grid
    coeffs: np.ndarray
    label: str = ""

    def __post_init__(self):
        if self.coeffs.shape != self.grid.shape:
            raise ValueError(
                f"coefficient shape {self.coeffs.shape} does not match grid {self.grid.shape}"
            )

    def with_coeffs(self, coeffs: np.ndarray, label: str | None = None) -> "SpectralField":
        return SpectralField(self.grid, coeffs, self.label if label is None else label)

    @classmethod
    def zeros(cls, grid: Grid, label: str = "") -> "SpectralField":
        return cls(grid, np.zeros(grid.shape, dtype=complex), label)

    @classmethod
    def from_physical(cls, grid: Grid, values: np.ndarray, label: str = "") -> "SpectralField":
        return cls(grid, from_physical(values, grid), label)

    def to_physical(self) -> np.ndarray:
        return to_physical(self.coeffs)

    def is_real_symmetric(self, tol: float = 1e-12) -> bool:
        """Check c(-k, -xi) == conj(c(k, xi)) within tol."""
        c = self.coeffs
        mirrored = np.conj(c[_mirror_index(c.shape[0])][:, _mirror_index(c.shape[1])])
        scale = max(np.max(np.abs(c)), 1e-300)
        return bool(np.max(np.abs(c - mirrored)) <= tol * scale)


def _mirror_index(n: int) -> np.ndarray:
    # index map realizing m -> -m in FFT ordering
    return (-np.arange(n)) % n


def to_physical(coeffs: np.ndarray) -> np.ndarray:
    """Evaluate the mode sum on the collocation grid (real part)."""
    n = coeffs.shape[0] * coeffs.shape[1]
    return np.real(np.fft.ifft2(coeffs) * n)


def from_physical(values: np.ndarray, grid: Grid) -> np.ndarray:
    """Mode amplitudes of gridded physical values."""
    if values.shape != grid.shape:
        raise ValueError(f"physical shape {values.shape} does not match grid {grid.shape}")
    return np.fft.fft2(values) / (grid.Nx * grid.My)


def dealiased_product(f: SpectralField, g: SpectralField) -> SpectralField:
    """Spectral coefficients of the pointwise product f*g, 2/3-rule dealiased.

    The mask is applied to both inputs before transforming and to the
    result, so the product is exact for band-limited inputs inside the
    retained band.
    """
    if not f.grid.compatible(g.grid):
        raise ValueError("grid mismatch in dealiased_product")
    grid = f.grid
    mask = grid.dealias_mask
    fp = to_physical(np.where(mask, f.coeffs, 0.0))
    gp = to_physical(np.where(mask, g.coeffs, 0.0))
    prod = from_physical(fp * gp, grid)
    return SpectralField(grid, np.where(mask, prod, 0.0), label=f"{f.label}*{g.label}")


def coeff_l2(coeffs: np.ndarray, grid: Grid) -> float:
    """dxi-weighted l2 norm of the coefficients: sqrt(dxi * sum |c|^2)."""
    return float(np.sqrt(grid.dxi * np.sum(np.abs(coeffs) ** 2)))


def field_l2(f: SpectralField) -> float:
    """Physical L2 norm over T x [0, Ly): sqrt(area * sum |c|^2)."""
    return float(np.sqrt(f.grid.area * np.sum(np.abs(f.coeffs) ** 2)))
