"""Seeded generation of y-localized initial perturbations.

Data is a Gaussian envelope in y1 (so the periodic truncation of the
unbounded y direction is benign for widths well below Ly) times low-k
trigonometric content in x1, with amplitudes and phases drawn from a
seeded generator.  The triple (N, V1, V2) is rescaled to a prescribed
weighted Sobolev-type amplitude at t = 0.
"""
from __future__ import annotations

import numpy as np

from .grid import Grid, SpectralField, from_physical
from .params import PhysParams
from .solver import SimState

__all__ = ["make_initial_data", "weighted_h4_norm"]


def weighted_h4_norm(n_c: np.ndarray, v1_c: np.ndarray, v2_c: np.ndarray, grid: Grid) -> float:
    """sqrt(dxi * sum <k,xi>^8 (|Nhat|^2 + |V1hat|^2 + |V2hat|^2))."""
    w = (1.0 + grid.k.astype(float) ** 2 + grid.xi**2) ** 4
    s = np.sum(w * (np.abs(n_c) ** 2 + np.abs(v1_c) ** 2 + np.abs(v2_c) ** 2))
    return float(np.sqrt(grid.dxi * s))


def make_initial_data(
    grid: Grid,
    amplitude: float,
    params: PhysParams,
    seed: int = 0,
    width: float = 2.0,
    k_content: int = 2,
    family: str = "generic",
) -> SimState:
    """Build a SimState at t = 0 with the prescribed weighted amplitude.

    family "generic" populates all three fields; "velocity" leaves N = 0;
    "single_mode" puts one (k=1, xi=dxi*j) mode on V2 under the envelope,
    handy for linear-consistency checks.
    """
    if amplitude < 0:
        raise ValueError("amplitude must be >= 0")
    rng = np.random.default_rng(seed)
    Nx, My = grid.shape
    x = 2.0 * np.pi * np.arange(Nx) / Nx
    y = grid.Ly * np.arange(My) / My
    X, Y = np.meshgrid(x, y, indexing="ij")
    env = np.exp(-(((Y - 0.5 * grid.Ly) / width) ** 2))

    def trig_sum(include_k0=True):
        q = np.zeros_like(X)
        k0 = 0 if include_k0 else 1
        for k in range(k0, k_content + 1):
            a = rng.normal()
            ph = rng.uniform(0, 2 * np.pi)
            q += a * np.cos(k * X + ph)
        return q * env

    if family == "single_mode":
        n_p = np.zeros_like(X)
        v1_p = np.zeros_like(X)
        v2_p = np.cos(X) * env
    elif family == "velocity":
        n_p = np.zeros_like(X)
        v1_p = trig_sum()
        v2_p = trig_sum()
    elif family == "generic":
        n_p = trig_sum()
        v1_p = trig_sum()
        v2_p = trig_sum()
    else:
        raise ValueError(f"unknown initial-data family {family!r}")

    mask = grid.dealias_mask
    n_c = np.where(mask, from_physical(n_p, grid), 0.0)
    v1_c = np.where(mask, from_physical(v1_p, grid), 0.0)
    v2_c = np.where(mask, from_physical(v2_p, grid), 0.0)
    n_c[0, 0] = 0.0  # zero-mean density perturbation

    norm = weighted_h4_norm(n_c, v1_c, v2_c, grid)
    scale = amplitude / norm if norm > 0 and amplitude > 0 else 0.0
    if amplitude == 0.0:
        scale = 0.0
    return SimState(
        t=0.0,
        N=SpectralField(grid, scale * n_c, "N"),
        V1=SpectralField(grid, scale * v1_c, "V1"),
        V2=SpectralField(grid, scale * v2_c, "V2"),
        params=params,
        grid=grid,
    )
