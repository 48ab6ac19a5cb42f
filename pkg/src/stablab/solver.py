"""Dealiased pseudospectral integration of the nonlinear perturbation system.

The primitive unknowns (N, V1, V2) evolve in the sheared frame; all
derivatives are time-dependent Fourier symbols and every product is
formed pointwise in physical space under the 2/3-rule mask.  The mass
equation is stepped in divergence form, so the (0,0) mode of N is
conserved to rounding.  Time stepping is an adaptive Kutta-Merson 4(3)
pair in integrating-factor form: the isotropic viscous decay
exp(-mu * integral p) is applied exactly per mode and everything else is
explicit, with a stability cap on dt from the currently active modes.

Once the x-dependent modes have decayed below a configurable threshold
relative to the x-averaged flow, they are zeroed and the run continues on
the exactly invariant streak subspace (k = 0), whose symbols do not grow
with time; this keeps long horizons affordable.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import Grid, SpectralField, coeff_l2, from_physical, to_physical
from .params import PhysParams
from .stepping import StepControls, StepFailure, error_norm, if_rk_step, propose_dt

__all__ = [
    "SimState",
    "StepperConfig",
    "DensityBoundError",
    "nonlinear_rhs",
    "step",
    "run_simulation",
    "SimResult",
    "extract_ndw",
    "w_equation_residual",
    "mass_integral",
]


class DensityBoundError(RuntimeError):
    """1 + N left the admissible density band."""

    def __init__(self, t: float, nmin: float, nmax: float):
        super().__init__(f"1+N in [{1+nmin:.3g}, {1+nmax:.3g}] at t={t:.6g}")
        self.t = t
        self.nmin = nmin
        self.nmax = nmax


@dataclass(frozen=True)
class SimState:
    """Spectral snapshot of the perturbation at one time."""

    t: float
    N: SpectralField
    V1: SpectralField
    V2: SpectralField
    params: PhysParams
    grid: Grid

    def coeff_vector(self) -> np.ndarray:
        return np.stack([self.N.coeffs, self.V1.coeffs, self.V2.coeffs])

    @classmethod
    def from_coeff_vector(cls, t, u, template: "SimState") -> "SimState":
        g = template.grid
        return cls(
            t=float(t),
            N=SpectralField(g, u[0], "N"),
            V1=SpectralField(g, u[1], "V1"),
            V2=SpectralField(g, u[2], "V2"),
            params=template.params,
            grid=g,
        )


@dataclass
class StepperConfig:
    """Stepper and run controls."""

    dt_init: float = 1e-2
    dt_min: float = 1e-10
    safety: float = 0.9
    dt_out: float = 1.0
    t_end: float = 10.0
    dealias: bool = True
    adaptive: bool = True
    rtol: float = 1e-7
    atol: float = 1e-14
    cfl_safety: float = 0.8
    dead_mode_threshold: float = 1e-13
    density_band: tuple[float, float] = (0.5, 2.0)
    max_steps: int = 50_000_000

    def __post_init__(self):
        if self.dt_init <= 0 or self.dt_min <= 0 or self.dt_min >= self.dt_init:
            raise ValueError("need 0 < dt_min < dt_init")
        if self.dt_out <= 0 or self.t_end <= 0:
            raise ValueError("dt_out and t_end must be positive")
        if not 0 < self.safety <= 1:
            raise ValueError("safety must be in (0, 1]")


def _symbols(grid: Grid, t: float):
    k = grid.k
    eta = grid.xi - k * t
    p = k.astype(float) ** 2 + eta**2
    return 1j * k, 1j * eta, p


def _p_integral_grid(t: float, grid: Grid) -> np.ndarray:
    """Closed form of integral_0^t p(s) ds per mode."""
    k = grid.k.astype(float)
    xi = grid.xi
    eta = xi - k * t
    with np.errstate(divide="ignore", invalid="ignore"):
        val = k**2 * t + (xi**3 - eta**3) / (3.0 * k)
    return np.where(k != 0, val, xi**2 * t)


def _rhs_coeffs(
    t: float,
    u: np.ndarray,
    grid: Grid,
    params: PhysParams,
    dealias: bool = True,
    include_heat: bool = True,
    nonlinear: bool = True,
    heat_only: bool = False,
) -> np.ndarray:
    """du/dt for u = stacked (Nhat, V1hat, V2hat) coefficient arrays.

    include_heat=False omits the isotropic mu*Laplacian term (absorbed
    exactly by the stepper); heat_only is a test hook keeping only the
    viscous terms.
    """
    nh, v1h, v2h = u
    ikx, iky, p = _symbols(grid, t)
    mu = params.mu
    bulk = params.mu + params.mu_prime  # coefficient of grad~ div~
    mask = grid.dealias_mask if dealias else np.ones(grid.shape, bool)

    dhat = ikx * v1h + iky * v2h
    visc1 = bulk * ikx * dhat
    visc2 = bulk * iky * dhat
    heat1 = -mu * p * v1h
    heat2 = -mu * p * v2h

    if heat_only:
        dn = np.zeros_like(nh)
        dv1 = visc1 + (heat1 if include_heat else 0.0)
        dv2 = visc2 + (heat2 if include_heat else 0.0)
        return np.stack([dn, dv1, dv2])

    dn = -dhat
    dv1 = -v2h - ikx * nh + visc1
    dv2 = -iky * nh + visc2
    if include_heat:
        dv1 = dv1 + heat1
        dv2 = dv2 + heat2

    if nonlinear:
        def phys(c):
            return to_physical(np.where(mask, c, 0.0))

        def spec(q):
            return np.where(mask, from_physical(q, grid), 0.0)

        n = phys(nh)
        if np.min(1.0 + n) <= 0.05:
            raise DensityBoundError(t, float(np.min(n)), float(np.max(n)))
        v1 = phys(v1h)
        v2 = phys(v2h)
        dxn = phys(ikx * nh)
        dyn = phys(iky * nh)
        dxv1 = phys(ikx * v1h)
        dyv1 = phys(iky * v1h)
        dxv2 = phys(ikx * v2h)
        dyv2 = phys(iky * v2h)
        viscp1 = phys(heat1 + visc1)
        viscp2 = phys(heat2 + visc2)
        fn = params.f_of_n(n)
        gn = params.g_of_n(n)

        dn = dn - (ikx * spec(n * v1) + iky * spec(n * v2))
        nl1 = v1 * dxv1 + v2 * dyv1 + fn * dxn + gn * viscp1
        nl2 = v1 * dxv2 + v2 * dyv2 + fn * dyn + gn * viscp2
        dv1 = dv1 - spec(nl1)
        dv2 = dv2 - spec(nl2)

    if dealias:
        dn = np.where(mask, dn, 0.0)
        dv1 = np.where(mask, dv1, 0.0)
        dv2 = np.where(mask, dv2, 0.0)
    return np.stack([dn, dv1, dv2])


def nonlinear_rhs(state: SimState) -> tuple[SpectralField, SpectralField, SpectralField]:
    """Full time derivative of (Nhat, V1hat, V2hat) at the state's time."""
    du = _rhs_coeffs(state.t, state.coeff_vector(), state.grid, state.params)
    g = state.grid
    return (
        SpectralField(g, du[0], "dN"),
        SpectralField(g, du[1], "dV1"),
        SpectralField(g, du[2], "dV2"),
    )


@dataclass
class _StepperState:
    dt: float
    streak_only: bool = False
    n_steps: int = 0
    events: list = field(default_factory=list)


def _stability_dt(grid: Grid, params: PhysParams, t: float, streak_only: bool, cfl_safety: float) -> float:
    _, _, p = _symbols(grid, t)
    active = grid.dealias_mask
    if streak_only:
        active = active & (grid.k == 0)
    pmax = float(np.max(p[active]))
    lam = np.sqrt(pmax) + (params.mu + params.mu_prime) * pmax + 1.0
    return cfl_safety * 2.8 / lam


def _enforce_streak(u: np.ndarray, grid: Grid) -> None:
    u[:, grid.k.ravel() != 0, :] = 0.0


def _maybe_deactivate(t, u, grid, config: StepperConfig, ss: _StepperState) -> None:
    knz = grid.k.ravel() != 0
    nz_norm = float(np.sqrt(np.sum(np.abs(u[:, knz, :]) ** 2)))
    z_norm = float(np.sqrt(np.sum(np.abs(u[:, ~knz, :]) ** 2)))
    if z_norm > 0 and nz_norm <= config.dead_mode_threshold * z_norm:
        _enforce_streak(u, grid)
        ss.streak_only = True
        ss.events.append((t, "streak_projection"))


def _advance(
    t: float,
    u: np.ndarray,
    target: float,
    grid: Grid,
    params: PhysParams,
    config: StepperConfig,
    ss: _StepperState,
    heat_only: bool = False,
    nonlinear: bool = True,
    single: bool = False,
):
    """Integrate in place from t to target (or one accepted step)."""
    mu = params.mu
    ctl = StepControls(rtol=config.rtol, atol=config.atol, safety=config.safety,
                       dt_min=config.dt_min)
    memo: dict[tuple[float, float], np.ndarray] = {}

    def decay(ta, tb):
        if mu == 0.0:
            return 1.0
        key = (ta, tb)
        fac = memo.get(key)
        if fac is None:
            dI = _p_integral_grid(tb, grid) - _p_integral_grid(ta, grid)
            f = np.exp(-mu * dI)
            fac = np.stack([np.ones_like(f), f, f])
            memo[key] = fac
        return fac

    def rhs(tt, uu):
        return _rhs_coeffs(tt, uu, grid, params, dealias=config.dealias,
                           include_heat=(mu == 0.0), nonlinear=nonlinear,
                           heat_only=heat_only)

    while single or t < target - 1e-12 * max(1.0, abs(target)):
        ss.n_steps += 1
        if ss.n_steps > config.max_steps:
            raise StepFailure("max step count exceeded", t=t)
        dt_stab = _stability_dt(grid, params, t, ss.streak_only, config.cfl_safety)
        h_free = min(ss.dt, dt_stab)
        if h_free < config.dt_min:
            raise StepFailure("step size underflow", t=t)
        h = h_free if single else min(h_free, target - t)
        memo.clear()
        u_new, err = if_rk_step(rhs, decay, t, u, h)
        errn = error_norm(err, u, u_new, ctl) if config.adaptive else 0.0
        accepted = errn <= 1.0
        if accepted:
            if not np.all(np.isfinite(u_new)):
                raise StepFailure("NaN/Inf detected", t=t + h)
            t = t + h
            u = u_new
            if ss.streak_only:
                _enforce_streak(u, grid)
            else:
                _maybe_deactivate(t, u, grid, config, ss)
        if config.adaptive:
            ss.dt = propose_dt(h, errn, ctl)
        else:
            ss.dt = config.dt_init
        if single and accepted:
            return t, u
    return t, u


def step(
    state: SimState,
    config: StepperConfig,
    dt: float | None = None,
    heat_only: bool = False,
    nonlinear: bool = True,
) -> SimState:
    """Advance one accepted integrating-factor Merson step."""
    ss = _StepperState(dt=dt if dt is not None else config.dt_init)
    u = state.coeff_vector().copy()
    if config.dealias:
        u = np.where(state.grid.dealias_mask, u, 0.0)
    t_new, u_new = _advance(state.t, u, np.inf, state.grid, state.params, config, ss,
                            heat_only=heat_only, nonlinear=nonlinear, single=True)
    return SimState.from_coeff_vector(t_new, u_new, state)


@dataclass
class SimResult:
    """Sampled trajectory, diagnostics series, events and outcome."""

    times: np.ndarray
    states: list[SimState]
    diagnostics: dict[str, np.ndarray]
    events: list[tuple[float, str]]
    outcome: str
    n_steps: int

    @property
    def completed(self) -> bool:
        return self.outcome == "completed"


def run_simulation(
    init: SimState,
    config: StepperConfig,
    store_states: bool = True,
    energy_weights=None,
    mult_params=None,
    heat_only: bool = False,
    nonlinear: bool = True,
) -> SimResult:
    """Run to config.t_end, sampling at the output cadence.

    Diagnostics at each sample: mass integral, zero-mode norms, the norm
    of the x-dependent modes, and (for viscous runs) the composite
    energy/dissipation totals.  The run outcome is one of
    completed / density_violation / blowup / dt_underflow.
    """
    from .energy import EnergyWeights, total_energy, weighted_unknowns, zero_mode_norms
    from .multipliers import MultiplierEval, MultiplierParams

    grid, params = init.grid, init.params
    if energy_weights is None:
        energy_weights = EnergyWeights()
    want_energy = params.nu > 0 and not heat_only
    if want_energy and mult_params is None:
        mult_params = MultiplierParams(nu=min(params.nu, 1.0))

    n_out = int(np.floor(config.t_end / config.dt_out + 1e-9)) + 1
    out_times = [i * config.dt_out for i in range(n_out)]
    if out_times[-1] < config.t_end - 1e-9:
        out_times.append(config.t_end)

    u = init.coeff_vector().copy()
    if config.dealias:
        u = np.where(grid.dealias_mask, u, 0.0)
    ss = _StepperState(dt=config.dt_init)
    times: list[float] = []
    states: list[SimState] = []
    diag: dict[str, list[float]] = {
        "mass": [], "zm_dy_n": [], "zm_d": [], "zm_dy_omega": [],
        "nonzero_norm": [], "E_total": [], "D_total": [],
    }
    outcome = "completed"
    t = float(init.t)

    def sample(tt, uu):
        st = SimState.from_coeff_vector(tt, uu.copy(), init)
        times.append(tt)
        if store_states:
            states.append(st)
        diag["mass"].append(mass_integral(st))
        zn = zero_mode_norms(st)
        diag["zm_dy_n"].append(zn[0])
        diag["zm_d"].append(zn[1])
        diag["zm_dy_omega"].append(zn[2])
        knz = grid.k.ravel() != 0
        diag["nonzero_norm"].append(float(np.sqrt(np.sum(np.abs(uu[:, knz, :]) ** 2))))
        if want_energy:
            Nf, Df, Wf = _ndw_of(st)[0], _ndw_of(st)[1], _ndw_of(st)[3]
            mev = MultiplierEval.on_grid(tt, grid, mult_params)
            wu = weighted_unknowns((Nf, Df, Wf), tt, mev)
            e, d = total_energy(wu, params, energy_weights)
            diag["E_total"].append(e)
            diag["D_total"].append(d)

    try:
        _density_check(t, u, config)
        sample(t, u)
        for t_next in out_times[1:]:
            if t_next <= t + 1e-12:
                continue
            t, u = _advance(t, u, float(t_next), grid, params, config, ss,
                            heat_only=heat_only, nonlinear=nonlinear)
            if nonlinear and not heat_only:
                _density_check(t, u, config)
            sample(t, u)
    except DensityBoundError as e:
        outcome = "density_violation"
        ss.events.append((e.t, f"density_violation: {e}"))
    except StepFailure as e:
        msg = str(e)
        outcome = "blowup" if ("NaN" in msg or "Inf" in msg) else "dt_underflow"
        ss.events.append((e.t, f"{outcome}: {msg}"))

    arrays = {k: np.array(v) for k, v in diag.items()}
    tarr = np.array(times)
    if want_energy and arrays["D_total"].size >= 2:
        arrays["int_D"] = np.concatenate(
            [[0.0], np.cumsum(np.diff(tarr) * 0.5 * (arrays["D_total"][1:] + arrays["D_total"][:-1]))]
        )
    return SimResult(times=tarr, states=states, diagnostics=arrays,
                     events=ss.events, outcome=outcome, n_steps=ss.n_steps)


def _density_check(t: float, u: np.ndarray, config: StepperConfig) -> None:
    n = to_physical(u[0])
    lo, hi = config.density_band
    if np.min(1.0 + n) < lo or np.max(1.0 + n) > hi:
        raise DensityBoundError(t, float(np.min(n)), float(np.max(n)))


def _ndw_of(state: SimState):
    from .operators import curl_tilde, div_tilde

    D = div_tilde(state.V1, state.V2, state.t)
    Om = curl_tilde(state.V1, state.V2, state.t)
    W = SpectralField(
        state.grid,
        Om.coeffs + state.N.coeffs - state.params.mu * D.coeffs,
        "W",
    )
    return state.N, D, Om, W


def extract_ndw(state: SimState):
    """(N, D, Omega, W) spectral fields with W = Omega + N - mu*D."""
    return _ndw_of(state)


def mass_integral(state: SimState) -> float:
    """Integral of N over the domain: area times the (0,0) coefficient."""
    return float(np.real(state.N.coeffs[0, 0]) * state.grid.area)


def _w_equation_rhs(state: SimState, include_f3: bool = True, include_f21: bool = True) -> np.ndarray:
    """Coefficients of dW/dt predicted by the good-unknown equation."""
    grid, params = state.grid, state.params
    t = state.t
    mu, nu = params.mu, params.nu
    mask = grid.dealias_mask
    ikx, iky, p = _symbols(grid, t)
    Nf, Df, Of, Wf = _ndw_of(state)
    nh, dh, wh = Nf.coeffs, Df.coeffs, Wf.coeffs
    lift_h = wh - nh + mu * dh

    inv_p = np.zeros_like(p)
    np.divide(1.0, p, out=inv_p, where=p > 0)
    # dW/dt = mu*Lap~ W - mu(mu+mu')Lap~ D + 2mu dx(dy - t dx)InvLap~ D
    #         + 2mu dx^2 InvLap~ (W - N + mu D) + F3; InvLap~ = -1/p
    rhs = (
        -mu * p * wh
        + mu * (mu + params.mu_prime) * p * dh
        - 2.0 * mu * (ikx * iky * inv_p) * dh
        - 2.0 * mu * (ikx * ikx * inv_p) * lift_h
    )

    if not include_f3:
        return np.where(mask, rhs, 0.0)

    def phys(c):
        return to_physical(np.where(mask, c, 0.0))

    def spec(q):
        return np.where(mask, from_physical(q, grid), 0.0)

    n = phys(nh)
    v1 = phys(state.V1.coeffs)
    v2 = phys(state.V2.coeffs)
    d = phys(dh)
    w = phys(wh)
    gn = params.g_of_n(n)
    fn = params.f_of_n(n)

    # G = g(N) (nu grad~ D + mu grad_perp~ (W - N + mu D)), pointwise
    G1 = gn * (nu * phys(ikx * dh) + mu * phys(-iky * lift_h))
    G2 = gn * (nu * phys(iky * dh) + mu * phys(ikx * lift_h))
    G1h = spec(G1)
    G2h = spec(G2)

    adv = spec(v1 * phys(ikx * wh) + v2 * phys(iky * wh))
    dw_quad = spec(d * (w + mu * d))
    perp_div_G = -iky * G1h + ikx * G2h
    f3 = -adv - dw_quad - perp_div_G

    if include_f21:
        dxv1 = phys(ikx * state.V1.coeffs)
        dyv1 = phys(iky * state.V1.coeffs)
        dxv2 = phys(ikx * state.V2.coeffs)
        dyv2 = phys(iky * state.V2.coeffs)
        sq = spec(dxv1**2 + dyv2**2 + 2.0 * dyv1 * dxv2)
        fgrad1 = spec(fn * phys(ikx * nh))
        fgrad2 = spec(fn * phys(iky * nh))
        div_fgrad = ikx * fgrad1 + iky * fgrad2
        div_G = ikx * G1h + iky * G2h
        f3 = f3 + mu * (sq + div_fgrad + div_G)

    return np.where(mask, rhs + f3, 0.0)


def w_equation_residual(
    times: np.ndarray,
    states: list[SimState],
    include_f3: bool = True,
    include_f21: bool = True,
) -> dict[str, np.ndarray]:
    """Residual of the good-unknown equation along a sampled trajectory.

    dW/dt is formed by central differences of the extracted W at the
    interior sample times and compared with the spectrally evaluated
    right-hand side.  Returns per-time residual norms, the norm of the
    time derivative, and the sample times used.
    """
    times = np.asarray(times, dtype=float)
    if times.size < 3:
        raise ValueError("need at least 3 samples for a residual")
    dt0 = times[1] - times[0]
    if np.max(np.abs(np.diff(times) - dt0)) > 1e-9 * dt0:
        raise ValueError("samples must be uniformly spaced")
    grid = states[0].grid
    W = [_ndw_of(s)[3].coeffs for s in states]
    res, dtw_norm = [], []
    for i in range(1, times.size - 1):
        dtw = (W[i + 1] - W[i - 1]) / (2.0 * dt0)
        rhs = _w_equation_rhs(states[i], include_f3=include_f3, include_f21=include_f21)
        res.append(coeff_l2(dtw - rhs, grid))
        dtw_norm.append(coeff_l2(dtw, grid))
    return {
        "t": times[1:-1],
        "residual": np.array(res),
        "dtW_norm": np.array(dtw_norm),
    }
