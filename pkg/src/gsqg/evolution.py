"""Integrating-factor time stepping for the dissipative active-scalar equation.

The linear dissipation ``nu |k|**beta + eps |k|**2`` is integrated exactly in
Fourier space; the advection ``-div(u theta)`` is explicit (Heun or classical
RK4 on the integrating-factor variable), with the 2/3 rule applied to both
factors and to the product.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from .errors import BlowUpError, CFLViolation, GsqgError, ParameterError
from .spectral import Grid2D, ScalarField2D, irfft2, rfft2, velocity_symbols


class NoDissipationWarning(UserWarning):
    pass


@dataclass(frozen=True)
class SolverParams:
    alpha: float
    beta: float
    nu: float = 1.0
    epsilon: float = 0.0
    dt: float = 1e-3
    t_end: float = 0.1
    cfl_safety: float = 0.5
    dealias_fraction: float = 2.0 / 3.0
    truncation_modes: Optional[float] = None
    scheme: str = "rk2"
    grad_ceiling: float = math.inf

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ParameterError("alpha must lie in ]0, 1[")
        if not 0 < self.beta <= 2:
            raise ParameterError("beta must lie in ]0, 2]")
        if self.nu < 0 or self.epsilon < 0:
            raise ParameterError("nu and epsilon must be >= 0")
        if not self.dt > 0:
            raise ParameterError("dt must be positive")
        if not self.t_end >= 0:
            raise ParameterError("t_end must be >= 0")
        if not 0 < self.cfl_safety <= 1:
            raise ParameterError("cfl_safety must lie in ]0, 1]")
        if not 0 < self.dealias_fraction <= 1:
            raise ParameterError("dealias_fraction must lie in ]0, 1]")
        if self.truncation_modes is not None and not self.truncation_modes > 0:
            raise ParameterError("truncation_modes must be positive")
        if self.scheme not in ("rk2", "rk4"):
            raise ParameterError("scheme must be 'rk2' or 'rk4'")
        if self.nu == 0 and self.epsilon == 0:
            warnings.warn("nu = epsilon = 0: no dissipation", NoDissipationWarning, stacklevel=3)

    @property
    def warnings(self) -> list:
        return ["no dissipation (nu = epsilon = 0)"] if self.nu == 0 and self.epsilon == 0 else []


@dataclass(frozen=True)
class SimulationState:
    t: float
    theta: ScalarField2D
    step_count: int = 0


class Solver:
    """Precomputed multipliers for one grid, parameter set and step size."""

    def __init__(self, grid: Grid2D, params: SolverParams, dt: Optional[float] = None):
        self.grid = grid
        self.params = params
        self.dt = params.dt if dt is None else dt
        p = params
        self.mask = grid.dealias_mask(p.dealias_fraction)
        self.trunc = (grid.truncation_mask(p.truncation_modes)
                      if p.truncation_modes is not None else None)
        self.rate = p.nu * grid.kmag ** p.beta + p.epsilon * grid.kmag ** 2
        self.E = np.exp(-self.rate * self.dt)
        self.Eh = np.exp(-self.rate * self.dt / 2)
        s1, s2 = velocity_symbols(grid, p.alpha)
        self.s1 = s1 * self.mask
        self.s2 = s2 * self.mask
        self.ik1 = 1j * grid.k1 * self.mask
        self.ik2 = 1j * grid.k2 * self.mask
        self.last_umax = None

    def nonlinear(self, th):
        """``-P div(u theta)`` for a spectral ``th``; also returns ``max |u|``."""
        n = self.grid.n
        thd = th * self.mask
        u1 = irfft2(self.s1 * thd, n)
        u2 = irfft2(self.s2 * thd, n)
        tp = irfft2(thd, n)
        f1 = rfft2(u1 * tp)
        f2 = rfft2(u2 * tp)
        umax = float(np.sqrt(np.max(u1 * u1 + u2 * u2)))
        return -(self.ik1 * f1 + self.ik2 * f2), umax

    def _truncate(self, th):
        return th * self.trunc if self.trunc is not None else th

    def advance(self, th, *, force=False, step_index=0):
        """One step from spectral ``th``; returns ``(th_new, max|u| at step start)``."""
        dt = self.dt
        th = self._truncate(th)
        a, umax = self.nonlinear(th)
        limit = self.params.cfl_safety * self.grid.dx
        if dt * umax > limit and not force:
            raise CFLViolation(
                f"dt*max|u| = {dt * umax:.3e} exceeds cfl_safety*dx = {limit:.3e}",
                diagnostic={"step": step_index, "dt": dt, "umax": umax,
                            "suggested_dt": limit / umax})
        if self.params.scheme == "rk2":
            star = self.E * (th + dt * a)
            b, _ = self.nonlinear(star)
            new = self.E * (th + 0.5 * dt * a) + 0.5 * dt * b
        else:
            E, Eh = self.E, self.Eh
            k2, _ = self.nonlinear(Eh * (th + 0.5 * dt * a))
            k3, _ = self.nonlinear(Eh * th + 0.5 * dt * k2)
            k4, _ = self.nonlinear(E * th + dt * Eh * k3)
            new = E * th + dt / 6 * (E * a + 2 * Eh * (k2 + k3) + k4)
        new = self._truncate(new)
        if not np.all(np.isfinite(new)):
            raise BlowUpError(f"non-finite values at step {step_index}", step=step_index,
                              diagnostic={"umax": umax})
        self.last_umax = umax
        return new, umax


@lru_cache(maxsize=16)
def solver_for(grid: Grid2D, params: SolverParams, dt: float) -> Solver:
    return Solver(grid, params, dt)


def step(state: SimulationState, params: SolverParams, *, force=False,
         dt: Optional[float] = None) -> SimulationState:
    """Advance ``state`` by one step of size ``dt`` (default ``params.dt``)."""
    dt = params.dt if dt is None else dt
    solver = solver_for(state.theta.grid, params, dt)
    new, _ = solver.advance(state.theta.spectral, force=force, step_index=state.step_count)
    return SimulationState(state.t + dt, ScalarField2D(state.theta.grid, spectral=new),
                           state.step_count + 1)


def cfl_dt(state: SimulationState, params: SolverParams) -> float:
    """``cfl_safety * dx / max|u|`` (``inf`` for a vanishing velocity)."""
    g = state.theta.grid
    s1, s2 = velocity_symbols(g, params.alpha)
    u1 = irfft2(s1 * state.theta.spectral, g.n)
    u2 = irfft2(s2 * state.theta.spectral, g.n)
    umax = float(np.sqrt(np.max(u1 * u1 + u2 * u2)))
    return math.inf if umax == 0 else params.cfl_safety * g.dx / umax


def project(theta: ScalarField2D, params: SolverParams) -> ScalarField2D:
    """Restrict data to the modes the solver keeps (dealiased, truncated)."""
    g = theta.grid
    keep = g.dealias_mask(params.dealias_fraction)
    keep = keep | (g.kmag == 0)
    if params.truncation_modes is not None:
        keep = keep & g.truncation_mask(params.truncation_modes)
    return ScalarField2D(g, spectral=theta.spectral * keep)


@dataclass
class RunResult:
    records: list
    final_state: SimulationState
    truncated: bool = False
    error: Optional[GsqgError] = None
    dt: float = 0.0
    n_steps: int = 0
    extras: dict = field(default_factory=dict)


def integrate(theta0: ScalarField2D, params: SolverParams, *, tracker=None,
              sample_every: int = 1, on_step: Optional[Callable] = None,
              force_cfl=False, project_initial=True) -> RunResult:
    """Run from ``theta0`` to ``params.t_end``.

    ``dt`` is shrunk, if needed, so that a whole number of steps lands on
    ``t_end``.  Errors stop the run; the records gathered so far are kept
    and the result is marked truncated.
    """
    theta = project(theta0, params) if project_initial else theta0
    grid = theta.grid
    n_steps = int(math.ceil(params.t_end / params.dt * (1 - 1e-12))) if params.t_end > 0 else 0
    dt = params.t_end / n_steps if n_steps else params.dt
    solver = solver_for(grid, params, dt)
    state = SimulationState(0.0, theta, 0)
    records = []
    err = None
    if tracker is not None:
        try:
            tracker.start(state)
        except GsqgError as exc:
            records.append(tracker.record(state))
            return RunResult(records, state, True, exc, dt, n_steps)
        records.append(tracker.record(state))
    th = theta.spectral
    for i in range(n_steps):
        try:
            new, _ = solver.advance(th, force=force_cfl, step_index=i)
        except GsqgError as exc:
            err = exc
            break
        t_new = dt * (i + 1)
        nstate = SimulationState(t_new, ScalarField2D(grid, spectral=new), i + 1)
        if tracker is not None:
            try:
                tracker.advance(state, nstate, dt)
            except GsqgError as exc:
                err = exc
                state = nstate
                records.append(tracker.record(state))
                break
            if (i + 1) % sample_every == 0 or i + 1 == n_steps:
                records.append(tracker.record(nstate))
        if on_step is not None:
            on_step(state, nstate)
        state = nstate
        th = new
    if err is not None and tracker is not None and records and records[-1].t != state.t:
        records.append(tracker.record(state))
    return RunResult(records, state, err is not None, err, dt, n_steps)


def run(config) -> RunResult:
    """Run a simulate-mode :class:`~gsqg.config.RunConfig`."""
    from .diagnostics import Tracker, apply_decay_envelope
    from . import initial

    params = config.solver_params()
    grid = config.grid2d()
    theta0 = initial.from_spec(grid, config.initial)
    d = config.diagnostics
    moc = config.moc_object() if config.moc else None
    if moc is not None and d.get("lambda_from_data"):
        from .certify import lambda_for_data
        from .spectral import grad_linf
        th = project(theta0, params)
        choice = lambda_for_data(th.linf(), grad_linf(th), moc, params.alpha, params.beta,
                                 c0=d.get("c0"))
        moc = moc.scaled(choice["lambda"], params.alpha, params.beta)
    tracker = Tracker(params, moc=moc, holder_gamma=d.get("holder_gamma"),
                      shells=bool(d.get("shells", False)), seed=config.seed)
    res = integrate(theta0, params, tracker=tracker,
                    sample_every=int(d.get("sample_every", 1)),
                    force_cfl=bool(config.solver.get("force_cfl", False)))
    if d.get("t_fit") is not None and len(res.records) > 2:
        C = apply_decay_envelope(res.records, float(d["t_fit"]), params.beta)
        res.extras["decay_C"] = C
    return res


__all__ = ["SolverParams", "SimulationState", "Solver", "step", "cfl_dt", "project",
           "integrate", "run", "RunResult", "replace"]
