"""Run orchestration: initial conditions, the step loop, observer cadence.

Observers are callables ``observer(prev, cur, dt_sample)`` invoked every
``output_stride`` steps with the state one stride earlier and the current
one, so forward time differences are computable from stored samples
alone. The loop itself is strictly sequential and deterministic: two runs
with identical configuration produce bitwise identical states, and a run
resumed from a checkpoint matches the uninterrupted run bitwise.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .config import FromFileIC, GaussianIC, PlaneWaveIC
from .errors import BlowUpError, ConfigError, UsageError
from .model import State, dispersion_omega, rk4_step

__all__ = ["RunSummary", "build_initial_state", "run_simulation"]


@dataclass
class RunSummary:
    steps: int
    wall_time: float
    max_abs_eta: float
    blew_up: bool
    blowup_step: int | None = None
    t_final: float = 0.0
    final_state: State | None = None


def build_initial_state(cfg, grid, p):
    """Construct the t = 0 state described by cfg.initial_condition."""
    ic = cfg.initial_condition
    if isinstance(ic, GaussianIC):
        X, Y = grid.meshgrid()
        cx, cy = grid.center()
        eta = ic.amplitude * np.exp(-(((X - cx) ** 2 + (Y - cy) ** 2) / ic.width))
        return State(grid, eta, np.zeros(grid.shape), np.zeros(grid.shape), 0.0)

    if isinstance(ic, PlaneWaveIC):
        two_pi = 2.0 * np.pi
        mx = round(ic.kx * grid.lx / two_pi)
        my = round(ic.ky * grid.ly / two_pi)
        kx = two_pi * mx / grid.lx
        ky = two_pi * my / grid.ly
        if (abs(kx - ic.kx) > 1e-8 * max(1.0, abs(ic.kx))
                or abs(ky - ic.ky) > 1e-8 * max(1.0, abs(ic.ky))):
            raise ConfigError(
                f"plane_wave wavenumber ({ic.kx}, {ic.ky}) is not resonant "
                f"with the {grid.lx} x {grid.ly} domain")
        if mx == 0 and my == 0:
            raise ConfigError("plane_wave needs a nonzero wavenumber")
        omega = dispersion_omega(kx, ky, p)
        if omega is None or omega == 0.0:
            raise ConfigError(
                f"plane_wave mode ({kx}, {ky}) is unstable for these parameters")
        X, Y = grid.meshgrid()
        phase = np.cos(kx * X + ky * Y)
        k2 = kx * kx + ky * ky
        fac = (1.0 - p.beta * p.a * k2) / (omega * (1.0 + p.beta * p.b * k2))
        eta = ic.amplitude * phase
        u = (ic.amplitude * kx * fac) * phase
        v = (ic.amplitude * ky * fac) * phase
        return State(grid, eta, u, v, 0.0)

    if isinstance(ic, FromFileIC):
        from .io import read_snapshot
        loaded, _ = read_snapshot(ic.path)
        if loaded.grid != grid:
            raise ConfigError(
                f"snapshot grid {loaded.grid!r} does not match configured "
                f"grid {grid!r}")
        return State(grid, loaded.eta, loaded.u, loaded.v, 0.0)

    raise ConfigError(f"unknown initial condition {ic!r}")


def run_simulation(cfg, observers=(), snapshot_writer=None,
                   initial_state=None, depth_check=True):
    """Step from the initial state to t_end, driving observers and snapshots.

    ``initial_state`` resumes from a stored state (its t must sit on the
    step lattice). On blow-up the loop aborts cleanly: observers keep
    whatever they have collected and the summary carries the flag plus
    the offending step index.
    """
    grid = cfg.grid()
    p = cfg.params()
    if initial_state is not None:
        if initial_state.grid != grid:
            raise UsageError("initial_state grid does not match configuration")
        s = initial_state
    else:
        s = build_initial_state(cfg, grid, p)

    n_total = cfg.n_steps
    i0 = round(s.t / cfg.dt)
    if abs(i0 * cfg.dt - s.t) > 1e-9 * max(1.0, abs(s.t)):
        raise UsageError(f"initial state time {s.t} is not a multiple of dt={cfg.dt}")
    if i0 > n_total:
        raise UsageError(f"initial state time {s.t} is beyond t_end={cfg.t_end}")

    max_abs_eta = float(np.abs(s.eta).max())
    prev_obs = s
    blew_up = False
    blowup_step = None
    steps_done = 0
    wall_start = time.perf_counter()

    for gi in range(i0 + 1, n_total + 1):
        try:
            s = rk4_step(s, cfg.dt, p, cfg.dealias)
        except BlowUpError as e:
            e.step = gi
            blew_up = True
            blowup_step = gi
            break
        steps_done += 1
        if gi % cfg.output_stride == 0:
            dt_sample = cfg.dt * cfg.output_stride
            for ob in observers:
                ob(prev_obs, s, dt_sample)
            prev_obs = s
            m = float(np.abs(s.eta).max())
            if m > max_abs_eta:
                max_abs_eta = m
            if depth_check and not p.linearized and s.min_depth(p) <= 0.0:
                blew_up = True
                blowup_step = gi
                break
        if snapshot_writer is not None and gi % cfg.snapshot_stride == 0:
            snapshot_writer(s)

    wall = time.perf_counter() - wall_start
    max_abs_eta = max(max_abs_eta, float(np.abs(s.eta).max()))
    return RunSummary(steps=steps_done, wall_time=wall, max_abs_eta=max_abs_eta,
                      blew_up=blew_up, blowup_step=blowup_step, t_final=s.t,
                      final_state=s)
