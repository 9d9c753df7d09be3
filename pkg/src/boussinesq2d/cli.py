"""Command-line interface.

Subcommands: simulate, residuals, sweep, dispersion, profile, decay-fit.
Exit codes: 0 success, 1 usage or configuration problem, 2 numerical
failure (blow-up), 3 I/O failure. The BSQ2D_THREADS environment variable
sets how many sweep runs may execute in parallel (default 1); it is the
only environment dependence.
"""
from __future__ import annotations

import argparse
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import io as bio
from .config import parse_config
from .diagnostics import (AmplitudeObserver, AmplitudeTrack, ResidualObserver,
                          balance_residuals, dynamic_pressure,
                          fit_decay_exponent, reconstruct_velocity_at_level)
from .errors import (BlowUpError, ConfigError, NumericsError, ParameterError,
                     UsageError)
from .model import ModelParams, State, dispersion_omega
from .stepping import run_simulation

__all__ = ["main"]


def _load_config(path):
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def _cmd_simulate(args):
    cfg = _load_config(args.config)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    p = cfg.params()

    initial_state = None
    if args.resume:
        initial_state = bio.read_checkpoint(args.resume, cfg)

    residuals = ResidualObserver(p)
    amplitudes = AmplitudeObserver()

    def snapshot_writer(state):
        step = round(state.t / cfg.dt)
        bio.write_snapshot(outdir / f"snap_{step:08d}.bsq", state, p)
        bio.write_checkpoint(outdir / "checkpoint.bsq", state, p, cfg)

    summary = run_simulation(cfg, observers=[residuals, amplitudes],
                             snapshot_writer=snapshot_writer,
                             initial_state=initial_state)

    if len(residuals.series):
        bio.write_residual_csv(residuals.series, outdir / "residuals.csv")
        bio.write_residual_l2_csv(residuals.series, outdir / "residuals_l2.csv")
    if amplitudes.track.times:
        bio.write_amplitude_csv(amplitudes.track, outdir / "amplitudes.csv")
    if summary.final_state is not None:
        bio.write_checkpoint(outdir / "checkpoint.bsq", summary.final_state,
                             p, cfg)

    print(f"steps={summary.steps} t_final={summary.t_final:.17g} "
          f"max_abs_eta={summary.max_abs_eta:.17g} "
          f"wall_time={summary.wall_time:.3f}s blew_up={summary.blew_up}")
    return 2 if summary.blew_up else 0


class _InvariantProbe:
    """Tracks conserved-quantity drift and wave height during one run."""

    def __init__(self, grid, area):
        self.grid = grid
        self.area = area
        self.eta_integral_0 = None
        self.max_rel_drift = 0.0
        self.max_abs_eta_after_t1 = 0.0

    def __call__(self, prev, cur, dt_s):
        from .spectral import grid_integral
        if self.eta_integral_0 is None:
            self.eta_integral_0 = grid_integral(self.grid, prev.eta)
        m = grid_integral(self.grid, cur.eta)
        drift = abs(m - self.eta_integral_0) / max(1e-300, abs(self.eta_integral_0))
        if drift > self.max_rel_drift:
            self.max_rel_drift = drift
        if cur.t > 1.0:
            h = float(np.abs(cur.eta).max())
            if h > self.max_abs_eta_after_t1:
                self.max_abs_eta_after_t1 = h


def _run_one_alpha(payload):
    """Sweep worker: one run at alpha = beta = a.

    Returns (row, extras): the row is (a, mass, momentum, energy) residual
    maxima; extras carries the invariant drifts and the fitted leading-wave
    decay exponent used by the verification suite.
    """
    cfg_text, a, outdir = payload
    cfg = replace(parse_config(cfg_text), alpha=a, beta=a)
    grid = cfg.grid()
    p = cfg.params()
    residuals = ResidualObserver(p)
    amplitudes = AmplitudeObserver()
    invariants = _InvariantProbe(grid, grid.lx * grid.ly)
    summary = run_simulation(cfg, observers=[residuals, amplitudes, invariants])
    if summary.blew_up:
        raise BlowUpError(f"sweep run alpha={a} blew up", step=summary.blowup_step)
    tag = format(a, "g").replace(".", "p")
    bio.write_residual_csv(residuals.series, Path(outdir) / f"residuals_alpha{tag}.csv")
    if amplitudes.track.times:
        bio.write_amplitude_csv(amplitudes.track,
                                Path(outdir) / f"amplitudes_alpha{tag}.csv")
    m = residuals.series.summary()
    track = amplitudes.track
    try:
        decay = fit_decay_exponent(track)
    except UsageError:
        decay = None
    extras = {
        "eta_integral_drift": invariants.max_rel_drift,
        "max_abs_mass_residual_integral": max(
            abs(s.mass_integral) for s in residuals.series.samples),
        "max_abs_eta_after_t1": invariants.max_abs_eta_after_t1,
        "decay_exponent": decay,
        "samples": len(residuals.series),
    }
    row = (a, m["r_mass"], residuals.series.max_momentum(), m["r_energy"])
    return row, extras


def sweep_residuals(cfg_text, alphas, outdir, jobs=1):
    """Run the per-amplitude sweep; returns (rows, slopes, extras-by-alpha)."""
    payloads = [(cfg_text, a, os.fspath(outdir)) for a in alphas]
    if jobs > 1 and len(payloads) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_one_alpha, payloads))
    else:
        results = [_run_one_alpha(pl) for pl in payloads]
    results.sort(key=lambda r: r[0][0])
    rows = [r[0] for r in results]
    extras = {r[0][0]: r[1] for r in results}
    slopes = tuple(
        float(np.polyfit(np.log([r[0] for r in rows]),
                         np.log([r[j] for r in rows]), 1)[0])
        for j in (1, 2, 3))
    return rows, slopes, extras


def _default_jobs():
    raw = os.environ.get("BSQ2D_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _cmd_sweep(args):
    with open(args.config, "r", encoding="utf-8") as fh:
        cfg_text = fh.read()
    parse_config(cfg_text)  # fail early with a good message
    alphas = [float(a) for a in args.alphas.split(",") if a.strip()]
    if not alphas:
        raise UsageError("--alphas needs at least one value")
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    rows, slopes, _ = sweep_residuals(cfg_text, alphas, outdir, jobs=args.jobs)
    bio.write_sweep_csv(rows, slopes, outdir / "sweep.csv")
    print("alpha,r_mass,r_momentum,r_energy")
    for row in rows:
        print(",".join(format(v, ".17g") for v in row))
    print(f"#slope,{slopes[0]:.17g},{slopes[1]:.17g},{slopes[2]:.17g}")
    return 0


def _cmd_residuals(args):
    state_a, hdr_a = bio.read_snapshot(args.snap_a)
    state_b, hdr_b = bio.read_snapshot(args.snap_b)
    for key in ("alpha", "beta", "theta2", "lambda", "mu"):
        if hdr_a[key] != hdr_b[key]:
            raise UsageError(f"snapshots disagree on {key}: "
                             f"{hdr_a[key]} vs {hdr_b[key]}")
    p = ModelParams(alpha=hdr_a["alpha"], beta=hdr_a["beta"],
                    theta2=hdr_a["theta2"], lam=hdr_a["lambda"],
                    mu=hdr_a["mu"])
    dt_s = state_b.t - state_a.t
    fields = balance_residuals(state_a, state_b, dt_s, p)
    names = ("r_mass", "r_momx", "r_momy", "r_energy")
    maxima = {n: float(np.abs(f).max()) for n, f in zip(names, fields)}
    for n in names:
        print(f"{n}={maxima[n]:.17g}")
    if args.out:
        from .diagnostics import BalanceSample, ResidualSeries
        series = ResidualSeries()
        series.append(BalanceSample(t=state_b.t, **{
            "r_mass": maxima["r_mass"], "r_momx": maxima["r_momx"],
            "r_momy": maxima["r_momy"], "r_energy": maxima["r_energy"]}))
        bio.write_residual_csv(series, args.out)
    return 0


def _cmd_dispersion(args):
    cfg = _load_config(args.config)
    p = cfg.params()
    if args.kmax < 0:
        raise UsageError(f"--kmax must be >= 0, got {args.kmax}")
    if args.kmax == 0.0:
        ks = [0.0]
    else:
        ks = list(np.linspace(0.0, args.kmax, args.n + 1))
    lines = ["k,omega"]
    for k in ks:
        w = dispersion_omega(k, 0.0, p)
        lines.append(f"{k:.17g},{'unstable' if w is None else format(w, '.17g')}")
    text = "\n".join(lines) + "\n"
    if args.out:
        bio.atomic_write_text(args.out, text)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_profile(args):
    state, hdr = bio.read_snapshot(args.snapshot)
    p = ModelParams(alpha=hdr["alpha"], beta=hdr["beta"], theta2=hdr["theta2"],
                    lam=hdr["lambda"], mu=hdr["mu"])
    z = args.z
    if not 0.0 <= z <= 1.0:
        raise UsageError(f"--z must lie in [0, 1], got {z}")
    if args.prev:
        prev, _ = bio.read_snapshot(args.prev)
        dt_s = state.t - prev.t
    else:
        prev, dt_s = state, 0.0
    pressure = dynamic_pressure(state, p, z, prev, dt_s)
    u_z, v_z = reconstruct_velocity_at_level(state, p, p.theta2, z * z)
    out = State(state.grid, pressure, u_z, v_z, state.t)
    bio.write_snapshot(args.out, out, p)
    print(f"pressure range [{pressure.min():.17g}, {pressure.max():.17g}]")
    print(f"u range [{u_z.min():.17g}, {u_z.max():.17g}]")
    print(f"v range [{v_z.min():.17g}, {v_z.max():.17g}]")
    return 0


def _cmd_decay_fit(args):
    times, amps = bio.read_amplitude_csv(args.csv)
    try:
        lo, hi = (float(part) for part in args.window.split(":"))
    except ValueError:
        raise UsageError(f"--window must look like 4:10, got {args.window!r}") from None
    track = AmplitudeTrack(fit_window=(lo, hi))
    for t, a in zip(times, amps):
        track.append(t, math.nan, a)
    exponent = fit_decay_exponent(track)
    print(f"{exponent:.17g}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="bsq2d",
        description="Doubly periodic pseudo-spectral solver for the "
                    "a-b-c-d Boussinesq family, with balance-law "
                    "residual diagnostics.")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a configuration")
    sim.add_argument("config")
    sim.add_argument("--out", default=".", help="output directory")
    sim.add_argument("--resume", default=None, help="checkpoint to resume from")
    sim.set_defaults(func=_cmd_simulate)

    res = sub.add_parser("residuals", help="evaluate residuals of a stored pair")
    res.add_argument("snap_a")
    res.add_argument("snap_b")
    res.add_argument("--out", default=None, help="optional CSV output path")
    res.set_defaults(func=_cmd_residuals)

    sw = sub.add_parser("sweep", help="per-amplitude residual sweep")
    sw.add_argument("config")
    sw.add_argument("--alphas", required=True,
                    help="comma-separated values used for alpha = beta")
    sw.add_argument("--out", default=".", help="output directory")
    sw.add_argument("--jobs", type=int, default=_default_jobs(),
                    help="parallel runs (default: BSQ2D_THREADS or 1)")
    sw.set_defaults(func=_cmd_sweep)

    disp = sub.add_parser("dispersion", help="tabulate the dispersion relation")
    disp.add_argument("config")
    disp.add_argument("--kmax", type=float, required=True)
    disp.add_argument("--n", type=int, default=50)
    disp.add_argument("--out", default=None)
    disp.set_defaults(func=_cmd_dispersion)

    prof = sub.add_parser("profile",
                          help="dynamic pressure and velocities at a level")
    prof.add_argument("snapshot")
    prof.add_argument("--z", type=float, required=True)
    prof.add_argument("--prev", default=None,
                      help="earlier snapshot for time derivatives")
    prof.add_argument("--out", default="profile.bsq")
    prof.set_defaults(func=_cmd_profile)

    fit = sub.add_parser("decay-fit", help="fit the amplitude decay exponent")
    fit.add_argument("csv")
    fit.add_argument("--window", default="4:10")
    fit.set_defaults(func=_cmd_decay_fit)

    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 0 if e.code in (0, None) else 1
    try:
        return args.func(args)
    except (ConfigError, ParameterError, UsageError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except (BlowUpError, NumericsError) as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"i/o failure: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
