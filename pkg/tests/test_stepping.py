import numpy as np
import pytest

from boussinesq2d import (ConfigError, GaussianIC, PlaneWaveIC, SimConfig,
                          State, UsageError, build_initial_state,
                          dispersion_omega, grid_integral, run_simulation)


def small_cfg(**kw):
    base = dict(alpha=0.3, beta=0.3, nx=32, ny=32, dt=1e-2, t_end=0.1,
                snapshot_stride=10 ** 9)
    base.update(kw)
    return SimConfig(**base)


def test_observer_called_exactly_n_times():
    cfg = small_cfg(t_end=0.1, dt=1e-2, output_stride=1)
    calls = []
    run_simulation(cfg, observers=[lambda a, b, h: calls.append((a.t, b.t, h))])
    assert len(calls) == 10
    # consecutive pairs, one stride apart
    for prev_t, cur_t, h in calls:
        assert h == pytest.approx(1e-2)
        assert cur_t - prev_t == pytest.approx(1e-2)


def test_observer_stride_pairs():
    cfg = small_cfg(t_end=0.1, dt=1e-2, output_stride=5)
    calls = []
    run_simulation(cfg, observers=[lambda a, b, h: calls.append((a.t, b.t, h))])
    assert len(calls) == 2
    assert calls[0][0] == 0.0
    assert calls[0][1] == pytest.approx(0.05)
    assert calls[1][0] == pytest.approx(0.05)
    assert calls[1][1] == pytest.approx(0.10)
    assert calls[0][2] == pytest.approx(0.05)


def test_runs_are_bitwise_deterministic():
    cfg = small_cfg(t_end=0.05)
    a = run_simulation(cfg).final_state
    b = run_simulation(cfg).final_state
    assert np.array_equal(a.eta, b.eta)
    assert np.array_equal(a.u, b.u)
    assert np.array_equal(a.v, b.v)


def test_restart_matches_single_run_bitwise():
    cfg = small_cfg(t_end=0.1)
    single = run_simulation(cfg).final_state

    half = None

    def grab(state):
        nonlocal half
        half = state.copy()

    run_simulation(small_cfg(t_end=0.05), snapshot_writer=None)
    # capture the mid-run state through the snapshot hook of the full run
    cfg_snap = small_cfg(t_end=0.1, snapshot_stride=5)
    states = []
    run_simulation(cfg_snap, snapshot_writer=lambda s: states.append(s.copy()))
    half = states[0]
    assert half.t == pytest.approx(0.05)

    resumed = run_simulation(cfg, initial_state=half).final_state
    assert np.array_equal(single.eta, resumed.eta)
    assert np.array_equal(single.u, resumed.u)
    assert np.array_equal(single.v, resumed.v)
    assert single.t == resumed.t


def test_mass_integral_constant_over_run():
    cfg = small_cfg(t_end=0.25, dt=1e-2)
    grid = cfg.grid()
    p = cfg.params()
    s0 = build_initial_state(cfg, grid, p)
    m0 = grid_integral(grid, s0.eta)
    out = run_simulation(cfg)
    m1 = grid_integral(grid, out.final_state.eta)
    assert abs(m1 - m0) <= 1e-12 * abs(m0)


def test_initial_state_time_off_lattice_rejected():
    cfg = small_cfg()
    grid = cfg.grid()
    s = State.zeros(grid, t=0.0033)
    with pytest.raises(UsageError):
        run_simulation(cfg, initial_state=s)


def test_blowup_aborts_cleanly():
    # an absurdly tall heap overflows the quadratic products immediately
    cfg = SimConfig(alpha=0.3, beta=0.3, nx=32, ny=32, dt=0.5, t_end=5.0,
                    initial_condition=GaussianIC(1e150, 5.0),
                    snapshot_stride=10 ** 9)
    seen = []
    with np.errstate(over="ignore", invalid="ignore"):
        summary = run_simulation(cfg,
                                 observers=[lambda a, b, h: seen.append(b.t)])
    assert summary.blew_up
    assert summary.blowup_step is not None
    assert summary.steps < cfg.n_steps


def test_gaussian_ic_center_and_amplitude():
    cfg = small_cfg(nx=64, ny=64)
    grid = cfg.grid()
    s = build_initial_state(cfg, grid, cfg.params())
    assert s.eta.max() == pytest.approx(1.0)
    j, i = np.unravel_index(np.argmax(s.eta), s.eta.shape)
    assert grid.x[i] == pytest.approx(0.0, abs=1e-12)
    assert grid.y[j] == pytest.approx(0.0, abs=1e-12)
    assert np.abs(s.u).max() == 0.0


def test_plane_wave_ic_matches_dispersion():
    cfg = SimConfig(alpha=0.3, beta=0.3, nx=32, ny=32, lx=2 * np.pi,
                    ly=2 * np.pi, x0=0.0, y0=0.0, linearized=True, dt=1e-3,
                    t_end=1e-3, initial_condition=PlaneWaveIC(1.0, 0.0, 0.01),
                    snapshot_stride=10 ** 9)
    grid = cfg.grid()
    p = cfg.params()
    s = build_initial_state(cfg, grid, p)
    w = dispersion_omega(1.0, 0.0, p)
    fac = (1.0 - p.beta * p.a) / (w * (1.0 + p.beta * p.b))
    assert np.abs(s.u - fac * s.eta).max() <= 1e-15
    assert np.abs(s.v).max() == 0.0


def test_plane_wave_ic_rejects_nonresonant():
    cfg_kwargs = dict(alpha=0.3, beta=0.3, nx=32, ny=32, dt=1e-3, t_end=1e-3,
                      snapshot_stride=10 ** 9)
    # lx = 40, so kx = 1 is not resonant (closest mode is 2*pi*6/40)
    cfg = SimConfig(initial_condition=PlaneWaveIC(1.0, 0.0, 0.01), **cfg_kwargs)
    with pytest.raises(ConfigError):
        build_initial_state(cfg, cfg.grid(), cfg.params())


def test_snapshot_writer_cadence():
    cfg = small_cfg(t_end=0.1, snapshot_stride=4)
    taken = []
    run_simulation(cfg, snapshot_writer=lambda s: taken.append(s.t))
    assert len(taken) == 2  # steps 4 and 8 of 10
    assert taken[0] == pytest.approx(0.04)
    assert taken[1] == pytest.approx(0.08)
