import hypothesis
import numpy as np
import pytest

from boussinesq2d import make_grid

hypothesis.settings.register_profile(
    "suite", max_examples=25, deadline=None,
    suppress_health_check=[hypothesis.HealthCheck.too_slow])
hypothesis.settings.load_profile("suite")


@pytest.fixture(scope="session")
def square_grid():
    """Small square grid on [0, 2*pi)^2 where integer modes are resonant."""
    return make_grid(64, 64, 2.0 * np.pi, 2.0 * np.pi, 0.0, 0.0)


@pytest.fixture(scope="session")
def basin_grid():
    """Coarse version of the benchmark domain [-20, 20)^2."""
    return make_grid(64, 64, 40.0, 40.0, -20.0, -20.0)


def low_mode_field(grid, modes):
    """Real field from (mx, my, amp, phase) tuples; exactly band-limited."""
    X, Y = grid.meshgrid()
    f = np.zeros(grid.shape)
    for mx, my, amp, phase in modes:
        kx = 2.0 * np.pi * mx / grid.lx
        ky = 2.0 * np.pi * my / grid.ly
        f += amp * np.cos(kx * X + ky * Y + phase)
    return f
