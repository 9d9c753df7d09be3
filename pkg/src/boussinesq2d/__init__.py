"""Doubly periodic pseudo-spectral solver for the a-b-c-d Boussinesq family.

Spectral core, the evolution system and its dispersion relation, RK4 time
stepping with observer hooks, approximate balance-law residual
diagnostics, and binary/CSV persistence behind a small CLI.
"""

from .config import (FromFileIC, GaussianIC, PlaneWaveIC, SimConfig,
                     parse_config, print_config)
from .diagnostics import (AmplitudeObserver, AmplitudeTrack, BalanceSample,
                          ResidualObserver, ResidualSeries, balance_residuals,
                          dimensionalize, dynamic_pressure, energy_residual,
                          fit_decay_exponent, leading_wave_amplitude,
                          mass_residual, momentum_residual_x,
                          momentum_residual_y,
                          reconstruct_velocity_at_level)
from .errors import (BlowUpError, ConfigError, NumericsError, ParameterError,
                     UnsupportedRegimeError, UsageError)
from .model import (ModelParams, State, derive_abcd, dispersion_omega, rhs,
                    rk4_step)
from .spectral import (GridSpec, ddx, ddy, dealias, from_spectral,
                       grid_integral, helmholtz_solve, laplacian, make_grid,
                       to_spectral)
from .stepping import RunSummary, build_initial_state, run_simulation

__version__ = "0.1.0"
