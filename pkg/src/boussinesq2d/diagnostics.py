"""Balance-law residual evaluation and wave diagnostics.

The evolution system conserves mass, momentum and energy only
approximately; each law has a density and flux pair whose residual

    R = (density(cur) - density(prev)) / dt + div(flux(prev))

quantifies the defect. Temporal derivatives (including the ones embedded
in the momentum and energy fluxes) use forward differences of stored
sample pairs; spatial derivatives are spectral. An alternative mode
substitutes exact semi-discrete tendencies for the forward differences,
which isolates the law defect from the sampling truncation in
convergence studies.

Densities and fluxes, with g = (beta/2)(theta^2 - 1/3):

    mass:      M = 1 + alpha*eta
               q_x = alpha*[u*(1 + alpha*eta) + g*Lap(u)]
    momentum:  I_x = (1 + alpha*eta)*u + g*Lap(u)
               F_xx = eta + alpha*u^2 + (alpha/2)*eta^2 - (beta/3)*div_t
               F_xy = alpha*u*v
    energy:    E = (u^2 + v^2 + eta^2)/2 + g*(u*Lap(u) + v*Lap(v))
                   + (beta/6)*div^2 + (alpha/2)*eta*(u^2 + v^2)
               q_Ex = (alpha/2)*(u^3 + v^2*u) + alpha*eta^2*u + eta*u
                      + g*eta*Lap(u) - (beta/3)*u*div_t

where div = u_x + v_y and div_t its forward time difference. The
constant offset that formally appears inside the momentum flux is
omitted: its spatial derivative vanishes identically.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError, UsageError
from .model import rhs
from .spectral import from_spectral, grid_integral, to_spectral

__all__ = [
    "BalanceSample", "ResidualSeries", "AmplitudeTrack",
    "mass_residual", "momentum_residual_x", "momentum_residual_y",
    "energy_residual", "balance_residuals", "ResidualObserver",
    "leading_wave_amplitude", "AmplitudeObserver", "fit_decay_exponent",
    "reconstruct_velocity_at_level", "dynamic_pressure", "dimensionalize",
]


# ---------------------------------------------------------------------------
# residual sample bookkeeping

@dataclass(frozen=True)
class BalanceSample:
    """Per-sample reductions of the four residual fields."""

    t: float
    r_mass: float
    r_momx: float
    r_momy: float
    r_energy: float
    # secondary reductions, kept for robustness checks
    r_mass_l2: float = math.nan
    r_momx_l2: float = math.nan
    r_momy_l2: float = math.nan
    r_energy_l2: float = math.nan
    mass_integral: float = math.nan

    def __post_init__(self):
        for name in ("r_mass", "r_momx", "r_momy", "r_energy"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0.0):
                raise UsageError(f"{name} must be finite and >= 0, got {v}")


class ResidualSeries:
    """Time-ordered residual samples plus their running per-law maxima."""

    def __init__(self):
        self.samples: list[BalanceSample] = []

    def append(self, sample):
        if self.samples and sample.t <= self.samples[-1].t:
            raise UsageError(
                f"sample times must increase: {sample.t} after {self.samples[-1].t}")
        self.samples.append(sample)

    def __len__(self):
        return len(self.samples)

    def summary(self):
        """Componentwise maxima over time, as a dict keyed by law."""
        if not self.samples:
            raise UsageError("empty residual series has no summary")
        return {
            "r_mass": max(s.r_mass for s in self.samples),
            "r_momx": max(s.r_momx for s in self.samples),
            "r_momy": max(s.r_momy for s in self.samples),
            "r_energy": max(s.r_energy for s in self.samples),
        }

    def max_momentum(self):
        """Maximum over both momentum components (the reported scalar)."""
        m = self.summary()
        return max(m["r_momx"], m["r_momy"])


@dataclass
class AmplitudeTrack:
    """Leading-wave amplitude history with the window used for decay fits."""

    times: list[float] = field(default_factory=list)
    amplitudes: list[float] = field(default_factory=list)
    radii: list[float] = field(default_factory=list)
    fit_window: tuple[float, float] = (4.0, 10.0)
    fitted_exponent: float | None = None

    def append(self, t, radius, amplitude):
        if amplitude <= 0.0:
            raise UsageError(f"amplitudes must be positive, got {amplitude}")
        self.times.append(t)
        self.radii.append(radius)
        self.amplitudes.append(amplitude)


# ---------------------------------------------------------------------------
# residual fields

class _StateDerivs:
    """Per-state derivatives, densities and static flux parts.

    Everything here depends on one state (and the parameters) only, so an
    observer walking consecutive sample pairs computes it once per state.
    The pair-dependent pieces (time differences and the div_t flux
    contributions) stay in :func:`balance_residuals`.
    """

    __slots__ = ("lap_u", "lap_v", "div", "ix", "iy", "e_dens",
                 "fxx_s", "fyy_s", "fxy", "qex_s", "qey_s")

    def __init__(self, s, p):
        grid = s.grid
        eta, u, v = s.eta, s.u, s.v
        alpha, beta = p.alpha, p.beta
        gam = 0.5 * beta * (p.theta2 - 1.0 / 3.0)
        uv_hat = to_spectral(grid, np.stack((u, v)))
        k2 = grid._k2
        spectra = np.stack((-k2 * uv_hat[0], -k2 * uv_hat[1],
                            grid._ikx * uv_hat[0] + grid._iky * uv_hat[1]))
        self.lap_u, self.lap_v, self.div = from_spectral(grid, spectra)

        u2 = u * u
        v2 = v * v
        eta2 = eta * eta
        u2v2 = u2 + v2
        one_ae = 1.0 + alpha * eta
        self.ix = one_ae * u + gam * self.lap_u      # momentum density, x
        self.iy = one_ae * v + gam * self.lap_v
        self.e_dens = (0.5 * (u2v2 + eta2)
                       + gam * (u * self.lap_u + v * self.lap_v)
                       + (beta / 6.0) * self.div * self.div
                       + 0.5 * alpha * eta * u2v2)
        diag = eta + 0.5 * alpha * eta2              # shared diagonal flux part
        self.fxx_s = diag + alpha * u2
        self.fyy_s = diag + alpha * v2
        self.fxy = alpha * u * v
        inner = 0.5 * alpha * u2v2 + alpha * eta2 + eta
        geta = gam * eta
        self.qex_s = u * inner + geta * self.lap_u
        self.qey_s = v * inner + geta * self.lap_v


def _check_pair(prev, cur, dt_s):
    if prev.grid != cur.grid:
        raise UsageError("state pair lives on different grids")
    if dt_s == 0.0:
        same = (np.array_equal(prev.eta, cur.eta)
                and np.array_equal(prev.u, cur.u)
                and np.array_equal(prev.v, cur.v))
        if not same:
            raise UsageError("dt_s = 0 is only meaningful for identical states")
    elif dt_s < 0.0:
        raise UsageError(f"dt_s must be nonnegative, got {dt_s}")


def _flux_divergence(grid, fx_hat, fy_hat):
    return from_spectral(grid, grid._ikx * fx_hat + grid._iky * fy_hat)


def _divergence(s):
    grid = s.grid
    uv_hat = to_spectral(grid, np.stack((s.u, s.v)))
    return from_spectral(grid, grid._ikx * uv_hat[0] + grid._iky * uv_hat[1])


def _time_diff(prev_field, cur_field, dt_s):
    if dt_s == 0.0:
        return np.zeros_like(prev_field)
    return (cur_field - prev_field) / dt_s


def _tendencies(prev, p, dealias):
    """Exact semi-discrete time derivatives used by the alternative mode."""
    eta_t, u_t, v_t = rhs(prev, p, dealias=dealias)
    grid = prev.grid
    ut_hat = to_spectral(grid, u_t)
    vt_hat = to_spectral(grid, v_t)
    k2 = grid._k2
    return {
        "eta_t": eta_t, "u_t": u_t, "v_t": v_t,
        "lap_ut": from_spectral(grid, -k2 * ut_hat),
        "lap_vt": from_spectral(grid, -k2 * vt_hat),
        "div_t": from_spectral(grid, grid._ikx * ut_hat + grid._iky * vt_hat),
    }


def balance_residuals(prev, cur, dt_s, p, time_derivatives="forward",
                      _prev_derivs=None, _cur_derivs=None):
    """All four residual fields (mass, momentum-x, momentum-y, energy).

    ``time_derivatives`` selects how the temporal derivatives are formed:
    "forward" (default) differences the stored pair, "exact" evaluates
    the semi-discrete tendencies at ``prev`` (``cur`` may equal ``prev``).
    Shares every spectral intermediate across the four laws.
    """
    if time_derivatives not in ("forward", "exact"):
        raise UsageError(f"unknown time_derivatives mode {time_derivatives!r}")
    if time_derivatives == "forward":
        _check_pair(prev, cur, dt_s)
    grid = prev.grid
    alpha, beta = p.alpha, p.beta
    gam = 0.5 * beta * (p.theta2 - 1.0 / 3.0)

    dp = _prev_derivs if _prev_derivs is not None else _StateDerivs(prev, p)
    eta, u, v = prev.eta, prev.u, prev.v

    if time_derivatives == "forward":
        dc = _cur_derivs if _cur_derivs is not None else _StateDerivs(cur, p)
        deta_dt = _time_diff(prev.eta, cur.eta, dt_s)
        div_t = _time_diff(dp.div, dc.div, dt_s)
        dix_dt = _time_diff(dp.ix, dc.ix, dt_s)
        diy_dt = _time_diff(dp.iy, dc.iy, dt_s)
        de_dt = _time_diff(dp.e_dens, dc.e_dens, dt_s)
    else:
        td = _tendencies(prev, p, dealias=True)
        deta_dt = td["eta_t"]
        div_t = td["div_t"]
        dix_dt = (alpha * td["eta_t"] * u + (1.0 + alpha * eta) * td["u_t"]
                  + gam * td["lap_ut"])
        diy_dt = (alpha * td["eta_t"] * v + (1.0 + alpha * eta) * td["v_t"]
                  + gam * td["lap_vt"])
        de_dt = (u * td["u_t"] + v * td["v_t"] + eta * td["eta_t"]
                 + gam * (td["u_t"] * dp.lap_u + u * td["lap_ut"]
                          + td["v_t"] * dp.lap_v + v * td["lap_vt"])
                 + (beta / 3.0) * dp.div * td["div_t"]
                 + 0.5 * alpha * (td["eta_t"] * (u * u + v * v)
                                  + 2.0 * eta * (u * td["u_t"] + v * td["v_t"])))

    # fluxes at prev; the mass fluxes are alpha times the momentum
    # densities, and div_t enters three of the remaining six
    bdiv3 = (beta / 3.0) * div_t
    f_xx = dp.fxx_s - bdiv3
    f_yy = dp.fyy_s - bdiv3
    q_ex = dp.qex_s - u * bdiv3
    q_ey = dp.qey_s - v * bdiv3
    flux_hats = to_spectral(
        grid, np.stack((dp.ix, dp.iy, f_xx, f_yy, dp.fxy, q_ex, q_ey)))
    ixh, iyh, fxxh, fyyh, fxyh, qexh, qeyh = flux_hats
    ikx, iky = grid._ikx, grid._iky
    divs = from_spectral(grid, np.stack((
        ikx * ixh + iky * iyh,            # mass flux divergence / alpha
        ikx * fxxh + iky * fxyh,
        ikx * fxyh + iky * fyyh,
        ikx * qexh + iky * qeyh,
    )))
    r_mass = alpha * (deta_dt + divs[0])
    r_momx = dix_dt + divs[1]
    r_momy = diy_dt + divs[2]
    r_energy = de_dt + divs[3]
    return r_mass, r_momx, r_momy, r_energy


def mass_residual(prev, cur, dt_s, p, time_derivatives="forward"):
    """Residual field of the mass balance law."""
    return balance_residuals(prev, cur, dt_s, p, time_derivatives)[0]


def momentum_residual_x(prev, cur, dt_s, p, time_derivatives="forward"):
    """Residual field of the x-momentum balance law."""
    return balance_residuals(prev, cur, dt_s, p, time_derivatives)[1]


def momentum_residual_y(prev, cur, dt_s, p, time_derivatives="forward"):
    """Residual field of the y-momentum balance law."""
    return balance_residuals(prev, cur, dt_s, p, time_derivatives)[2]


def energy_residual(prev, cur, dt_s, p, time_derivatives="forward"):
    """Residual field of the energy balance law."""
    return balance_residuals(prev, cur, dt_s, p, time_derivatives)[3]


class ResidualObserver:
    """Collects a ResidualSeries during a run.

    Reuses the previous sample's spectral derivatives whenever the runner
    hands back the same state object, which it does at stride cadence.
    """

    def __init__(self, p, time_derivatives="forward"):
        self.p = p
        self.time_derivatives = time_derivatives
        self.series = ResidualSeries()
        self._last_state = None
        self._last_derivs = None

    def __call__(self, prev, cur, dt_s):
        grid = prev.grid
        if prev is self._last_state and self._last_derivs is not None:
            dp = self._last_derivs
        else:
            dp = _StateDerivs(prev, self.p)
        dc = _StateDerivs(cur, self.p)
        r_mass, r_momx, r_momy, r_energy = balance_residuals(
            prev, cur, dt_s, self.p, self.time_derivatives,
            _prev_derivs=dp, _cur_derivs=dc)
        area = grid.lx * grid.ly
        self.series.append(BalanceSample(
            t=cur.t,
            r_mass=float(np.abs(r_mass).max()),
            r_momx=float(np.abs(r_momx).max()),
            r_momy=float(np.abs(r_momy).max()),
            r_energy=float(np.abs(r_energy).max()),
            r_mass_l2=_l2(grid, r_mass, area),
            r_momx_l2=_l2(grid, r_momx, area),
            r_momy_l2=_l2(grid, r_momy, area),
            r_energy_l2=_l2(grid, r_energy, area),
            mass_integral=grid_integral(grid, r_mass),
        ))
        self._last_state = cur
        self._last_derivs = dc


def _l2(grid, f, area):
    return float(np.sqrt(grid_integral(grid, f * f) / area))


# ---------------------------------------------------------------------------
# leading-wave tracking

def leading_wave_amplitude(s, exclude_radius=None):
    """Radius and height of the outermost expanding crest, or None.

    Scans the +x ray from the domain center for the outermost local
    maximum (quadratically refined between samples) and reports the field
    maximum over all grid points farther out than that radius, so the
    crest height is picked up at whatever angle the grid samples it best.
    Ripples below one thousandth of the field maximum do not count as
    crests (far-field rounding noise must not win over the true front),
    and a central disk of radius 1 is excluded once t > 1 so the residual
    rebound at the origin is never mistaken for the outgoing wave. Flat
    fields return None ("no wave"); a field whose only maximum is the
    center, such as the initial heap, reports radius 0 and the global
    maximum.
    """
    grid = s.grid
    eta = s.eta
    if np.ptp(eta) == 0.0:
        return None
    if exclude_radius is None:
        exclude_radius = 1.0 if s.t > 1.0 else 0.0
    cx, cy = grid.center()
    ic = int(np.argmin(np.abs(grid.x - cx)))
    jc = int(np.argmin(np.abs(grid.y - cy)))
    ray = eta[jc, ic:]
    r_ray = grid.x[ic:] - grid.x[ic]
    prominence = 1e-3 * float(np.abs(eta).max())

    outer = None
    for i in range(len(ray) - 2, 0, -1):
        if r_ray[i] <= exclude_radius:
            break
        if (ray[i] > ray[i - 1] and ray[i] >= ray[i + 1]
                and ray[i] >= prominence):
            outer = i
            break

    rr = np.hypot(grid.x[np.newaxis, :] - cx, grid.y[:, np.newaxis] - cy)
    if outer is None:
        flat_idx = int(np.argmax(eta))
        j, i = np.unravel_index(flat_idx, eta.shape)
        return float(rr[j, i]), float(eta[j, i])

    fm, f0, fp = ray[outer - 1], ray[outer], ray[outer + 1]
    denom = fm - 2.0 * f0 + fp
    delta = 0.5 * (fm - fp) / denom if denom != 0.0 else 0.0
    r_min = r_ray[outer] + delta * grid.dx

    region = rr > r_min
    if not region.any():
        return float(r_ray[outer]), float(f0)
    masked = np.where(region, eta, -np.inf)
    flat_idx = int(np.argmax(masked))
    j, i = np.unravel_index(flat_idx, eta.shape)
    return float(rr[j, i]), float(eta[j, i])


class AmplitudeObserver:
    """Tracks the leading-wave amplitude every ``stride``-th observer call."""

    def __init__(self, fit_window=(4.0, 10.0), stride=10):
        self.track = AmplitudeTrack(fit_window=fit_window)
        self.stride = max(1, int(stride))
        self._calls = 0

    def __call__(self, prev, cur, dt_s):
        self._calls += 1
        if self._calls % self.stride:
            return
        found = leading_wave_amplitude(cur)
        if found is None:
            return
        radius, amplitude = found
        if amplitude > 0.0:
            self.track.append(cur.t, radius, amplitude)


def fit_decay_exponent(track):
    """Least-squares slope of log(amplitude) against log(t) in the window."""
    t_lo, t_hi = track.fit_window
    ts, amps = [], []
    for t, a in zip(track.times, track.amplitudes):
        if t_lo <= t <= t_hi:
            if t <= 0.0 or a <= 0.0:
                raise UsageError("decay fit needs positive times and amplitudes")
            ts.append(t)
            amps.append(a)
    if len(ts) < 5:
        raise UsageError(
            f"decay fit needs at least 5 samples in window {track.fit_window}, "
            f"got {len(ts)}")
    slope = np.polyfit(np.log(ts), np.log(amps), 1)[0]
    return float(slope)


# ---------------------------------------------------------------------------
# vertical structure

def reconstruct_velocity_at_level(s, p, theta_from2, theta_to2):
    """Map (u, v) between relative heights in the fluid column.

    Composes the inversion down to the bottom velocity (series truncated
    at beta^2) with the forward expansion up to the target level; equal
    levels round-trip to within O(beta^3).
    """
    for name, level in (("theta_from2", theta_from2), ("theta_to2", theta_to2)):
        if not 0.0 <= level <= 1.0:
            raise ParameterError(f"{name} must lie in [0, 1], got {level}")
    if p.beta == 0.0:
        return s.u.copy(), s.v.copy()
    grid = s.grid
    bk2 = p.beta * grid._k2
    down = 1.0 - 0.5 * theta_from2 * bk2 + (5.0 / 24.0) * theta_from2 ** 2 * bk2 ** 2
    up = 1.0 + 0.5 * theta_to2 * bk2 + (1.0 / 24.0) * theta_to2 ** 2 * bk2 ** 2
    mult = up * down
    u_new = from_spectral(grid, to_spectral(grid, s.u) * mult)
    v_new = from_spectral(grid, to_spectral(grid, s.v) * mult)
    return u_new, v_new


def dynamic_pressure(s, p, z, prev, dt_s):
    """Pressure above hydrostatic at relative depth z in [0, 1 + alpha*eta].

    P' = eta + (beta/2)(z^2 - 1) * (u_xt + v_yt), with the mixed
    derivative formed as the forward time difference of the velocity
    divergence between ``prev`` and ``s``.
    """
    z_top = 1.0 + p.alpha * float(s.eta.max())
    if not 0.0 <= z <= z_top:
        raise ParameterError(f"z must lie in [0, {z_top}], got {z}")
    if prev.grid != s.grid:
        raise UsageError("state pair lives on different grids")
    div_cur = _divergence(s)
    if prev is s or dt_s == 0.0:
        div_t = np.zeros_like(div_cur)
    else:
        div_t = (div_cur - _divergence(prev)) / dt_s
    return s.eta + 0.5 * p.beta * (z * z - 1.0) * div_t


_DIMENSION_KINDS = ("length_x", "elevation", "velocity", "time")


def dimensionalize(value, kind, h0, g, A, l):
    """Convert one nondimensional value back to physical units.

    Scalings: x = l*x~, eta = A*eta~, U = (A/h0)*sqrt(g*h0)*U~,
    t = l*t~/sqrt(g*h0).
    """
    for name, val in (("h0", h0), ("g", g), ("A", A), ("l", l)):
        if val <= 0.0:
            raise ParameterError(f"{name} must be positive, got {val}")
    if kind == "length_x":
        return l * value
    if kind == "elevation":
        return A * value
    if kind == "velocity":
        return (A / h0) * math.sqrt(g * h0) * value
    if kind == "time":
        return l * value / math.sqrt(g * h0)
    raise UsageError(f"unknown kind {kind!r}; expected one of {_DIMENSION_KINDS}")
