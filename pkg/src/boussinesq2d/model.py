"""The four-parameter (a-b-c-d) family of 2D Boussinesq systems.

Evolution variables are the scaled free-surface elevation eta and the
horizontal velocity components (u, v) sampled at a relative height
theta in the fluid column. The coefficients derive from theta^2 and two
free weights (lambda, mu):

    a = (1 - theta^2)/2 * mu        b = (1 - theta^2)/2 * (1 - mu)
    c = (theta^2 - 1/3)/2 * lambda  d = (theta^2 - 1/3)/2 * (1 - lambda)

b >= 0 and d >= 0 keep the implicit operators (1 - beta*b*Lap) and
(1 - beta*d*Lap) invertible, which is what makes the time derivatives
explicitly computable by spectral division.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
import math

import numpy as np

from .errors import (BlowUpError, NumericsError, ParameterError,
                     UnsupportedRegimeError, UsageError)
from .spectral import GridSpec, from_spectral, to_spectral

__all__ = ["ModelParams", "State", "derive_abcd", "rhs", "rk4_step",
           "dispersion_omega"]


def derive_abcd(theta2, lam, mu):
    """Coefficients (a, b, c, d) from the height parameter and free weights."""
    if not 0.0 <= theta2 <= 1.0:
        raise ParameterError(f"theta2 must lie in [0, 1], got {theta2}")
    a = 0.5 * (1.0 - theta2) * mu
    b = 0.5 * (1.0 - theta2) * (1.0 - mu)
    c = 0.5 * (theta2 - 1.0 / 3.0) * lam
    d = 0.5 * (theta2 - 1.0 / 3.0) * (1.0 - lam)
    if b < 0.0 or d < 0.0:
        raise UnsupportedRegimeError(
            f"weights give b={b}, d={d}; both must be >= 0 for invertibility")
    return a, b, c, d


@dataclass(frozen=True)
class ModelParams:
    """Nonlinearity/dispersion parameters plus the derived coefficients.

    alpha: amplitude over depth; beta: squared depth over wavelength.
    Both are accepted in [0, 1] (zero is degenerate but useful for limits
    and identity checks). ``linearized`` drops every alpha-term from the
    evolution equations.
    """

    alpha: float
    beta: float
    theta2: float = 9.0 / 11.0
    lam: float = 0.0
    mu: float = 0.0
    linearized: bool = False
    a: float = field(init=False, repr=False)
    b: float = field(init=False, repr=False)
    c: float = field(init=False, repr=False)
    d: float = field(init=False, repr=False)

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ParameterError(f"alpha must lie in [0, 1], got {self.alpha}")
        if not 0.0 <= self.beta <= 1.0:
            raise ParameterError(f"beta must lie in [0, 1], got {self.beta}")
        a, b, c, d = derive_abcd(self.theta2, self.lam, self.mu)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "d", d)


@dataclass
class State:
    """Solution triple (eta, u, v) on one grid at time t."""

    grid: GridSpec
    eta: np.ndarray
    u: np.ndarray
    v: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        for name in ("eta", "u", "v"):
            f = getattr(self, name)
            if f.shape != self.grid.shape:
                raise UsageError(
                    f"{name} has shape {f.shape}, expected {self.grid.shape}")

    @classmethod
    def zeros(cls, grid, t=0.0):
        z = lambda: np.zeros(grid.shape)
        return cls(grid, z(), z(), z(), t)

    def copy(self):
        return State(self.grid, self.eta.copy(), self.u.copy(),
                     self.v.copy(), self.t)

    def min_depth(self, p):
        """Smallest total water depth 1 + alpha*eta over the grid."""
        return 1.0 + p.alpha * float(self.eta.min())


@lru_cache(maxsize=32)
def _rhs_tables(grid, p, use_dealias):
    """Pre-combined spectral multipliers for one (grid, params) pair.

    Signs are folded in so the tendency assembly is a handful of
    multiply-adds:

        u_t = ikx * M,  v_t = iky * M,
        M   = -(eta_hat*(1 - beta*a*k2) + (alpha/2)*w_hat) / (1 + beta*b*k2)
        eta_t = -(div_hat*(1 - beta*c*k2)
                  + alpha*(ikx*eu_hat + iky*ev_hat)) / (1 + beta*d*k2)

    with the 2/3 mask burned into the product multipliers when dealiasing
    is on.
    """
    k2 = grid._k2
    inv_mom = 1.0 / (1.0 + (p.beta * p.b) * k2)
    inv_eta = 1.0 / (1.0 + (p.beta * p.d) * k2)
    keep = grid._keep if use_dealias else 1.0
    return {
        "mom_eta": -(1.0 - (p.beta * p.a) * k2) * inv_mom,
        "mom_w": (-0.5 * p.alpha) * inv_mom * keep,
        "eta_div": -(1.0 - (p.beta * p.c) * k2) * inv_eta,
        "eta_nl": (-p.alpha) * inv_eta * keep,
    }


def _rhs_hat(grid, p, eta, u, v, eta_hat, u_hat, v_hat, use_dealias, out=None):
    """Spectral tendencies; physical fields are only touched for products.

    ``out``, when given, is a (3, ny, nx//2+1) complex buffer receiving
    (eta_t, u_t, v_t).
    """
    tbl = _rhs_tables(grid, p, use_dealias)
    ikx, iky = grid._ikx, grid._iky
    if out is None:
        out = np.empty((3,) + eta_hat.shape, dtype=np.complex128)
    div_hat = ikx * u_hat + iky * v_hat
    if p.linearized:
        m = eta_hat * tbl["mom_eta"]
        np.multiply(div_hat, tbl["eta_div"], out=out[0])
    else:
        # conservative form of u*u_x + v*v_x: grad of |velocity|^2 / 2
        prods = to_spectral(grid, np.stack((u * u + v * v, eta * u, eta * v)))
        m = eta_hat * tbl["mom_eta"] + prods[0] * tbl["mom_w"]
        np.multiply(ikx * prods[1] + iky * prods[2], tbl["eta_nl"], out=out[0])
        out[0] += div_hat * tbl["eta_div"]
    np.multiply(ikx, m, out=out[1])
    np.multiply(iky, m, out=out[2])
    return out


def rhs(s, p, dealias=True):
    """Time derivatives (eta_t, u_t, v_t) of the evolution system.

    Nonlinear products are formed in physical space and, when ``dealias``
    is set, low-passed by the 2/3 rule before differentiation. The
    implicit operators are inverted mode-by-mode, so the elevation
    tendency has exactly zero mean and total mass is conserved by any
    integrator that preserves linear invariants.
    """
    grid = s.grid
    for name in ("eta", "u", "v"):
        f = getattr(s, name)
        if not np.isfinite(f).all():
            raise NumericsError(f"non-finite values in state field {name}")
    hats = to_spectral(grid, np.stack((s.eta, s.u, s.v)))
    k = _rhs_hat(grid, p, s.eta, s.u, s.v, hats[0], hats[1], hats[2], dealias)
    fields = from_spectral(grid, k)
    for name, f in zip(("eta_t", "u_t", "v_t"), fields):
        if not np.isfinite(f).all():
            raise NumericsError(f"non-finite values in tendency {name}")
    return fields[0], fields[1], fields[2]


def rk4_step(s, dt, p, dealias=True):
    """One classical four-stage fourth-order step; t advances by exactly dt.

    Stage combinations are carried in spectral space; physical stage
    fields are materialized only when the nonlinear products need them.
    Negative dt is accepted (time reversal of the system is meaningful).
    """
    if dt == 0.0:
        raise ParameterError("rk4_step requires a nonzero dt")
    grid = s.grid
    need_phys = not p.linearized
    s0 = to_spectral(grid, np.stack((s.eta, s.u, s.v)))

    def stage(w, k):
        sh = s0 + w * k
        if need_phys:
            fe, fu, fv = from_spectral(grid, sh)
        else:
            fe = fu = fv = None
        return _rhs_hat(grid, p, fe, fu, fv, sh[0], sh[1], sh[2], dealias)

    k1 = _rhs_hat(grid, p, s.eta, s.u, s.v, s0[0], s0[1], s0[2], dealias)
    k2 = stage(0.5 * dt, k1)
    k3 = stage(0.5 * dt, k2)
    k4 = stage(dt, k3)

    k2 += k3
    k2 *= 2.0
    k1 += k4
    k1 += k2
    k1 *= dt / 6.0
    k1 += s0
    fields = from_spectral(grid, k1)
    if not np.isfinite(fields).all():
        raise BlowUpError(f"non-finite fields after step from t={s.t}", t=s.t)
    return State(grid, fields[0], fields[1], fields[2], s.t + dt)


def dispersion_omega(kx, ky, p):
    """Angular frequency of a small-amplitude plane wave, or None.

    Returns the nonnegative root of

        omega^2 = |k|^2 (1 - beta*a*|k|^2)(1 - beta*c*|k|^2)
                  / ((1 + beta*b*|k|^2)(1 + beta*d*|k|^2))

    and None when omega^2 < 0 (an unstable mode; sweeps over wavenumber
    legitimately cross that boundary when a or c is positive).
    """
    k2 = kx * kx + ky * ky
    num = k2 * (1.0 - p.beta * p.a * k2) * (1.0 - p.beta * p.c * k2)
    den = (1.0 + p.beta * p.b * k2) * (1.0 + p.beta * p.d * k2)
    w2 = num / den
    if w2 < 0.0:
        return None
    return math.sqrt(w2)
