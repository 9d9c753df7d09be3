"""Run configuration: dataclass, defaults, and the key = value file grammar.

A configuration file is UTF-8 text, one ``key = value`` per line with
``#`` comments. Unknown and duplicate keys are rejected. Only ``alpha``
and ``beta`` are required; everything else has the documented default.
``print_config``/``parse_config`` round-trip field-exactly (floats are
written with shortest round-trip repr).
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Union

from .errors import ConfigError
from .model import ModelParams
from .spectral import make_grid

__all__ = ["GaussianIC", "PlaneWaveIC", "FromFileIC", "SimConfig",
           "parse_config", "print_config", "replace"]


@dataclass(frozen=True)
class GaussianIC:
    """eta = amplitude * exp(-r^2 / width) centered in the domain, u = v = 0."""
    amplitude: float = 1.0
    width: float = 5.0


@dataclass(frozen=True)
class PlaneWaveIC:
    """A rightward-traveling small-amplitude wave; k must be grid-resonant."""
    kx: float
    ky: float
    amplitude: float


@dataclass(frozen=True)
class FromFileIC:
    """Fields loaded from a stored snapshot; time restarts at zero."""
    path: str


InitialCondition = Union[GaussianIC, PlaneWaveIC, FromFileIC]


@dataclass(frozen=True)
class SimConfig:
    """Everything a run needs; deterministic (no seeds anywhere)."""

    alpha: float
    beta: float
    nx: int = 256
    ny: int = 256
    lx: float = 40.0
    ly: float = 40.0
    x0: float = -20.0
    y0: float = -20.0
    theta2: float = 9.0 / 11.0
    lam: float = 0.0
    mu: float = 0.0
    linearized: bool = False
    dt: float = 1e-3
    t_end: float = 10.0
    output_stride: int = 1
    snapshot_stride: int = 1000
    initial_condition: InitialCondition = field(default_factory=GaussianIC)
    dealias: bool = True

    def __post_init__(self):
        if self.dt <= 0.0:
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if self.t_end <= 0.0:
            raise ConfigError(f"t_end must be positive, got {self.t_end}")
        if self.output_stride < 1:
            raise ConfigError(f"output_stride must be >= 1, got {self.output_stride}")
        if self.snapshot_stride < 1:
            raise ConfigError(f"snapshot_stride must be >= 1, got {self.snapshot_stride}")
        n = round(self.t_end / self.dt)
        if n < 1 or abs(n * self.dt - self.t_end) > 1e-9 * max(1.0, self.t_end):
            raise ConfigError(
                f"t_end={self.t_end} must be an integer multiple of dt={self.dt}")

    @property
    def n_steps(self):
        return round(self.t_end / self.dt)

    def params(self):
        return ModelParams(alpha=self.alpha, beta=self.beta, theta2=self.theta2,
                           lam=self.lam, mu=self.mu, linearized=self.linearized)

    def grid(self):
        return make_grid(self.nx, self.ny, self.lx, self.ly, self.x0, self.y0)


def _fmt_float(x):
    return repr(float(x))


def _fmt_bool(x):
    return "true" if x else "false"


def _fmt_ic(ic):
    if isinstance(ic, GaussianIC):
        return f"gaussian({_fmt_float(ic.amplitude)}, {_fmt_float(ic.width)})"
    if isinstance(ic, PlaneWaveIC):
        return (f"plane_wave({_fmt_float(ic.kx)}, {_fmt_float(ic.ky)}, "
                f"{_fmt_float(ic.amplitude)})")
    if isinstance(ic, FromFileIC):
        return f"from_file({ic.path})"
    raise ConfigError(f"unknown initial condition type {type(ic)!r}")


# file key -> (dataclass attribute, parser tag)
_KEYS = {
    "alpha": ("alpha", "float"),
    "beta": ("beta", "float"),
    "nx": ("nx", "int"),
    "ny": ("ny", "int"),
    "lx": ("lx", "float"),
    "ly": ("ly", "float"),
    "x0": ("x0", "float"),
    "y0": ("y0", "float"),
    "theta2": ("theta2", "float"),
    "lambda": ("lam", "float"),
    "mu": ("mu", "float"),
    "linearized": ("linearized", "bool"),
    "dt": ("dt", "float"),
    "t_end": ("t_end", "float"),
    "output_stride": ("output_stride", "int"),
    "snapshot_stride": ("snapshot_stride", "int"),
    "initial_condition": ("initial_condition", "ic"),
    "dealias": ("dealias", "bool"),
}

_ATTR_TO_KEY = {attr: key for key, (attr, _) in _KEYS.items()}


def _parse_value(key, tag, raw, lineno):
    where = f"line {lineno}, key '{key}'"
    if tag == "float":
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"{where}: expected a number, got {raw!r}") from None
    if tag == "int":
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"{where}: expected an integer, got {raw!r}") from None
    if tag == "bool":
        low = raw.lower()
        if low in ("true", "yes", "on", "1"):
            return True
        if low in ("false", "no", "off", "0"):
            return False
        raise ConfigError(f"{where}: expected true/false, got {raw!r}")
    if tag == "ic":
        return _parse_ic(raw, where)
    raise AssertionError(tag)


def _parse_ic(raw, where):
    raw = raw.strip()
    if "(" not in raw or not raw.endswith(")"):
        raise ConfigError(f"{where}: expected name(args), got {raw!r}")
    name, _, inner = raw[:-1].partition("(")
    name = name.strip()
    if name == "from_file":
        path = inner.strip()
        if not path:
            raise ConfigError(f"{where}: from_file needs a path")
        return FromFileIC(path)
    parts = [p.strip() for p in inner.split(",")] if inner.strip() else []
    try:
        nums = [float(p) for p in parts]
    except ValueError:
        raise ConfigError(f"{where}: non-numeric argument in {raw!r}") from None
    if name == "gaussian":
        if len(nums) != 2:
            raise ConfigError(f"{where}: gaussian takes (amplitude, width)")
        return GaussianIC(*nums)
    if name == "plane_wave":
        if len(nums) != 3:
            raise ConfigError(f"{where}: plane_wave takes (kx, ky, amplitude)")
        return PlaneWaveIC(*nums)
    raise ConfigError(f"{where}: unknown initial condition {name!r}")


def parse_config(text):
    """Parse a configuration document into a validated SimConfig."""
    entries = {}
    for lineno, rawline in enumerate(text.splitlines(), start=1):
        line = rawline.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {rawline!r}")
        if key not in _KEYS:
            raise ConfigError(f"line {lineno}: unknown key '{key}'")
        if key in entries:
            raise ConfigError(f"line {lineno}: duplicate key '{key}'")
        entries[key] = (lineno, value)

    for required in ("alpha", "beta"):
        if required not in entries:
            raise ConfigError(f"missing required key '{required}'")

    kwargs = {}
    for key, (lineno, value) in entries.items():
        attr, tag = _KEYS[key]
        kwargs[attr] = _parse_value(key, tag, value, lineno)

    cfg = SimConfig(**kwargs)
    # surface grid and parameter problems at parse time, with the key named
    try:
        cfg.grid()
    except ValueError as e:
        raise ConfigError(f"invalid grid configuration: {e}") from None
    try:
        cfg.params()
    except ValueError as e:
        raise ConfigError(f"invalid model parameters: {e}") from None
    return cfg


def print_config(cfg):
    """Canonical text form; parse_config(print_config(cfg)) == cfg."""
    lines = []
    for key, (attr, tag) in _KEYS.items():
        val = getattr(cfg, attr)
        if tag == "float":
            text = _fmt_float(val)
        elif tag == "int":
            text = str(int(val))
        elif tag == "bool":
            text = _fmt_bool(val)
        else:
            text = _fmt_ic(val)
        lines.append(f"{key} = {text}")
    return "\n".join(lines) + "\n"
