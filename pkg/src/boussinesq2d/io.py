"""Snapshot, checkpoint and CSV persistence.

Snapshot files are a fixed little-endian binary layout:

    magic   4 bytes         "BSQ1"
    header  2 x uint32      nx, ny
            10 x float64    lx, ly, x0, y0, t, alpha, beta, theta2,
                            lambda, mu
    payload 3*nx*ny float64 eta, u, v concatenated row-major

so read(write(state)) reproduces the state bitwise. A checkpoint is a
snapshot with the SHA-256 of the canonical configuration text appended;
resuming verifies the hash before trusting the state. All writers go
through a temp-file rename, so aborted runs never leave partial files
under the final name.
"""
from __future__ import annotations

import hashlib
import os
import struct
import tempfile

import numpy as np

from .config import print_config
from .diagnostics import BalanceSample, ResidualSeries
from .errors import ConfigError, UsageError
from .model import State
from .spectral import make_grid

__all__ = [
    "MAGIC", "write_snapshot", "read_snapshot",
    "write_checkpoint", "read_checkpoint", "config_digest",
    "write_residual_csv", "read_residual_csv",
    "write_amplitude_csv", "read_amplitude_csv",
    "write_sweep_csv", "atomic_write_bytes", "atomic_write_text",
]

MAGIC = b"BSQ1"
_HEADER = struct.Struct("<4sII10d")
_DIGEST_BYTES = 32


def atomic_write_bytes(path, payload):
    """Write bytes under a temporary name, then rename into place."""
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-bsq-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def atomic_write_text(path, text):
    atomic_write_bytes(path, text.encode("utf-8"))


def _snapshot_bytes(state, p):
    grid = state.grid
    header = _HEADER.pack(MAGIC, grid.nx, grid.ny, grid.lx, grid.ly,
                          grid.x0, grid.y0, state.t, p.alpha, p.beta,
                          p.theta2, p.lam, p.mu)
    payload = b"".join(
        np.ascontiguousarray(f, dtype="<f8").tobytes()
        for f in (state.eta, state.u, state.v))
    return header + payload


def write_snapshot(path, state, p):
    """Persist one state, bit-exactly."""
    atomic_write_bytes(path, _snapshot_bytes(state, p))


def _parse_snapshot(blob, path):
    if len(blob) < _HEADER.size:
        raise ConfigError(f"{path}: truncated snapshot header")
    fields = _HEADER.unpack_from(blob)
    if fields[0] != MAGIC:
        raise ConfigError(f"{path}: bad magic {fields[0]!r}, expected {MAGIC!r}")
    nx, ny = fields[1], fields[2]
    lx, ly, x0, y0, t, alpha, beta, theta2, lam, mu = fields[3:]
    expected = _HEADER.size + 3 * nx * ny * 8
    if len(blob) != expected:
        raise ConfigError(
            f"{path}: payload is {len(blob) - _HEADER.size} bytes, "
            f"expected {expected - _HEADER.size}")
    grid = make_grid(nx, ny, lx, ly, x0, y0)
    n = nx * ny
    data = np.frombuffer(blob, dtype="<f8", offset=_HEADER.size)
    eta = data[:n].reshape(ny, nx).copy()
    u = data[n:2 * n].reshape(ny, nx).copy()
    v = data[2 * n:].reshape(ny, nx).copy()
    header = {"t": t, "alpha": alpha, "beta": beta, "theta2": theta2,
              "lambda": lam, "mu": mu}
    return State(grid, eta, u, v, t), header


def read_snapshot(path):
    """Load a snapshot; returns (state, header dict with the parameters)."""
    with open(path, "rb") as fh:
        blob = fh.read()
    return _parse_snapshot(blob, path)


def config_digest(cfg):
    return hashlib.sha256(print_config(cfg).encode("utf-8")).digest()


def write_checkpoint(path, state, p, cfg):
    """Snapshot plus the configuration digest, for safe restarts."""
    atomic_write_bytes(path, _snapshot_bytes(state, p) + config_digest(cfg))


def read_checkpoint(path, cfg):
    """Load a checkpoint, verifying it belongs to this configuration."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _DIGEST_BYTES:
        raise ConfigError(f"{path}: truncated checkpoint")
    stored = blob[-_DIGEST_BYTES:]
    if stored != config_digest(cfg):
        raise ConfigError(
            f"{path}: checkpoint was written by a different configuration")
    state, _ = _parse_snapshot(blob[:-_DIGEST_BYTES], path)
    return state


# ---------------------------------------------------------------------------
# CSV emission

_RESIDUAL_HEADER = "t,r_mass,r_momx,r_momy,r_energy"


def _g17(x):
    return format(x, ".17g")


def write_residual_csv(series, path):
    """Header, one row per sample, and a '#max' summary row."""
    if not len(series):
        raise UsageError("refusing to write an empty residual series")
    lines = [_RESIDUAL_HEADER]
    for s in series.samples:
        lines.append(",".join(_g17(v) for v in
                              (s.t, s.r_mass, s.r_momx, s.r_momy, s.r_energy)))
    m = series.summary()
    lines.append("#max," + ",".join(_g17(m[k]) for k in
                                    ("r_mass", "r_momx", "r_momy", "r_energy")))
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_residual_csv(path):
    """Inverse of write_residual_csv (summary row is recomputed)."""
    series = ResidualSeries()
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != _RESIDUAL_HEADER:
        raise ConfigError(f"{path}: missing residual CSV header")
    for line in lines[1:]:
        if not line or line.startswith("#"):
            continue
        parts = line.split(",")
        if len(parts) != 5:
            raise ConfigError(f"{path}: malformed row {line!r}")
        t, rm, rx, ry, re_ = (float(p) for p in parts)
        series.append(BalanceSample(t=t, r_mass=rm, r_momx=rx, r_momy=ry,
                                    r_energy=re_))
    return series


def write_residual_l2_csv(series, path):
    """Companion file with the L2 reductions of the same samples."""
    if not len(series):
        raise UsageError("refusing to write an empty residual series")
    lines = ["t,r_mass_l2,r_momx_l2,r_momy_l2,r_energy_l2,mass_integral"]
    for s in series.samples:
        lines.append(",".join(_g17(v) for v in
                              (s.t, s.r_mass_l2, s.r_momx_l2, s.r_momy_l2,
                               s.r_energy_l2, s.mass_integral)))
    atomic_write_text(path, "\n".join(lines) + "\n")


def write_amplitude_csv(track, path):
    lines = ["t,radius,amplitude"]
    for t, r, a in zip(track.times, track.radii, track.amplitudes):
        lines.append(f"{_g17(t)},{_g17(r)},{_g17(a)}")
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_amplitude_csv(path):
    """Accepts (t, amplitude) or (t, radius, amplitude) columns."""
    times, amps = [], []
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ConfigError(f"{path}: empty amplitude CSV")
    for line in lines[1:]:
        if not line or line.startswith("#"):
            continue
        parts = line.split(",")
        if len(parts) not in (2, 3):
            raise ConfigError(f"{path}: malformed row {line!r}")
        times.append(float(parts[0]))
        amps.append(float(parts[-1]))
    return times, amps


def write_sweep_csv(rows, slopes, path):
    """Residual maxima per shared-amplitude value, plus fitted slopes.

    rows: iterable of (alpha, r_mass, r_momentum, r_energy);
    slopes: (mass_slope, momentum_slope, energy_slope).
    """
    lines = ["alpha,r_mass,r_momentum,r_energy"]
    for row in rows:
        lines.append(",".join(_g17(v) for v in row))
    lines.append("#slope," + ",".join(_g17(v) for v in slopes))
    atomic_write_text(path, "\n".join(lines) + "\n")
