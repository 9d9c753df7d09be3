#!/usr/bin/env python3
"""Reproduce the residual-maxima table at desk scale (256^2, dt = 1e-3).

Takes tens of minutes; writes sweep.csv plus per-amplitude residual and
amplitude CSVs into --out. Use BSQ2D_THREADS or --jobs to run the six
simulations in parallel.
"""
import sys
from pathlib import Path

from boussinesq2d.cli import main

ROOT = Path(__file__).resolve().parent.parent

if __name__ == "__main__":
    out = sys.argv[1] if len(sys.argv) > 1 else "sweep_out"
    sys.exit(main([
        "sweep", str(ROOT / "configs" / "desk.cfg"),
        "--alphas", "0.05,0.10,0.15,0.20,0.25,0.30",
        "--out", out,
    ]))
