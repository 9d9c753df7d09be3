#!/usr/bin/env python3
"""Tabulate omega(|k|) for the default parameters and verify one mode
against a linearized time integration (seconds of runtime)."""
import sys
from pathlib import Path

from boussinesq2d.cli import main

ROOT = Path(__file__).resolve().parent.parent

if __name__ == "__main__":
    out = sys.argv[1] if len(sys.argv) > 1 else "dispersion.csv"
    code = main(["dispersion", str(ROOT / "configs" / "desk.cfg"),
                 "--kmax", "10", "--n", "100", "--out", out])
    if code == 0:
        code = main(["simulate", str(ROOT / "configs" / "dispersion_check.cfg"),
                     "--out", "dispersion_check_out"])
    sys.exit(code)
