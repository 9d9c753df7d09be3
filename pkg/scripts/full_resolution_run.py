#!/usr/bin/env python3
"""Single full-resolution run (400^2, dt = 1e-4, T = 10) at alpha = beta = 0.3.

Expect hours of runtime. Emits snapshots, residual and amplitude CSVs,
and a final checkpoint into --out (default full_res_out). For the whole
six-amplitude table at this resolution use `bsq2d sweep
configs/paper_table1.cfg --alphas 0.05,0.10,0.15,0.20,0.25,0.30`.
"""
import sys
from pathlib import Path

from boussinesq2d.cli import main

ROOT = Path(__file__).resolve().parent.parent

if __name__ == "__main__":
    out = sys.argv[1] if len(sys.argv) > 1 else "full_res_out"
    sys.exit(main([
        "simulate", str(ROOT / "configs" / "paper_table1.cfg"),
        "--out", out,
    ]))
