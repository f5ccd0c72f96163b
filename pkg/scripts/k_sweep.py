#!/usr/bin/env python3
"""Sweep the sweep-rate multiplier K and tabulate both criteria.

Writes out/k_sweep/summary.csv with one row per K: ratios, verdicts and the
observed minimum fidelity over a fixed tau window.

Usage: python3 scripts/k_sweep.py [outdir]
"""
import sys
import tempfile
from pathlib import Path

from qgplab.cli import main

CONFIG = """
[model]
name = rotating_spin
eta = 1.0
xi = 0.05
k = 1.0

[run]
tau_start = 0.0
tau_end = 0.05
samples = 1024
level = upper
tol = 1e-9

[conditions]
delta = 0.1

[output]
dir = {out}

[sweep]
k = 0.25,0.5,1.0,2.0,5.0,20.0,50.0,200.0
"""

if __name__ == "__main__":
    out = sys.argv[1] if len(sys.argv) > 1 else "out/k_sweep"
    with tempfile.NamedTemporaryFile("w", suffix=".ini", delete=False) as fh:
        fh.write(CONFIG.format(out=out))
        config_path = fh.name
    code = main(["sweep", "--config", config_path])
    Path(config_path).unlink()
    sys.exit(code)
