"""Stability scans and the speed-up table, written as CSV through the command-line driver."""

import argparse
from pathlib import Path

from mrkc.cli import main as mrkc

RUNS = {
    "scan_scalar": ["scan", "scalar"],
    "scan_phi_window": ["scan", "phi-window"],
    "scan_phi_continuous": ["scan", "phi-continuous"],
    "scan_two_by_two": ["scan", "two-by-two"],
    "scan_two_by_two_eta090": ["scan", "two-by-two", "--eta-factor", "0.9"],
    "scan_splitting_tau0.01": ["scan", "splitting", "--tau", "0.01"],
    "scan_splitting_tau0.05": ["scan", "splitting", "--tau", "0.05"],
    "speedup": ["speedup", "--ratios", "4,16,64", "--cf-points", "101"],
}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--outdir", default="results")
    args = ap.parse_args()
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    for name, argv in RUNS.items():
        print(f"[{name}]")
        code = mrkc(argv + ["--out", str(out / f"{name}.csv")])
        if code:
            raise SystemExit(code)


if __name__ == "__main__":
    main()
