"""Temporal convergence on the refined-grid heat equation and the integro-differential problem."""

import argparse
from pathlib import Path

from mrkc.cli import run_convergence
from mrkc.integrators import integrate
from mrkc.problems import integro_differential_system, refined_heat_1d
from mrkc.records import dataclass_rows, observed_order, write_csv


def study(name, prob, y_ref, taus, mrkc_mode, out):
    for method, mode in (("rkc", "strict"), ("mrkc", mrkc_mode)):
        recs = run_convergence(prob, method, mode, taus, y_ref)
        write_csv(out / f"{name}_convergence_{method}.csv", *dataclass_rows(recs))
        order = observed_order(taus, [r.err for r in recs])
        evals = [r.n_slow_evals for r in recs]
        print(f"{name} {method}: observed order {order:.3f}, slow evaluations {evals}")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--outdir", default="results")
    args = ap.parse_args()
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)

    heat = refined_heat_1d()
    study("heat", heat, heat.exact(heat.t_end), [2.0**-k for k in range(4, 9)], "relaxed", out)

    intdiff = integro_differential_system()
    ref = integrate(intdiff.system, intdiff.y0, 0.0, intdiff.t_end, 2.0**-14, method="rkc",
                    keep_trajectory=False).y
    study("intdiff", intdiff, ref, [2.0**-k for k in range(2, 8)], "strict", out)


if __name__ == "__main__":
    main()
