#!/usr/bin/env python3
"""Sweep the minimum X-gate time over u_max and write the ratio curve."""
import argparse

import numpy as np

from qoct import ModelParams
from qoct.fileio import write_csv
from qoct.xgate import GateProblem, min_gate_time


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--lo", type=float, default=0.05)
    ap.add_argument("--hi", type=float, default=0.5)
    ap.add_argument("--n", type=int, default=10)
    ap.add_argument("--gate", choices=["x", "y", "pt"], default="x")
    ap.add_argument("--out", default="ratios.csv")
    args = ap.parse_args()

    rows = []
    for u in np.linspace(args.lo, args.hi, args.n):
        res = min_gate_time(GateProblem(args.gate, ModelParams(u_max=float(u))),
                            with_report=False)
        rows.append((u, res.t_star, res.ratio, res.omega_eff, res.n_switch))
        print(f"u_max={u:.3f}  T*/T_Rabi={res.ratio:.4f}  "
              f"omega_eff={res.omega_eff:.4f}  BB-{res.n_switch}")
    write_csv(args.out, ["u_max", "t_star", "ratio", "omega_eff", "n_switch"], rows)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
