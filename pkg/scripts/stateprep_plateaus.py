#!/usr/bin/env python3
"""Scan the time-optimal state-preparation structure over u_max.

Reproduces the plateau picture for (0.7 pi, 0) -> (0.35 pi, pi): multi-bang
protocols at small amplitude, bang-singular-bang above the critical
amplitude.
"""
import argparse

import numpy as np

from qoct import BlochPoint, ModelParams
from qoct.fileio import write_csv
from qoct.state_prep import StatePrepProblem, find_time_optimal


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--theta-init", type=float, default=0.7)
    ap.add_argument("--phi-init", type=float, default=0.0)
    ap.add_argument("--theta-target", type=float, default=0.35)
    ap.add_argument("--phi-target", type=float, default=1.0)
    ap.add_argument("--grid", type=float, nargs="*",
                    default=[0.1, 0.11, 0.13, 0.16, 0.19, 0.25, 0.35, 0.5,
                             0.7, 0.85, 1.0])
    ap.add_argument("--out", default="plateaus.csv")
    args = ap.parse_args()

    init = BlochPoint(args.theta_init * np.pi, args.phi_init * np.pi)
    target = BlochPoint(args.theta_target * np.pi, args.phi_target * np.pi)
    rows = []
    for u in args.grid:
        problem = StatePrepProblem(init, target, ModelParams(u_max=float(u)))
        res = find_time_optimal(problem, with_report=False)
        rows.append((u, res.t_star, str(res.structure),
                     res.diagnostics.get("singular_duration", 0.0)))
        print(f"u_max={u:.3f}  T*={res.t_star / np.pi:.4f} pi  {res.structure}")
    write_csv(args.out, ["u_max", "t_star", "structure", "singular_duration"], rows)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
