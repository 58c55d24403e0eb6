#!/usr/bin/env python3
"""Run the three smoothing schemes for one amplitude and emit pulses/spectra."""
import argparse
from pathlib import Path

import numpy as np

from qoct import ModelParams
from qoct.fileio import write_csv, write_pulse_csv
from qoct.smoothing import (
    constrained_smooth_optimize,
    fourier_spectrum,
    min_tanh_time,
    min_third_harmonic_time,
)
from qoct.xgate import GateProblem


def dump(outdir: Path, name: str, run):
    write_pulse_csv(outdir / f"{name}_pulse.csv", run.protocol)
    freqs, amps = fourier_spectrum(run.protocol, n_max=60)
    write_csv(outdir / f"{name}_spectrum.csv", ["f", "re", "im", "abs"],
              [(f, a.real, a.imag, abs(a)) for f, a in zip(freqs, amps)])


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--umax", type=float, default=0.2)
    ap.add_argument("--beta", type=float, default=4.0)
    ap.add_argument("--nt", type=int, default=1000)
    ap.add_argument("--out", default="smooth-out")
    args = ap.parse_args()

    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    problem = GateProblem("x", ModelParams(u_max=args.umax))
    t_rabi = np.pi / args.umax

    T, run = min_tanh_time(problem, beta=args.beta)
    print(f"tanh:  perfect gate at T/T_Rabi = {T / t_rabi:.3f}  "
          f"C+1 = {run.cost_plus_1:.1e}")
    dump(outdir, "tanh", run)

    T3, run3 = min_third_harmonic_time(problem)
    print(f"third: perfect gate at T/T_Rabi = {T3 / t_rabi:.3f}  "
          f"R = {run3.extras['ratio']:.3f}")
    dump(outdir, "third", run3)

    runc = constrained_smooth_optimize(0.9 * t_rabi, problem, n_t=args.nt)
    print(f"constrained @ 0.9 T_Rabi: C_smooth = {runc.extras['c_smooth']:.4f} "
          f"after {runc.extras['n_outer']} outer iterations")
    dump(outdir, "constrained", runc)
    write_csv(outdir / "constrained_trace.csv",
              ["iter", "c_smooth", "c_x_plus_1"], runc.trace)
    print(f"wrote artifacts to {outdir}/")


if __name__ == "__main__":
    main()
