"""Relaxation of populations towards the deformed Boltzmann state.

Prints the L1 distance to the closed-form steady state over time for a few
coupling strengths; the fixed point itself does not depend on lambda.
"""
import argparse

import numpy as np

from deformosc import DeformationSpec, IntegratorConfig, OscillatorModel, evolve_populations, thermal_bath
from deformosc.stationary import auto_n_max_thermal, steady_populations


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--tau", type=float, default=0.1)
    ap.add_argument("--temperature", type=float, default=1.0)
    ap.add_argument("--lams", type=float, nargs="+", default=[0.3, 1.0, 3.0])
    ap.add_argument("--start", type=int, default=0, help="initial Fock level")
    args = ap.parse_args()

    dfm = DeformationSpec.q_deformation(args.tau)
    n_max = auto_n_max_thermal(dfm, 1.0, args.temperature)
    m = OscillatorModel(1.0, dfm, n_max)
    p0 = np.zeros(m.dim)
    p0[args.start] = 1.0
    print(f"n_max = {n_max}")
    for lam in args.lams:
        bath = thermal_bath(lam, args.temperature, 1.0)
        p_ss = steady_populations(m, bath)
        t_final = 40.0 / lam
        traj = evolve_populations(m, bath, p0, IntegratorConfig(t_final, samples=9), keep_snapshots=True)
        print(f"lambda = {lam}")
        for t, s in zip(traj.times, traj.snapshots):
            print(f"  t*lambda = {t * lam:5.1f}   L1 = {np.abs(s - p_ss).sum():.3e}")


if __name__ == "__main__":
    main()
