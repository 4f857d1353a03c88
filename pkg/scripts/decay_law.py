"""Compare integrated <N(t)> at T = 0 with the undeformed and small-tau decay laws.

    python3 scripts/decay_law.py --taus 0 0.05 0.1 0.2 --n0 3 --lam 0.5
"""
import argparse

import numpy as np

from deformosc import DeformationSpec, IntegratorConfig, OscillatorModel, evolve_populations, thermal_bath
from deformosc.dynamics import mean_N_closed_form


def fock(dim, n):
    p = np.zeros(dim)
    p[n] = 1.0
    return p


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--taus", type=float, nargs="+", default=[0.0, 0.05, 0.1, 0.2])
    ap.add_argument("--n0", type=int, default=3)
    ap.add_argument("--lam", type=float, default=0.5)
    ap.add_argument("--t-final", type=float, default=4.0)
    ap.add_argument("--n-max", type=int, default=32)
    args = ap.parse_args()

    cfg = IntegratorConfig(args.t_final, samples=9)
    print(f"{'tau':>6} {'t':>5} {'<N> numeric':>14} {'closed form':>14} {'rel diff':>10} {'n0 e^-2lt':>12}")
    for tau in args.taus:
        m = OscillatorModel(1.0, DeformationSpec.q_deformation(tau), args.n_max)
        traj = evolve_populations(m, thermal_bath(args.lam, 0.0, 1.0), fock(m.dim, args.n0), cfg, policy="drop")
        cf = mean_N_closed_form(args.n0, args.lam, tau, traj.times)
        plain = args.n0 * np.exp(-2 * args.lam * traj.times)
        for t, x, c, p in zip(traj.times, traj.mean_N, cf, plain):
            print(f"{tau:6.3f} {t:5.2f} {x:14.10f} {c:14.10f} {abs(x - c) / c:10.2e} {p:12.8f}")
        print()


if __name__ == "__main__":
    main()
