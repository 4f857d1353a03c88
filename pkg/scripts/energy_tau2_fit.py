"""Estimate the tau^2 coefficient of the thermal energy and compare with c(omega/T).

    python3 scripts/energy_tau2_fit.py --temps 0.25 0.5 1 2 4
"""
import argparse

from deformosc.stationary import c_coefficient, richardson_tau2_coefficient


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--omega", type=float, default=1.0)
    ap.add_argument("--temps", type=float, nargs="+", default=[0.25, 0.5, 1.0, 2.0, 4.0])
    ap.add_argument("--taus", type=float, nargs=3, default=[0.01, 0.02, 0.04])
    args = ap.parse_args()

    print(f"{'T':>6} {'beta':>8} {'Richardson':>14} {'(w/2) c':>14} {'rel diff':>10}")
    for temp in args.temps:
        beta = args.omega / temp
        est = richardson_tau2_coefficient(args.omega, temp, tuple(args.taus))
        ref = 0.5 * args.omega * c_coefficient(beta)
        print(f"{temp:6.2f} {beta:8.3f} {est:14.8f} {ref:14.8f} {abs(est - ref) / abs(ref):10.2e}")


if __name__ == "__main__":
    main()
