"""Fixed-point construction across initial sizes: chosen parameters and the ten I/J margins."""

import argparse

from gevrey_ns.fixedpoint import InfeasibleParameters, choose_parameters, picard_solve
from gevrey_ns.lattice import build_lattice, random_divfree_field
from gevrey_ns.norms import GevreyParams, z_norm


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--M", type=int, default=6)
    ap.add_argument("--dt", type=float, default=0.005)
    ap.add_argument("--seed", type=int, default=11)
    ap.add_argument("--form", choices=["strong", "weak"], default="strong")
    args = ap.parse_args()

    p = GevreyParams(-1, 1.0, 2.0)
    shape = random_divfree_field(build_lattice(args.M), 1.0, 1.0, args.seed)
    for z0 in (0.01, 0.05, 0.1, 0.12, 0.15, 0.19):
        u0 = shape * (z0 / z_norm(shape, p))
        try:
            params = choose_parameters(u0, 1.0, p, args.dt, contraction_form=args.form)
        except InfeasibleParameters as exc:
            print(f"z0={z0:.2f}: infeasible ({exc})")
            continue
        d = picard_solve(u0, 1.0, params).diagnostics
        worst = max(d["ij_margins"], key=d["ij_margins"].get)
        print(f"z0={z0:.2f} N={params.N:.3g} r={params.r:.3g} eps={params.epsilon:.3g} T={params.T:.3g} "
              f"{d['status']} in {d['iterations']} its, max ratio {max(d['ratios'], default=0):.2g}, "
              f"largest margin {worst}={d['ij_margins'][worst]:.3g}")


if __name__ == "__main__":
    main()
