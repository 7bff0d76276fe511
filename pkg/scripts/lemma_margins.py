"""Worst-case margins of the product and Duhamel inequalities over a parameter grid."""

import argparse

from gevrey_ns.lattice import build_lattice
from gevrey_ns.verify import check_lemma1, check_lemma23_random, check_lemma4


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--M", type=int, default=6)
    ap.add_argument("--samples", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    lat = build_lattice(args.M)

    print(f"{'a':>4} {'sigma':>5} {'lemma1':>9} {'lemma4':>9} {'split':>6} {'lattice':>7} {'weight':>9} "
          f"{'interp':>6}")
    for sigma in (1.5, 2.0, 4.0):
        for a in (0.5, 1.0, 2.0):
            r1 = check_lemma1(args.samples, lat, args.seed, a, sigma)
            r4 = check_lemma4(args.samples, lat, a, sigma, args.seed)
            s = r4.details["steps"]
            print(f"{a:4.1f} {sigma:5.1f} {r1.worst_ratio:9.3g} {r4.worst_ratio:9.3g} {s['split']:6.3f} "
                  f"{s['lattice']:7.3f} {s['weight']:9.3g} {s['interp']:6.3f}")

    r2, r3 = check_lemma23_random(args.samples // 4, lat, args.seed)
    print(f"duhamel sup bound worst ratio {r2.worst_ratio:.3g}, integrated bound worst ratio {r3.worst_ratio:.3g}")


if __name__ == "__main__":
    main()
