"""Rate tuples of every decoding order, with the covering radius, for several L.

Example::

    python3 scripts/rate_cloud.py --channel gaussian:m=2 --Ls 1,2,4 --samples 200
"""
import argparse
import csv
import sys

from macpolar.base_code import covering_radius_estimate, enumerate_orders, lattice
from macpolar.cli import parse_channel


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--channel", default="gaussian:m=2")
    ap.add_argument("--Ls", default="1,2,4")
    ap.add_argument("--samples", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--cloud", help="also write every rate tuple to this CSV file")
    args = ap.parse_args(argv)

    W = parse_channel(args.channel)
    out = csv.writer(sys.stdout)
    out.writerow(["L", "orders", "radius", "bound", "coord_gap", "coord_bound"])
    cloud = []
    for L in (int(v) for v in args.Ls.split(",")):
        orders = enumerate_orders(W.m, L)
        for o, r in zip(orders, lattice(W, L).all_rates(orders)):
            cloud.append([L, str(o), *r.tolist()])
        rep = covering_radius_estimate(W, L, args.samples, seed=args.seed)
        out.writerow([L, len(orders), f"{rep.radius:.5f}", f"{rep.bound:.5f}",
                      f"{rep.coord_gap:.5f}", f"{rep.coord_bound:.5f}"])
    if args.cloud:
        with open(args.cloud, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["L", "order"] + [f"R{j}" for j in range(1, W.m + 1)])
            w.writerows(cloud)
    return 0


if __name__ == "__main__":
    sys.exit(main())
