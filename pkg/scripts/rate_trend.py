"""Per-user rate gap versus block length for a fixed decoding order.

Example::

    python3 scripts/rate_trend.py --order 1,2,3,1,2,3 --ns 6,8,10,12 --trials 500
"""
import argparse
import csv
import sys

import numpy as np

from macpolar.base_code import DecodingOrder, rate_tuple
from macpolar.cli import parse_channel
from macpolar.mac_code import construct


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--channel", default="gaussian:m=3")
    ap.add_argument("--order", default="1,2,3,1,2,3")
    ap.add_argument("--ns", default="6,8,10,12")
    ap.add_argument("--trials", type=int, default=500)
    ap.add_argument("--beta", type=float, default=0.45)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    W = parse_channel(args.channel)
    order = DecodingOrder.parse(args.order)
    R = rate_tuple(W, order)
    out = csv.writer(sys.stdout)
    out.writerow(["n", "user", "target", "rate", "gap"])
    for n in (int(v) for v in args.ns.split(",")):
        spec = construct(W, order, n, beta=args.beta, method="montecarlo",
                         trials=args.trials, seed=args.seed)
        for j, (r, t) in enumerate(zip(spec.rates, R), start=1):
            out.writerow([n, j, f"{t:.5f}", f"{r:.5f}", f"{abs(r - t):.5f}"])
    return 0


if __name__ == "__main__":
    sys.exit(main())
