"""Simulated frame error rate against the union bound over a range of channels.

Example::

    python3 scripts/fer_vs_bound.py --erasures 0.3,0.4,0.5 --n 6 --trials 20000
"""
import argparse
import csv
import sys

from macpolar.base_code import DecodingOrder
from macpolar.channels import bec, derived_two_user_mac
from macpolar.mac_code import construct
from macpolar.sim import DiscreteSampler, simulate


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--erasures", default="0.3,0.4,0.5")
    ap.add_argument("--order", default="1,2,1,2")
    ap.add_argument("--n", type=int, default=6)
    ap.add_argument("--beta", type=float, default=0.1)
    ap.add_argument("--trials", type=int, default=20000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args(argv)

    order = DecodingOrder.parse(args.order)
    out = csv.writer(sys.stdout)
    out.writerow(["erasure", "R1", "R2", "fer", "ci_low", "ci_high", "union_bound"])
    for e in (float(v) for v in args.erasures.split(",")):
        W = derived_two_user_mac(bec(e))
        spec = construct(W, order, args.n, beta=args.beta)
        rep = simulate(spec, DiscreteSampler(W), args.trials, seed=args.seed,
                       workers=args.workers)
        out.writerow([e, *spec.rates.tolist(), f"{rep.fer:.3e}", f"{rep.ci_low:.3e}",
                      f"{rep.ci_high:.3e}", f"{rep.union_bound:.3e}"])
    return 0


if __name__ == "__main__":
    sys.exit(main())
