"""Command-line driver.

Channels are given as a JSON file or a builtin::

    gaussian[:m=3,bins=1600,variance=0.5,amplitude=1,grid=8]
    bec:EPS  bsc:P  derived-bec:EPS  derived-bsc:P  noiseless:M
    product-bec:EPS1,EPS2,...

Every subcommand writes CSV (default) or JSON to ``--out`` or stdout.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from .base_code import (DecodingOrder, ENUMERATION_BUDGET, corner_order, count_orders,
                        covering_radius_estimate, enumerate_orders, lattice, rate_tuple)
from .channels import (MacDMC, as_mac, as_single, bec, bsc, derived_two_user_mac,
                       gaussian_mac_quantized, load_channel, mutual_information,
                       noiseless_mac, on_dominant_face, product_mac, region_constraints)
from .errors import BudgetExceeded, ChannelError, PreconditionError, SamplingError
from .mac_code import (MacPolarSpec, construct, fer_union_bound, intermediate_fraction,
                       separate_split_profile)
from .polarization import combine_minus, combine_plus, good_threshold
from .sim import DiscreteSampler, GaussianSampler, SimConfig, simulate


# ---------------------------------------------------------------------------
# channel sources

def _kv(text):
    out = {}
    for item in filter(None, text.split(",")):
        if "=" not in item:
            raise ChannelError(f"expected key=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = float(v)
    return out


def gaussian_params(text: str) -> dict:
    kv = _kv(text.partition(":")[2])
    unknown = set(kv) - {"m", "bins", "variance", "amplitude", "grid"}
    if unknown:
        raise ChannelError(f"unknown gaussian parameters {sorted(unknown)}")
    grid = kv.get("grid", 8.0)
    return {"m": int(kv.get("m", 3)), "bins": int(kv.get("bins", 1600)),
            "noise_variance": kv.get("variance", 0.5), "amplitude": kv.get("amplitude", 1.0),
            "grid_min": -grid, "grid_max": grid}


def parse_channel(text: str) -> MacDMC:
    """Build a channel from a builtin description or a JSON file path."""
    name, _, arg = text.partition(":")
    try:
        if name == "gaussian":
            return gaussian_mac_quantized(**gaussian_params(text))
        if name == "bec":
            return as_mac(bec(float(arg)))
        if name == "bsc":
            return as_mac(bsc(float(arg)))
        if name == "derived-bec":
            return derived_two_user_mac(bec(float(arg)))
        if name == "derived-bsc":
            return derived_two_user_mac(bsc(float(arg)))
        if name == "noiseless":
            return noiseless_mac(int(arg))
        if name == "product-bec":
            return product_mac([bec(float(e)) for e in arg.split(",")])
    except ValueError as exc:
        raise ChannelError(f"bad channel description {text!r}: {exc}")
    if not Path(text).exists():
        raise ChannelError(f"{text!r} is neither a builtin channel nor an existing file")
    return load_channel(text)


def make_sampler(cfg: SimConfig, W: MacDMC):
    """Continuous Gaussian sampling for the Gaussian builtin, table sampling otherwise."""
    if cfg.channel.partition(":")[0] == "gaussian":
        p = gaussian_params(cfg.channel)
        return GaussianSampler(p["m"], p["amplitude"], p["noise_variance"])
    return DiscreteSampler(W)


def _channel(cfg: SimConfig) -> MacDMC:
    W = parse_channel(cfg.channel)
    if cfg.m is not None and cfg.m != W.m:
        raise PreconditionError(f"--m {cfg.m} disagrees with the channel's {W.m} users")
    return W


# ---------------------------------------------------------------------------
# output

def _plain(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, np.generic):
        return v.item()
    return v


def emit(rows: list, cfg: SimConfig) -> str:
    rows = [{k: _plain(v) for k, v in r.items()} for r in rows]
    if cfg.fmt == "json":
        text = json.dumps(rows, indent=1) + "\n"
    else:
        keys = list(dict.fromkeys(k for r in rows for k in r))
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: (" ".join(map(str, v)) if isinstance(v, list) else v)
                        for k, v in r.items()})
        text = buf.getvalue()
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        sys.stdout.write(text)
    return text


def _users(J):
    return "+".join(map(str, sorted(J)))


# ---------------------------------------------------------------------------
# subcommands

def cmd_region(cfg: SimConfig) -> list:
    W = _channel(cfg)
    rc = region_constraints(W)
    rows = [{"users": _users(J), "size": len(J), "bound": b}
            for J, b in sorted(rc.bounds.items(), key=lambda t: (len(t[0]), sorted(t[0])))]
    return rows


def cmd_basecodes(cfg: SimConfig) -> list:
    W = _channel(cfg)
    if cfg.order and cfg.order != "all":
        orders = [DecodingOrder.parse(cfg.order)]
    else:
        orders = enumerate_orders(W.m, cfg.L, cfg.extra.get("budget", ENUMERATION_BUDGET))
    rc = region_constraints(W)
    R = lattice(W, orders[0].L).all_rates(orders)
    rows = []
    for i, (o, r) in enumerate(zip(orders, R)):
        row = {"index": i, "order": str(o)}
        row.update({f"R{j + 1}": r[j] for j in range(W.m)})
        row["sum"] = float(r.sum())
        row["on_face"] = on_dominant_face(rc, r, tol=1e-6)
        rows.append(row)
    return rows


def cmd_cover(cfg: SimConfig) -> list:
    W = _channel(cfg)
    rc = region_constraints(W)
    Ls = [cfg.L, 2 * cfg.L] if cfg.extra.get("double") else [cfg.L]
    rows = []
    for L in Ls:
        rep = covering_radius_estimate(W, L, cfg.samples, cfg.seed, constraints=rc)
        rows.append({"m": rep.m, "L": L, "samples": rep.samples, "radius": rep.radius,
                     "bound": rep.bound, "coord_gap": rep.coord_gap,
                     "coord_bound": rep.coord_bound, "ok": rep.ok,
                     "worst_point": rep.worst_point, "worst_order": str(rep.worst_order)})
    return rows


def _order(cfg: SimConfig, m: int) -> DecodingOrder:
    if not cfg.order:
        return corner_order(range(1, m + 1)) if cfg.L == 1 else \
            DecodingOrder(tuple(j for _ in range(cfg.L) for j in range(1, m + 1)))
    o = DecodingOrder.parse(cfg.order)
    if o.m != m:
        raise PreconditionError(f"order has {o.m} users, channel has {m}")
    return o


def cmd_construct(cfg: SimConfig) -> list:
    W = _channel(cfg)
    order = _order(cfg, W.m)
    spec = construct(W, order, cfg.n, beta=cfg.beta, method=cfg.method, seed=cfg.seed,
                     trials=cfg.trials, selection=cfg.selection,
                     frozen_seed=cfg.extra.get("frozen_seed"))
    R = rate_tuple(W, order)
    ub = fer_union_bound(spec)
    if cfg.spec:
        spec.save(cfg.spec)
    return [{"order": str(order), "n": cfg.n, "N": spec.N, "user": j + 1,
             "rate": spec.rates[j], "target": R[j], "gap": abs(spec.rates[j] - R[j]),
             "union_bound": ub, "threshold_total": good_threshold(spec.N, cfg.beta) * spec.N}
            for j in range(W.m)]


def cmd_simulate(cfg: SimConfig) -> list:
    W = _channel(cfg)
    if cfg.spec:
        spec = MacPolarSpec.load(cfg.spec)
        if spec.m != W.m:
            raise PreconditionError(f"spec has {spec.m} users, channel has {W.m}")
    else:
        spec = construct(W, _order(cfg, W.m), cfg.n, beta=cfg.beta, method=cfg.method,
                         seed=cfg.seed, trials=cfg.trials, selection=cfg.selection)
    rep = simulate(spec, make_sampler(cfg, W), cfg.trials, cfg.seed, cfg.workers)
    return [rep.to_dict()]


def cmd_counterexample(cfg: SimConfig) -> list:
    W = _channel(cfg)
    if W.m != 1:
        raise PreconditionError("counterexample needs a single-user channel, e.g. bec:0.5")
    Wp = as_single(W)
    I = mutual_information(Wp)
    Im, Ip = mutual_information(combine_minus(Wp)), mutual_information(combine_plus(Wp))
    rows = [{"kind": "square_corner", "R1": I, "R2": I}]
    for n in cfg.extra.get("ns", [cfg.n]):
        prof = separate_split_profile(Wp, n)
        rows.append({"kind": "triples", "n": n, "intermediate": intermediate_fraction(prof),
                     "mean_I1": prof[:, 0].mean(), "mean_I2": prof[:, 1].mean(),
                     "mean_Isum": prof[:, 2].mean()})
    mac = derived_two_user_mac(Wp)
    rc = region_constraints(mac)
    for L in (1, 2):
        for o in enumerate_orders(2, L):
            r = rate_tuple(mac, o)
            rows.append({"kind": "joint", "order": str(o), "R1": r[0], "R2": r[1],
                         "on_face": on_dominant_face(rc, r, tol=1e-6),
                         "square": bool(np.allclose(r, I, atol=1e-9))})
    rows.append({"kind": "split", "R1": Im, "R2": Ip})
    return rows


COMMANDS = {"region": cmd_region, "basecodes": cmd_basecodes, "cover": cmd_cover,
            "construct": cmd_construct, "simulate": cmd_simulate,
            "counterexample": cmd_counterexample}


# ---------------------------------------------------------------------------
# argument parsing

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--channel", default="gaussian", help="builtin description or JSON file")
    common.add_argument("--m", type=int, help="expected number of users")
    common.add_argument("--L", type=int, default=2, help="base-code length")
    common.add_argument("--order", help="decoding order word, e.g. 1,2,3,1,2,3, or 'all'")
    common.add_argument("--n", type=int, default=6, help="log2 of the block length")
    common.add_argument("--beta", type=float, default=0.45,
                        help="threshold exponent: keep Z < 2^(-N^beta) / (mN)")
    common.add_argument("--trials", type=int, default=1000,
                        help="Monte Carlo trials (construction or simulation)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", help="output path (default stdout)")
    common.add_argument("--format", dest="fmt", choices=("csv", "json"), default="csv")

    p = argparse.ArgumentParser(prog="macpolar", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("region", parents=[common], help="uniform rate-region constraints")
    sp = sub.add_parser("basecodes", parents=[common], help="rate tuples of all decoding orders")
    sp.add_argument("--budget", type=int, default=ENUMERATION_BUDGET)
    sp = sub.add_parser("cover", parents=[common], help="sampled covering radius")
    sp.add_argument("--samples", type=int, default=200)
    sp.add_argument("--double", action="store_true", help="also report base length 2L")
    helps = {"construct": "choose information sets for one decoding order",
             "simulate": "Monte Carlo frame error rate of a constructed code"}
    for name in ("construct", "simulate"):
        sp = sub.add_parser(name, parents=[common], help=helps[name])
        sp.add_argument("--method", choices=("exact", "montecarlo"), default="exact")
        sp.add_argument("--selection", choices=("threshold", "target"), default="threshold")
        sp.add_argument("--spec", help="code file to write (construct) or read (simulate)")
        if name == "construct":
            sp.add_argument("--frozen-seed", type=int, help="random frozen bits from this seed")
        else:
            sp.add_argument("--workers", type=int, default=1)
    sp = sub.add_parser("counterexample", parents=[common],
                        help="separate splitting vs joint orders on a derived two-user MAC")
    sp.add_argument("--ns", default="4,6,8", help="comma-separated depths for the triples")
    return p


def config_from_args(args) -> SimConfig:
    extra = {}
    if getattr(args, "budget", None) is not None:
        extra["budget"] = args.budget
    if getattr(args, "double", False):
        extra["double"] = True
    if getattr(args, "frozen_seed", None) is not None:
        extra["frozen_seed"] = args.frozen_seed
    if getattr(args, "ns", None):
        extra["ns"] = [int(v) for v in args.ns.split(",")]
    channel = args.channel
    if args.command == "counterexample" and channel == "gaussian":
        channel = "bec:0.5"
    return SimConfig(channel=channel, m=args.m, L=args.L, order=args.order, n=args.n,
                     beta=args.beta, trials=args.trials, seed=args.seed,
                     method=getattr(args, "method", "exact"),
                     selection=getattr(args, "selection", "threshold"),
                     samples=getattr(args, "samples", 200), workers=getattr(args, "workers", 1),
                     spec=getattr(args, "spec", None), out=args.out, fmt=args.fmt, extra=extra)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        emit(COMMANDS[args.command](cfg), cfg)
    except (ChannelError, PreconditionError, BudgetExceeded, SamplingError) as exc:
        print(f"macpolar {args.command}: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
