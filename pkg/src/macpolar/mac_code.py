"""Length-N MAC polar codes built on a base code.

Index conventions: users are labelled 1..m; positions inside a user's
length-N vector and global decoding positions are 0-based.  With
``K = N / L``, global position ``k*K + s`` belongs to base position ``k``;
if that is user ``j``'s rank-``t`` bit, it carries ``u_j[t*K + s]``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .base_code import (JOINT_BUDGET, DecodingOrder, base_bit_channels, bit_channel_from_joint,
                        joint_table, rate_tuple)
from .channels import BinaryInputDMC, MacDMC, mutual_information
from .errors import PreconditionError
from .likelihood import mac_monte_carlo_z
from .polarization import TABLE_BUDGET, all_bit_channels_exact, bit_channel_z, good_threshold, polar_transform


@dataclass(frozen=True)
class ExpandedOrder:
    base: DecodingOrder
    k: int
    word: tuple


def expand_order(order: DecodingOrder, k: int) -> ExpandedOrder:
    """Repeat every symbol of the base word as a run of ``k``."""
    if k < 1:
        raise PreconditionError("expansion factor must be >= 1")
    return ExpandedOrder(order, k, tuple(w for w in order.word for _ in range(k)))


def mac_bit_channel_exact(W: MacDMC, order: DecodingOrder, n: int, pos: int,
                          budget: int = JOINT_BUDGET) -> BinaryInputDMC:
    """Brute-force channel of global decoding position ``pos`` for ``N = 2**n``.

    Sums the full joint distribution of all ``mN`` inputs and ``Y_1^N``;
    only practical for a handful of bits.
    """
    N = 2**n
    if N < order.L:
        raise PreconditionError(f"N={N} is shorter than the base length {order.L}")
    word = expand_order(order, N // order.L).word
    if not 0 <= pos < len(word):
        raise PreconditionError(f"position {pos} outside [0, {len(word)})")
    return bit_channel_from_joint(joint_table(W, word, n, budget), pos)


def position_map(order: DecodingOrder, n: int):
    """Arrays ``(user, index)`` for every global decoding position."""
    N = 2**n
    K = N // order.L
    ranks = order.ranks()
    users = np.repeat(np.array(order.word), K)
    idx = np.concatenate([np.arange(r * K, (r + 1) * K) for r in ranks])
    return users, idx


@dataclass(frozen=True, eq=False)
class MacPolarSpec:
    """A fully determined MAC polar code.

    ``info_sets[j-1]`` holds user ``j``'s information positions (0-based,
    sorted); ``frozen_values[j-1]`` is a length-N vector whose entries at the
    frozen positions are the frozen bits (entries at information positions
    are zero).  ``z[j-1, i]`` is the Bhattacharyya value (exact or
    estimated) of the bit-channel carrying ``u_j[i]``.
    """

    order: DecodingOrder
    n: int
    info_sets: tuple
    frozen_values: tuple
    beta: float = 0.45
    method: str = "exact"
    selection: str = "threshold"
    frozen_seed: int = None
    z: np.ndarray = None
    z_halfwidth: np.ndarray = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        N = self.N
        if N < self.L:
            raise PreconditionError(f"N={N} is shorter than the base length {self.L}")
        infos = tuple(np.unique(np.asarray(s, dtype=np.int64)) for s in self.info_sets)
        fro = tuple(np.asarray(f, dtype=np.uint8) & 1 for f in self.frozen_values)
        if len(infos) != self.m or len(fro) != self.m:
            raise PreconditionError("need one info set and one frozen vector per user")
        for s, f in zip(infos, fro):
            if s.size and (s[0] < 0 or s[-1] >= N):
                raise PreconditionError("info positions out of range")
            if f.shape != (N,):
                raise PreconditionError(f"frozen vectors must have length {N}")
        object.__setattr__(self, "info_sets", infos)
        fro = tuple(np.where(self.info_mask(j + 1), 0, f).astype(np.uint8) for j, f in enumerate(fro))
        object.__setattr__(self, "frozen_values", fro)

    @property
    def m(self) -> int:
        return self.order.m

    @property
    def L(self) -> int:
        return self.order.L

    @property
    def N(self) -> int:
        return 2**self.n

    @property
    def K(self) -> int:
        return self.N // self.L

    def info_mask(self, j: int) -> np.ndarray:
        mask = np.zeros(self.N, bool)
        mask[self.info_sets[j - 1]] = True
        return mask

    @property
    def rates(self) -> np.ndarray:
        return np.array([len(s) for s in self.info_sets]) / self.N

    def global_position(self, j: int, i: int) -> int:
        t, s = divmod(i, self.K)
        return self.order.positions(j)[t] * self.K + s

    def user_index(self, pos: int):
        k, s = divmod(pos, self.K)
        return self.order.word[k], self.order.ranks()[k] * self.K + s

    # -- serialization ---------------------------------------------------
    def to_dict(self) -> dict:
        d = {
            "m": self.m, "L": self.L, "order": str(self.order), "n": self.n,
            "info_sets": [s.tolist() for s in self.info_sets],
            "frozen": "zeros" if self.frozen_seed is None else {"seed": self.frozen_seed},
            "beta": self.beta, "method": self.method, "selection": self.selection,
            "z": None if self.z is None else self.z.tolist(),
            "z_halfwidth": None if self.z_halfwidth is None else self.z_halfwidth.tolist(),
        }
        d.update(self.extra)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "MacPolarSpec":
        order = DecodingOrder.parse(d["order"])
        if order.m != d["m"] or order.L != d["L"]:
            raise PreconditionError("order does not match the recorded m and L")
        n = int(d["n"])
        frozen = d.get("frozen", "zeros")
        seed = None if frozen == "zeros" else int(frozen["seed"])
        z = None if d.get("z") is None else np.array(d["z"], dtype=float)
        hw = None if d.get("z_halfwidth") is None else np.array(d["z_halfwidth"], dtype=float)
        return cls(order=order, n=n, info_sets=tuple(d["info_sets"]),
                   frozen_values=frozen_vectors(order.m, 2**n, seed),
                   beta=float(d.get("beta", 0.45)), method=d.get("method", "exact"),
                   selection=d.get("selection", "threshold"), frozen_seed=seed, z=z, z_halfwidth=hw)

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n")

    @classmethod
    def load(cls, path) -> "MacPolarSpec":
        return cls.from_dict(json.loads(Path(path).read_text()))


def frozen_vectors(m: int, N: int, seed=None) -> tuple:
    """All-zero frozen bits, or uniformly random ones drawn from ``seed``."""
    if seed is None:
        return tuple(np.zeros(N, np.uint8) for _ in range(m))
    rng = np.random.default_rng(seed)
    return tuple(rng.integers(0, 2, N, dtype=np.uint8) for _ in range(m))


def outer_z(W: MacDMC, order: DecodingOrder, n: int, method: str = "exact",
            trials: int = 2000, seed: int = 0, budget: int = TABLE_BUDGET):
    """``Z`` of every global position, shape ``(mL, K)``, plus half-widths (or None).

    The exact method polarizes each exact base channel ``n - l`` more levels
    with output merging.  The Monte Carlo method samples the MAC and keeps the
    base-level marginalization exact.
    """
    l = order.L.bit_length() - 1
    if n < l:
        raise PreconditionError(f"n={n} is below the base depth l={l}")
    if method == "exact":
        chans = base_bit_channels(W, order)
        return np.array([bit_channel_z(V, n - l, budget=budget) for V in chans]), None
    if method == "montecarlo":
        return mac_monte_carlo_z(W, order, n, trials, seed)
    raise PreconditionError(f"unknown method {method!r}")


def construct(W: MacDMC, order: DecodingOrder, n: int, beta: float = 0.45,
              method: str = "exact", seed: int = 0, trials: int = 2000,
              selection: str = "threshold", frozen_seed=None,
              budget: int = TABLE_BUDGET) -> MacPolarSpec:
    """Choose every user's information positions.

    ``selection='threshold'`` keeps positions with
    ``Z < 2**(-N**beta) / (mN)``.  ``selection='target'`` keeps user ``j``'s
    ``round(N * R_j)`` best positions, ``R`` being the base code's rate tuple.
    """
    if W.m != order.m:
        raise PreconditionError(f"order has {order.m} users, channel has {W.m}")
    if not 0 < beta < 0.5:
        raise PreconditionError(f"beta must lie in (0, 1/2), got {beta}")
    N = 2**n
    zk, hwk = outer_z(W, order, n, method, trials, seed, budget)
    users, idx = position_map(order, n)
    z = np.full((W.m, N), np.nan)
    z[users - 1, idx] = zk.ravel()
    hw = None
    if hwk is not None:
        hw = np.full((W.m, N), np.nan)
        hw[users - 1, idx] = hwk.ravel()
    if selection == "threshold":
        thr = good_threshold(N, beta, users=W.m)
        info = tuple(np.flatnonzero(z[j] < thr) for j in range(W.m))
    elif selection == "target":
        R = rate_tuple(W, order)
        sizes = np.rint(N * R).astype(int)
        info = tuple(np.sort(np.argsort(z[j], kind="stable")[:sizes[j]]) for j in range(W.m))
    else:
        raise PreconditionError(f"unknown selection {selection!r}")
    return MacPolarSpec(order=order, n=n, info_sets=info,
                        frozen_values=frozen_vectors(W.m, N, frozen_seed), beta=beta,
                        method=method, selection=selection, frozen_seed=frozen_seed,
                        z=z, z_halfwidth=hw)


def encode(spec: MacPolarSpec, messages) -> np.ndarray:
    """Per-user codewords ``x_j = u_j G^{(x)n}``.

    ``messages[j-1]`` has shape ``(..., |info_j|)``; the result has shape
    ``(..., m, N)``.
    """
    if len(messages) != spec.m:
        raise PreconditionError(f"need {spec.m} messages, got {len(messages)}")
    msgs = [np.asarray(mj, dtype=np.uint8) for mj in messages]
    lead = np.broadcast_shapes(*(mj.shape[:-1] for mj in msgs))
    u = np.empty(lead + (spec.m, spec.N), dtype=np.uint8)
    for j, mj in enumerate(msgs):
        if mj.shape[-1] != len(spec.info_sets[j]):
            raise PreconditionError(
                f"user {j + 1}: message length {mj.shape[-1]} != {len(spec.info_sets[j])}")
        u[..., j, :] = spec.frozen_values[j]
        u[..., j, spec.info_sets[j]] = mj
    return polar_transform(u)


def fer_union_bound(spec: MacPolarSpec, z=None) -> float:
    """Sum of ``Z`` over every user's information positions."""
    z = spec.z if z is None else np.asarray(z, dtype=float)
    if z is None:
        raise PreconditionError("spec carries no Z values")
    return float(sum(z[j, s].sum() for j, s in enumerate(spec.info_sets)))


def separate_split_profile(Wp: BinaryInputDMC, n: int, budget: int = TABLE_BUDGET) -> np.ndarray:
    """Per-position triples ``(I1, I2, Isum)`` of the separate-splitting scheme.

    For the two-user MAC derived from ``Wp``, position ``i`` of a length-N
    transform is single-user positions ``2i, 2i+1`` of a length-2N transform
    of ``Wp``.  ``I2`` is the plus channel's capacity, ``Isum`` the sum of
    the pair.  ``I1 = I(U_i; Y, U^{i-1}, V^i)`` reduces to the capacity of the
    length-N bit-channel ``i`` of ``Wp``, since knowing ``V_i`` strips it from
    the first copy.
    """
    outer = np.array([mutual_information(V) for V in all_bit_channels_exact(Wp, n + 1, budget=budget)])
    inner = np.array([mutual_information(V) for V in all_bit_channels_exact(Wp, n, budget=budget)])
    minus, plus = outer[0::2], outer[1::2]
    return np.stack([inner, plus, minus + plus], axis=1)


def intermediate_fraction(profile, low: float = 0.1, high: float = 1.9) -> float:
    """Share of positions whose ``Isum`` lies strictly between ``low`` and ``high``."""
    s = np.asarray(profile)[:, 2]
    return float(np.mean((s > low) & (s < high)))
