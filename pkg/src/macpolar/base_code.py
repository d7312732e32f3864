"""Decoding orders of the length-L base code and their rate tuples.

A decoding order is stored as a *word*: the sequence of user labels
(1..m) in decoding order.  User ``j``'s ``r``-th occurrence in the word is
its base bit ``U_r[j]``, so every word automatically keeps each user's bits
in their natural order.
"""
from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass

import numpy as np

from .channels import (BinaryInputDMC, MacDMC, RegionConstraints, entropy,
                       region_constraints, sample_dominant_face)
from .errors import BudgetExceeded, PreconditionError
from .polarization import polar_transform

ENUMERATION_BUDGET = 10**5
JOINT_BUDGET = 2 * 10**7
CHUNK_ENTRIES = 2**22


@dataclass(frozen=True)
class DecodingOrder:
    word: tuple

    def __post_init__(self):
        word = tuple(int(j) for j in self.word)
        object.__setattr__(self, "word", word)
        if not word:
            raise PreconditionError("empty decoding order")
        m = max(word)
        counts = [word.count(j) for j in range(1, m + 1)]
        if min(word) < 1 or len(set(counts)) != 1:
            raise PreconditionError(f"every user 1..{m} must appear equally often in {word}")
        L = counts[0]
        if L & (L - 1):
            raise PreconditionError(f"base length must be a power of two, got {L}")

    @property
    def m(self) -> int:
        return max(self.word)

    @property
    def L(self) -> int:
        return len(self.word) // self.m

    @classmethod
    def parse(cls, text: str) -> "DecodingOrder":
        return cls(tuple(int(t) for t in text.replace(" ", "").split(",") if t))

    def __str__(self):
        return ",".join(str(j) for j in self.word)

    def positions(self, j: int) -> list:
        """0-based decoding positions of user ``j``'s bits, in rank order."""
        return [k for k, w in enumerate(self.word) if w == j]

    def ranks(self) -> list:
        """``ranks()[k]`` is the 0-based rank of position ``k`` within its user."""
        seen = {}
        out = []
        for w in self.word:
            out.append(seen.get(w, 0))
            seen[w] = out[-1] + 1
        return out

    def to_permutation(self) -> tuple:
        """1-based ``pi`` with ``pi[(j-1)L + r] =`` decoding position of ``U_r[j]``."""
        return tuple(k + 1 for j in range(1, self.m + 1) for k in self.positions(j))

    @classmethod
    def from_permutation(cls, pi, m: int) -> "DecodingOrder":
        pi = list(pi)
        L = len(pi) // m
        word = [0] * len(pi)
        for i, p in enumerate(pi):
            word[p - 1] = i // L + 1
        order = cls(tuple(word))
        if order.to_permutation() != tuple(pi):
            raise PreconditionError("permutation does not preserve the order within each user")
        return order


def count_orders(m: int, L: int) -> int:
    return math.factorial(m * L) // math.factorial(L) ** m


def corner_order(perm) -> DecodingOrder:
    """Order decoding users one after another in ``perm``; base length 1."""
    return DecodingOrder(tuple(perm))


def enumerate_orders(m: int, L: int, budget: int = ENUMERATION_BUDGET) -> list:
    """All ``(mL)! / L!^m`` orders, lexicographic by word."""
    total = count_orders(m, L)
    if total > budget:
        raise BudgetExceeded(f"{total} orders exceed the enumeration budget {budget}; "
                             "use nearest_order(mode='local')")
    out = []
    counts = [L] * m
    word = []

    def rec():
        if len(word) == m * L:
            out.append(DecodingOrder(tuple(word)))
            return
        for j in range(m):
            if counts[j]:
                counts[j] -= 1
                word.append(j + 1)
                rec()
                word.pop()
                counts[j] += 1

    rec()
    return out


# ---------------------------------------------------------------------------
# exact joint tables and bit-channels

def _check_joint(W: MacDMC, bits: int, uses: int, budget: int):
    size = 2**bits * W.outputs**uses
    if size > budget:
        raise BudgetExceeded(f"joint table needs {size} entries (budget {budget})")


def base_inputs_to_x(word, n: int) -> np.ndarray:
    """Channel-input tuple index for every input configuration.

    Configurations enumerate the ``len(word)`` input bits in decoding order,
    the first decoded bit most significant.  Returns ``xidx[config, use]``.
    """
    word = np.asarray(word)
    m = int(word.max())
    N = 2**n
    M = len(word)
    configs = ((np.arange(2**M)[:, None] >> (M - 1 - np.arange(M))) & 1).astype(np.uint8)
    xidx = np.zeros((2**M, N), dtype=np.int64)
    for j in range(1, m + 1):
        u = configs[:, word == j]
        x = polar_transform(u)
        xidx = 2 * xidx + x
    return xidx


def joint_table(W: MacDMC, word, n: int, budget: int = JOINT_BUDGET) -> np.ndarray:
    """``P[config, y_1..y_N]`` for uniform inputs in decoding order ``word``.

    ``word`` lists the owning user of each decoding position; each user must
    appear ``N = 2**n`` times.  Outputs are flattened with ``y_1`` most
    significant.
    """
    word = tuple(word)
    _check_joint(W, len(word), 2**n, budget)
    xidx = base_inputs_to_x(word, n)
    P = np.full((xidx.shape[0], 1), 2.0 ** -len(word))
    for c in range(2**n):
        P = (P[:, :, None] * W.probs[xidx[:, c]][:, None, :]).reshape(P.shape[0], -1)
    return P


def bit_channel_from_joint(P: np.ndarray, k: int) -> BinaryInputDMC:
    """Channel of decoding position ``k`` (0-based): output ``(d_<k, y)``."""
    M = P.shape[0].bit_length() - 1
    Q = P.reshape(2**k, 2, 2 ** (M - k - 1), -1).sum(axis=2)
    return BinaryInputDMC(2.0 * np.stack([Q[:, 0].ravel(), Q[:, 1].ravel()]))


def base_bit_channels(W: MacDMC, order: DecodingOrder, budget: int = JOINT_BUDGET) -> list:
    """The ``mL`` binary-input channels seen by the base-code positions."""
    if order.m != W.m:
        raise PreconditionError(f"order has {order.m} users, channel has {W.m}")
    l = order.L.bit_length() - 1
    P = joint_table(W, order.word, l, budget)
    return [bit_channel_from_joint(P, k) for k in range(len(order.word))]


# ---------------------------------------------------------------------------
# chain-rule profiles through the prefix-count lattice

class ChainLattice:
    """``H(Y_1^L | D_S)`` for every prefix set ``S`` an order can produce.

    Because each user's bits are decoded in order, the set decoded before any
    position is fixed by how many bits of each user are already decoded.  The
    lattice stores one conditional entropy per count vector in
    ``{0..L}^m``; any order's chain-rule terms are differences along its path.
    """

    def __init__(self, W: MacDMC, L: int, budget: int = JOINT_BUDGET):
        if L < 1 or L & (L - 1):
            raise PreconditionError(f"L must be a power of two, got {L}")
        self.W = W
        self.m = m = W.m
        self.L = L
        l = L.bit_length() - 1
        Y = W.outputs
        if 2 ** (m * L) > budget:
            raise BudgetExceeded(f"2^{m * L} base configurations exceed budget {budget}")
        # user-major word: bit r of user j sits at flat position (j-1)L + r
        xidx = base_inputs_to_x(np.repeat(np.arange(1, m + 1), L), l)
        self.H = np.zeros((L + 1,) * m)
        counts = list(itertools.product(range(L + 1), repeat=m))
        joint_h = np.zeros(len(counts))
        rows_per_chunk = max(1, CHUNK_ENTRIES // (2 ** (m * L) * Y ** (L - 1)))
        for start in range(0, Y, rows_per_chunk):
            cols = np.arange(start, min(Y, start + rows_per_chunk))
            P = np.full((xidx.shape[0], 1), 2.0 ** -(m * L))
            for c in range(L):
                rows = W.probs[xidx[:, c]]
                if c == 0:
                    rows = rows[:, cols]
                P = (P[:, :, None] * rows[:, None, :]).reshape(P.shape[0], -1)
            P = P.reshape((2,) * (m * L) + (-1,))
            for t, cnt in enumerate(counts):
                hidden = tuple(j * L + r for j in range(m) for r in range(cnt[j], L))
                Pm = P.sum(axis=hidden) if hidden else P
                joint_h[t] += float(entropy(Pm.ravel()))
        for t, cnt in enumerate(counts):
            self.H[cnt] = joint_h[t] - sum(cnt)

    def profile(self, order: DecodingOrder) -> np.ndarray:
        """Chain-rule terms ``I(D_k; Y_1^L, D_<k)`` in decoding order."""
        self._check(order)
        cnt = [0] * self.m
        terms = np.empty(len(order.word))
        prev = self.H[tuple(cnt)]
        for k, j in enumerate(order.word):
            cnt[j - 1] += 1
            cur = self.H[tuple(cnt)]
            terms[k] = prev - cur
            prev = cur
        return terms

    def rates(self, order: DecodingOrder) -> np.ndarray:
        terms = self.profile(order)
        R = np.zeros(self.m)
        np.add.at(R, np.asarray(order.word) - 1, terms)
        return R / self.L

    def all_rates(self, orders) -> np.ndarray:
        return np.array([self.rates(o) for o in orders]) if orders else np.zeros((0, self.m))

    def _check(self, order):
        if order.m != self.m or order.L != self.L:
            raise PreconditionError(f"order {order} does not match m={self.m}, L={self.L}")


@functools.lru_cache(maxsize=16)
def lattice(W: MacDMC, L: int) -> ChainLattice:
    return ChainLattice(W, L)


def chain_profile(W: MacDMC, order: DecodingOrder) -> np.ndarray:
    return lattice(W, order.L).profile(order)


def rate_tuple(W: MacDMC, order: DecodingOrder) -> np.ndarray:
    """Per-user rates ``R_j = (1/L) * sum`` of the terms at user ``j``'s positions."""
    return lattice(W, order.L).rates(order)


# ---------------------------------------------------------------------------
# transpositions and reachability

def adjacencies(order: DecodingOrder, j1: int, j2: int) -> list:
    """Positions ``p`` where a bit of ``j1`` is immediately followed by one of ``j2``."""
    w = order.word
    return [p for p in range(len(w) - 1) if w[p] == j1 and w[p + 1] == j2]


def transpose(order: DecodingOrder, j1: int, j2: int, occurrence: int = 0) -> DecodingOrder:
    """Swap the ``occurrence``-th adjacent pair ``j1 -> j2``."""
    if j1 == j2:
        raise PreconditionError("transposition needs two different users")
    spots = adjacencies(order, j1, j2)
    if occurrence >= len(spots):
        raise PreconditionError(f"no adjacency {j1} -> {j2} number {occurrence} in {order}")
    p = spots[occurrence]
    w = list(order.word)
    w[p], w[p + 1] = w[p + 1], w[p]
    return DecodingOrder(tuple(w))


def neighbours(order: DecodingOrder) -> list:
    """Every order one legal adjacent transposition away."""
    w = order.word
    out = []
    for p in range(len(w) - 1):
        if w[p] != w[p + 1]:
            v = list(w)
            v[p], v[p + 1] = v[p + 1], v[p]
            out.append(DecodingOrder(tuple(v)))
    return out


def reachable(order: DecodingOrder, j: int) -> set:
    """Users reachable from ``j`` along chains of the ``appears right before`` relation."""
    w = order.word
    succ = {}
    for a, b in zip(w, w[1:]):
        if a != b:
            succ.setdefault(a, set()).add(b)
    seen = set()
    stack = list(succ.get(j, ()))
    while stack:
        k = stack.pop()
        if k not in seen:
            seen.add(k)
            stack.extend(succ.get(k, ()))
    return seen


# ---------------------------------------------------------------------------
# nearest orders and covering radius

def nearest_order(W: MacDMC, Q, L: int, mode: str = "exhaustive", seed: int = 0,
                  restarts: int = 0, budget: int = ENUMERATION_BUDGET):
    """Order whose rate tuple is closest to ``Q`` (Euclidean).

    ``exhaustive`` scans every order and breaks ties towards the
    lexicographically smallest word.  ``local`` starts from the best corner
    order (users decoded one after another) and takes the best improving
    adjacent transposition until none improves; ``restarts`` extra climbs
    start from random orders drawn with ``seed``.
    """
    Q = np.asarray(Q, dtype=float)
    lat = lattice(W, L)
    if mode == "exhaustive":
        orders = enumerate_orders(W.m, L, budget)
        d = np.linalg.norm(lat.all_rates(orders) - Q, axis=1)
        best = int(np.argmin(d))
        return orders[best], float(d[best])
    if mode != "local":
        raise PreconditionError(f"unknown mode {mode!r}")

    def dist(o):
        return float(np.linalg.norm(lat.rates(o) - Q))

    def climb(o):
        cur = dist(o)
        while True:
            cands = [(dist(v), v.word, v) for v in neighbours(o)]
            if not cands:
                return o, cur
            dv, _, v = min(cands, key=lambda t: (t[0], t[1]))
            if dv >= cur:
                return o, cur
            o, cur = v, dv

    starts = [DecodingOrder(tuple(j for j in perm for _ in range(L)))
              for perm in itertools.permutations(range(1, W.m + 1))]
    start = min(starts, key=lambda o: (dist(o), o.word))
    results = [climb(start)]
    rng = np.random.default_rng(seed)
    base = np.repeat(np.arange(1, W.m + 1), L)
    for _ in range(restarts):
        results.append(climb(DecodingOrder(tuple(rng.permutation(base)))))
    return min(results, key=lambda t: (t[1], t[0].word))


@dataclass(frozen=True)
class CoverReport:
    m: int
    L: int
    samples: int
    radius: float
    bound: float
    coord_gap: float
    coord_bound: float
    worst_point: np.ndarray
    worst_order: DecodingOrder

    @property
    def ok(self) -> bool:
        return self.radius <= self.bound + 1e-6 and self.coord_gap <= self.coord_bound + 1e-6


def covering_bound(m: int, L: int) -> float:
    return (m - 1) * math.sqrt(m) / L


def covering_radius_estimate(W: MacDMC, L: int, samples: int, seed: int = 0,
                             constraints: RegionConstraints = None) -> CoverReport:
    """Max over sampled face points of the distance to the nearest base-code rate tuple."""
    rc = constraints or region_constraints(W)
    orders = enumerate_orders(W.m, L)
    R = lattice(W, L).all_rates(orders)
    pts = np.array(sample_dominant_face(rc, samples, seed)) if W.m > 1 else \
        np.array([[rc.sum_rate]] * samples)
    radius, gap = 0.0, 0.0
    worst_q, worst_o = (pts[0] if len(pts) else np.zeros(W.m)), orders[0]
    for q in pts:
        d = np.linalg.norm(R - q, axis=1)
        b = int(np.argmin(d))
        gap = max(gap, float(np.max(np.abs(R[b] - q))))
        if d[b] > radius:
            radius, worst_q, worst_o = float(d[b]), q, orders[b]
    return CoverReport(m=W.m, L=L, samples=samples, radius=radius, bound=covering_bound(W.m, L),
                       coord_gap=gap, coord_bound=(W.m - 1) / L, worst_point=worst_q,
                       worst_order=worst_o)
