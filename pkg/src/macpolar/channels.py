"""Finite-alphabet binary-input channels, single-user and multiple access.

Every channel is an explicit conditional probability table.  Rows are
indexed by the input (for a MAC: the tuple ``x[1..m]`` read as a binary
number with user 1 as the most significant bit), columns by the output
symbol.  All information quantities are in bits and assume independent,
uniform inputs.
"""
from __future__ import annotations

import functools
import itertools
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import ndtr

from .errors import BudgetExceeded, ChannelError, PreconditionError, SamplingError

ROW_TOL = 1e-12
MAX_REGION_USERS = 6


def _as_table(probs, rows=None):
    p = np.array(probs, dtype=float)
    if p.ndim != 2 or p.shape[1] < 1:
        raise ChannelError(f"probability table must be 2-D with >= 1 output, got shape {p.shape}")
    if rows is not None and p.shape[0] != rows:
        raise ChannelError(f"expected {rows} input rows, got {p.shape[0]}")
    if not np.all(np.isfinite(p)) or np.any(p < 0):
        raise ChannelError("probabilities must be finite and nonnegative")
    sums = p.sum(axis=1)
    if np.any(np.abs(sums - 1.0) > ROW_TOL * max(1, p.shape[1])):
        raise ChannelError(f"rows must sum to 1, got {sums}")
    p.setflags(write=False)
    return p


@dataclass(frozen=True, eq=False)
class BinaryInputDMC:
    """Binary-input channel with table ``probs[x, y] = W(y|x)``."""

    probs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "probs", _as_table(self.probs, rows=2))

    @property
    def outputs(self) -> int:
        return self.probs.shape[1]

    def __repr__(self):
        return f"BinaryInputDMC(outputs={self.outputs})"


@dataclass(frozen=True, eq=False)
class MacDMC:
    """m-user binary-input channel with table ``probs[x, y]``.

    ``x`` runs over the ``2**m`` input tuples in lexicographic order,
    user 1 most significant.
    """

    probs: np.ndarray

    def __post_init__(self):
        p = _as_table(self.probs)
        rows = p.shape[0]
        if rows < 2 or rows & (rows - 1):
            raise ChannelError(f"number of rows must be 2**m with m >= 1, got {rows}")
        object.__setattr__(self, "probs", p)

    @property
    def m(self) -> int:
        return self.probs.shape[0].bit_length() - 1

    @property
    def outputs(self) -> int:
        return self.probs.shape[1]

    def __repr__(self):
        return f"MacDMC(m={self.m}, outputs={self.outputs})"


@dataclass(frozen=True)
class RegionConstraints:
    """Subset bounds ``b_J = I(X[J]; Y, X[J^c])`` of the uniform rate region.

    ``bounds`` maps each nonempty frozenset of 1-based user labels to its bound.
    """

    m: int
    bounds: dict
    sum_rate: float

    def bound(self, users) -> float:
        J = frozenset(users)
        return 0.0 if not J else self.bounds[J]

    def corner_points(self) -> np.ndarray:
        """Vertices of the dominant face, one per user permutation."""
        pts = []
        for perm in itertools.permutations(range(1, self.m + 1)):
            # decoding perm[0] first: it sees only Y, the last sees everything
            R = np.zeros(self.m)
            decoded = []
            for j in perm:
                rest = frozenset(range(1, self.m + 1)) - frozenset(decoded)
                # I(X_j; Y, X_decoded) = b_{rest} - b_{rest - j}
                R[j - 1] = self.bound(rest) - self.bound(rest - {j})
                decoded.append(j)
            pts.append(R)
        return np.array(pts)


def as_mac(W: BinaryInputDMC) -> MacDMC:
    return MacDMC(W.probs)


def as_single(W: MacDMC) -> BinaryInputDMC:
    if W.m != 1:
        raise PreconditionError(f"expected a 1-user channel, got m={W.m}")
    return BinaryInputDMC(W.probs)


# ---------------------------------------------------------------------------
# standard channels

def bec(eps: float) -> BinaryInputDMC:
    """Binary erasure channel; outputs are (0, 1, erasure)."""
    if not 0.0 <= eps <= 1.0:
        raise ChannelError(f"erasure probability must lie in [0, 1], got {eps}")
    return BinaryInputDMC([[1 - eps, 0.0, eps], [0.0, 1 - eps, eps]])


def bsc(p: float) -> BinaryInputDMC:
    if not 0.0 <= p <= 1.0:
        raise ChannelError(f"crossover probability must lie in [0, 1], got {p}")
    return BinaryInputDMC([[1 - p, p], [p, 1 - p]])


def noiseless_mac(m: int) -> MacDMC:
    """Output reveals the whole input tuple."""
    return MacDMC(np.eye(2**m))


def product_mac(channels) -> MacDMC:
    """Users transmit over independent single-user channels; output is the tuple."""
    table = np.ones((1, 1))
    for W in channels:
        table = np.einsum("ay,bz->abyz", table, W.probs).reshape(table.shape[0] * 2, -1)
    return MacDMC(table)


def derived_two_user_mac(Wp: BinaryInputDMC) -> MacDMC:
    """Two-user MAC sending ``u xor v`` and ``v`` over two copies of ``Wp``.

    Output symbol ``(y1, y2)`` is flattened as ``y1 * |Y'| + y2``.
    """
    P = Wp.probs
    rows = np.empty((4, P.shape[1] ** 2))
    for u, v in itertools.product((0, 1), repeat=2):
        rows[2 * u + v] = np.outer(P[u ^ v], P[v]).ravel()
    return MacDMC(rows)


@functools.lru_cache(maxsize=8)
def gaussian_mac_quantized(m: int, amplitude: float = 1.0, noise_variance: float = 0.5,
                           grid_min: float = -8.0, grid_max: float = 8.0,
                           bins: int = 1600) -> MacDMC:
    """BPSK sum channel ``y = sum_j xbar[j] + noise`` binned on a uniform grid.

    Bit 0 maps to ``-amplitude`` and bit 1 to ``+amplitude``.  The two outer
    bins absorb the tails.  ``noise_variance`` is the per-sample variance
    ``sigma**2``; with ``N0 = 1`` that is ``N0 / 2 = 0.5``, the value that
    reproduces the published 3-user constants.
    """
    if noise_variance <= 0:
        raise ChannelError("noise variance must be positive")
    if bins < 2 or not grid_max > grid_min:
        raise ChannelError("need bins >= 2 and a nonempty grid")
    edges = np.linspace(grid_min, grid_max, bins + 1)
    edges[0], edges[-1] = -np.inf, np.inf
    sigma = np.sqrt(noise_variance)
    rows = []
    for x in itertools.product((0, 1), repeat=m):
        mean = amplitude * sum(2 * b - 1 for b in x)
        rows.append(np.diff(ndtr((edges - mean) / sigma)))
    rows = np.array(rows)
    rows /= rows.sum(axis=1, keepdims=True)
    return MacDMC(rows)


# ---------------------------------------------------------------------------
# information measures

def entropy(p, axis=-1):
    """Shannon entropy in bits along ``axis``; zeros contribute nothing."""
    p = np.asarray(p, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(p > 0, -p * np.log2(np.where(p > 0, p, 1.0)), 0.0)
    return t.sum(axis=axis)


def mutual_information(W) -> float:
    """I(X;Y) with uniform X, in bits."""
    P = W.probs
    return float(entropy(P.mean(axis=0)) - entropy(P).mean())


def bhattacharyya(W: BinaryInputDMC) -> float:
    return float(np.sqrt(W.probs[0] * W.probs[1]).sum())


def _users(J, m):
    J = frozenset(int(j) for j in J)
    if not J <= frozenset(range(1, m + 1)):
        raise PreconditionError(f"subset {sorted(J)} is not inside users 1..{m}")
    return J


def conditional_output_entropy(W: MacDMC, known) -> float:
    """H(Y | X[known]) with the remaining inputs uniform."""
    m = W.m
    known = _users(known, m)
    P = W.probs.reshape((2,) * m + (W.outputs,))
    hidden = tuple(j - 1 for j in range(1, m + 1) if j not in known)
    if hidden:
        P = P.mean(axis=hidden)
    return float(entropy(P).mean())


def mac_mutual_information(W: MacDMC, J) -> float:
    """I(X[J]; Y, X[J^c]) = H(Y | X[J^c]) - H(Y | X)."""
    J = _users(J, W.m)
    if not J:
        return 0.0
    rest = frozenset(range(1, W.m + 1)) - J
    return conditional_output_entropy(W, rest) - float(entropy(W.probs).mean())


def region_constraints(W: MacDMC, max_users: int = MAX_REGION_USERS) -> RegionConstraints:
    m = W.m
    if m > max_users:
        raise BudgetExceeded(f"m={m} exceeds the subset-evaluation limit {max_users}")
    h_full = float(entropy(W.probs).mean())
    everyone = frozenset(range(1, m + 1))
    bounds = {}
    for size in range(1, m + 1):
        for J in itertools.combinations(range(1, m + 1), size):
            J = frozenset(J)
            bounds[J] = conditional_output_entropy(W, everyone - J) - h_full
    return RegionConstraints(m=m, bounds=bounds, sum_rate=bounds[everyone])


def _constraints(W):
    return W if isinstance(W, RegionConstraints) else region_constraints(W)


def on_dominant_face(W, Q, tol: float = 1e-9) -> bool:
    """Whether ``Q`` lies in the uniform rate region with sum-rate ``I(W)``.

    ``W`` may be a :class:`MacDMC` or precomputed :class:`RegionConstraints`.
    """
    rc = _constraints(W)
    Q = np.asarray(Q, dtype=float)
    if Q.shape != (rc.m,) or np.any(Q < -tol):
        return False
    if abs(Q.sum() - rc.sum_rate) > tol:
        return False
    return all(sum(Q[j - 1] for j in J) <= b + tol for J, b in rc.bounds.items())


def sample_dominant_face(W, count: int, seed: int = 0, max_attempts: int = 1_000_000,
                         tol: float = 1e-9) -> list:
    """Uniform points of the dominant face by rejection from the scaled simplex."""
    if count < 0:
        raise PreconditionError("count must be nonnegative")
    rc = _constraints(W)
    rng = np.random.default_rng(seed)
    out = []
    attempts = 0
    while len(out) < count:
        if attempts >= max_attempts:
            raise SamplingError(f"accepted {len(out)} of {count} points after {attempts} draws")
        Q = rng.dirichlet(np.ones(rc.m)) * rc.sum_rate
        attempts += 1
        if on_dominant_face(rc, Q, tol=tol):
            out.append(Q)
    return out


# ---------------------------------------------------------------------------
# output canonicalization

def merge_outputs(W: BinaryInputDMC, tol: float = 1e-12) -> BinaryInputDMC:
    """Merge outputs sharing a likelihood ratio; drop zero-probability outputs.

    Outputs are sorted by posterior ``P(X=0|y)``.  Merging outputs with equal
    likelihood ratio keeps ``I`` and ``Z`` unchanged, so the result is a
    canonical form for comparing channels.
    """
    P = W.probs
    tot = P.sum(axis=0)
    keep = tot > 0
    P, tot = P[:, keep], tot[keep]
    post = P[0] / tot
    order = np.argsort(post, kind="stable")
    post, P = post[order], P[:, order]
    group = np.concatenate([[0], np.cumsum(np.diff(post) > tol)])
    merged = np.zeros((2, group[-1] + 1))
    np.add.at(merged, (slice(None), group), P)
    return BinaryInputDMC(merged)


def same_channel(A: BinaryInputDMC, B: BinaryInputDMC, atol: float = 1e-12) -> bool:
    """Table equality after canonical merging."""
    a, b = merge_outputs(A).probs, merge_outputs(B).probs
    return a.shape == b.shape and bool(np.allclose(a, b, rtol=0, atol=atol))


# ---------------------------------------------------------------------------
# sampling and file format

def sample_outputs(probs: np.ndarray, inputs: np.ndarray, rng) -> np.ndarray:
    """Draw one output symbol per entry of ``inputs`` (row indices of ``probs``)."""
    inputs = np.asarray(inputs)
    y = np.empty(inputs.shape, dtype=np.int64)
    cdf = np.cumsum(probs, axis=1)
    u = rng.random(inputs.shape)
    for row in range(probs.shape[0]):
        sel = inputs == row
        if np.any(sel):
            y[sel] = np.minimum(np.searchsorted(cdf[row], u[sel], side="right"), probs.shape[1] - 1)
    return y


def channel_to_dict(W) -> dict:
    m = W.m if isinstance(W, MacDMC) else 1
    return {"m": m, "outputs": int(W.outputs), "probs": W.probs.tolist()}


def channel_from_dict(d: dict):
    try:
        m, outputs, probs = int(d["m"]), int(d["outputs"]), d["probs"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ChannelError(f"channel record needs integer 'm', 'outputs' and a 'probs' table: {exc}")
    table = np.array(probs, dtype=float)
    if table.ndim == 1:
        table = table.reshape(2**m, -1)
    if table.shape != (2**m, outputs):
        raise ChannelError(f"'probs' has shape {table.shape}, expected {(2**m, outputs)}")
    W = MacDMC(table)
    return W


def load_channel(path) -> MacDMC:
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ChannelError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}")
    return channel_from_dict(data)


def save_channel(W, path) -> None:
    Path(path).write_text(json.dumps(channel_to_dict(W)) + "\n")
