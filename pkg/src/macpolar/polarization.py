"""Single-user polar machinery.

The transform is the plain Kronecker power ``x = u G^{(x)n}`` with
``G = [[1, 0], [1, 1]]`` and no bit-reversal.  Bit-channel ``i`` (0-based)
is obtained from ``W`` by applying the minus/plus step selected by each bit
of ``i``, most significant bit first.

The successive-cancellation kernel here works on log-likelihood *pairs*
``(log p(.|0), log p(.|1))`` rather than ratios so that hard zeros
(erasures, noiseless outputs) never produce NaNs.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channels import BinaryInputDMC, bhattacharyya, merge_outputs, sample_outputs
from .errors import BudgetExceeded, PreconditionError

TABLE_BUDGET = 10**6
MC_BLOCK = 256


def _depth(N: int) -> int:
    if N < 1 or N & (N - 1):
        raise PreconditionError(f"length must be a power of two, got {N}")
    return N.bit_length() - 1


def polar_transform(u) -> np.ndarray:
    """``u G^{(x)n}`` over GF(2) along the last axis.  Self-inverse."""
    x = np.array(u, dtype=np.uint8) & 1
    N = x.shape[-1]
    n = _depth(N)
    lead = x.shape[:-1]
    for s in range(n):
        h = 1 << s
        v = x.reshape(lead + (N // (2 * h), 2, h))
        v[..., 0, :] ^= v[..., 1, :]
    return x


# ---------------------------------------------------------------------------
# channel combining

def combine_minus(W: BinaryInputDMC) -> BinaryInputDMC:
    """``W-(y1, y2 | u1) = 1/2 sum_u2 W(y1|u1^u2) W(y2|u2)``; output index ``y1*|Y| + y2``."""
    P = W.probs
    rows = [0.5 * (np.outer(P[u1], P[0]) + np.outer(P[u1 ^ 1], P[1])).ravel() for u1 in (0, 1)]
    return BinaryInputDMC(np.array(rows))


def combine_plus(W: BinaryInputDMC) -> BinaryInputDMC:
    """``W+(y1, y2, u1 | u2) = 1/2 W(y1|u1^u2) W(y2|u2)``; output index ``u1*|Y|^2 + y1*|Y| + y2``."""
    P = W.probs
    rows = [np.concatenate([0.5 * np.outer(P[u1 ^ u2], P[u2]).ravel() for u1 in (0, 1)])
            for u2 in (0, 1)]
    return BinaryInputDMC(np.array(rows))


def _step(W, plus, merge, budget):
    size = 2 * W.outputs**2 if plus else W.outputs**2
    if size > budget:
        raise BudgetExceeded(
            f"bit-channel table would need {size} outputs (budget {budget}); "
            "use merge=True or the Monte Carlo estimator")
    V = combine_plus(W) if plus else combine_minus(W)
    return merge_outputs(V) if merge else V


def bit_channel_exact(W: BinaryInputDMC, n: int, i: int, merge: bool = True,
                      budget: int = TABLE_BUDGET) -> BinaryInputDMC:
    """Exact table of bit-channel ``i`` (0-based) of ``N = 2**n`` copies of ``W``."""
    if not 0 <= i < 2**n:
        raise PreconditionError(f"index {i} outside [0, {2**n})")
    V = merge_outputs(W) if merge else W
    for level in range(n - 1, -1, -1):
        V = _step(V, (i >> level) & 1, merge, budget)
    return V


def all_bit_channels_exact(W: BinaryInputDMC, n: int, merge: bool = True,
                           budget: int = TABLE_BUDGET) -> list:
    """All ``2**n`` bit-channels, sharing the common prefixes of the recursion."""
    level = [merge_outputs(W) if merge else W]
    for _ in range(n):
        level = [_step(V, plus, merge, budget) for V in level for plus in (0, 1)]
    return level


def bit_channel_z(W: BinaryInputDMC, n: int, budget: int = TABLE_BUDGET) -> np.ndarray:
    return np.array([bhattacharyya(V) for V in all_bit_channels_exact(W, n, budget=budget)])


def erasure_recursion(eps: float, n: int) -> np.ndarray:
    """Erasure probabilities of the bit-channels of BEC(eps), in index order."""
    z = np.array([eps])
    for _ in range(n):
        z = np.stack([2 * z - z * z, z * z], axis=1).ravel()
    return z


# ---------------------------------------------------------------------------
# successive cancellation on log-likelihood pairs

def _normalize(l):
    mx = l.max(axis=-1, keepdims=True)
    dead = ~np.isfinite(mx)
    # both hypotheses impossible only after an earlier wrong decision; treat as erasure
    out = l - np.where(dead, 0.0, mx)
    return np.where(dead, 0.0, out)


def _check(a, b):
    l0 = np.logaddexp(a[..., 0] + b[..., 0], a[..., 1] + b[..., 1])
    l1 = np.logaddexp(a[..., 0] + b[..., 1], a[..., 1] + b[..., 0])
    return _normalize(np.stack([l0, l1], axis=-1))


def _bit(a, b, s):
    s = s.astype(bool)
    a0 = np.where(s, a[..., 1], a[..., 0])
    a1 = np.where(s, a[..., 0], a[..., 1])
    return _normalize(np.stack([a0 + b[..., 0], a1 + b[..., 1]], axis=-1))


class _SC:
    """One batched SC pass; records decisions and, optionally, leaf pairs."""

    def __init__(self, frozen, frozen_values, truth, record):
        self.frozen = frozen
        self.fvals = frozen_values
        self.truth = truth
        self.record = record
        self.u = None
        self.leaves = None
        self.margins = None

    def run(self, l):
        B, K, _ = l.shape
        self.u = np.zeros((B, K), dtype=np.uint8)
        self.margins = np.zeros((B, K))
        if self.record:
            self.leaves = np.zeros((B, K, 2))
        return self._node(_normalize(l), 0)

    def _node(self, l, off):
        B, K, _ = l.shape
        if self.truth is None and not self.record and self.frozen[off:off + K].all():
            u = np.broadcast_to(self.fvals[off:off + K], (B, K))
            self.u[:, off:off + K] = u
            return polar_transform(u)
        if K == 1:
            p = l[:, 0, :]
            if self.record:
                self.leaves[:, off] = p
            self.margins[:, off] = p[:, 0] - p[:, 1]
            if self.truth is not None:
                b = self.truth[:, off]
            elif self.frozen[off]:
                b = np.full(B, self.fvals[off], dtype=np.uint8)
            else:
                b = (p[:, 1] > p[:, 0]).astype(np.uint8)
            self.u[:, off] = b
            return b[:, None]
        h = K // 2
        first, second = l[:, :h], l[:, h:]
        xa = self._node(_check(first, second), off)
        xb = self._node(_bit(first, second, xa), off + h)
        return np.concatenate([xa ^ xb, xb], axis=1)


def sc_decode(loglik, frozen=None, frozen_values=None):
    """Batched SC decoding of ``x = u G^{(x)n}``.

    Parameters
    ----------
    loglik : array (B, K, 2)
        Per-channel-use log-likelihood pairs.
    frozen : bool array (K,)
    frozen_values : uint8 array (K,)

    Returns
    -------
    u, x, margins
        Decisions, their re-encoding, and the decision margins
        ``log p(.|0) - log p(.|1)`` at each leaf.
    """
    loglik = np.asarray(loglik, dtype=float)
    K = loglik.shape[1]
    frozen = np.zeros(K, bool) if frozen is None else np.asarray(frozen, bool)
    fvals = np.zeros(K, np.uint8) if frozen_values is None else np.asarray(frozen_values, np.uint8)
    sc = _SC(frozen, fvals, None, False)
    x = sc.run(loglik)
    return sc.u, x, sc.margins


def sc_genie(loglik, truth):
    """Leaf log-likelihood pairs with every earlier bit set to ``truth``."""
    loglik = np.asarray(loglik, dtype=float)
    K = loglik.shape[1]
    sc = _SC(np.zeros(K, bool), np.zeros(K, np.uint8), np.asarray(truth, np.uint8), True)
    sc.run(loglik)
    return sc.leaves


def z_samples(leaves, truth):
    """Per-trial values of ``sqrt(W(out|wrong) / W(out|true))``; their mean is Z."""
    truth = np.asarray(truth, bool)
    l_true = np.where(truth, leaves[..., 1], leaves[..., 0])
    l_wrong = np.where(truth, leaves[..., 0], leaves[..., 1])
    return np.exp(0.5 * (l_wrong - l_true))


def block_rng(seed: int, block: int):
    """Counter-based stream for trial block ``block``; independent of scheduling."""
    return np.random.default_rng([int(seed), int(block)])


def _mean_and_halfwidth(total, total_sq, trials):
    mean = total / trials
    var = np.maximum(total_sq / trials - mean**2, 0.0)
    hw = 1.96 * np.sqrt(var / max(trials - 1, 1))
    # rule of three: an all-equal sample still leaves O(1/trials) uncertainty
    return mean, np.maximum(hw, 3.0 / trials)


def monte_carlo_z_all(W: BinaryInputDMC, n: int, trials: int, seed: int = 0):
    """Genie-aided estimates of ``Z`` for every bit-channel.

    Returns ``(estimate, halfwidth)`` arrays; the half-width is the 95%
    normal-approximation interval, floored at ``3 / trials``.
    """
    if trials < 1:
        raise PreconditionError("need at least one trial")
    N = 2**n
    logp = np.log(np.where(W.probs > 0, W.probs, 1.0)) + np.where(W.probs > 0, 0.0, -np.inf)
    total = np.zeros(N)
    total_sq = np.zeros(N)
    for b, start in enumerate(range(0, trials, MC_BLOCK)):
        B = min(MC_BLOCK, trials - start)
        rng = block_rng(seed, b)
        u = rng.integers(0, 2, size=(B, N), dtype=np.uint8)
        y = sample_outputs(W.probs, polar_transform(u), rng)
        ll = np.stack([logp[0][y], logp[1][y]], axis=-1)
        s = z_samples(sc_genie(ll, u), u)
        total += s.sum(axis=0)
        total_sq += (s * s).sum(axis=0)
    return _mean_and_halfwidth(total, total_sq, trials)


def monte_carlo_z(W: BinaryInputDMC, n: int, i: int, trials: int, seed: int = 0):
    """Estimate and 95% half-width of ``Z`` of bit-channel ``i`` (0-based)."""
    if not 0 <= i < 2**n:
        raise PreconditionError(f"index {i} outside [0, {2**n})")
    est, hw = monte_carlo_z_all(W, n, trials, seed)
    return float(est[i]), float(hw[i])


# ---------------------------------------------------------------------------
# good sets

def good_threshold(N: int, beta: float, users: int = 1) -> float:
    """``2**(-N**beta) / (users * N)``."""
    return 2.0 ** (-(N**beta)) / (users * N)


@dataclass(frozen=True)
class GoodSet:
    beta: float
    n: int
    indices: np.ndarray
    z: np.ndarray

    @property
    def rate(self) -> float:
        return len(self.indices) / 2**self.n


def good_set(W: BinaryInputDMC, n: int, beta: float, method: str = "exact",
             trials: int = 1000, seed: int = 0, budget: int = TABLE_BUDGET) -> GoodSet:
    """Indices ``i`` (0-based) with ``Z(W_N^(i)) < 2**(-N**beta) / N``."""
    if not 0 < beta < 0.5:
        raise PreconditionError(f"beta must lie in (0, 1/2), got {beta}")
    if method == "exact":
        z = bit_channel_z(W, n, budget=budget)
    elif method == "montecarlo":
        z, _ = monte_carlo_z_all(W, n, trials, seed)
    else:
        raise PreconditionError(f"unknown method {method!r}")
    idx = np.flatnonzero(z < good_threshold(2**n, beta))
    return GoodSet(beta=beta, n=n, indices=idx, z=z)
