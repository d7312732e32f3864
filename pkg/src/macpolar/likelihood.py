"""Base-level likelihoods shared by the joint decoder and Monte Carlo construction.

With ``K = N / L`` the length-N code splits into ``K`` independent copies
("instances") of the base code: instance ``d`` uses channel slots
``d, K + d, ..., (L-1)K + d``, and its base input for decoding position
``k`` is entry ``d`` of ``u_block G^{(x)(n-l)}``, where ``u_block`` is the
length-K slice of the owning user's vector at that position's rank.
"""
from __future__ import annotations

import numpy as np

from .base_code import DecodingOrder, base_inputs_to_x
from .channels import sample_outputs
from .errors import PreconditionError
from .polarization import _mean_and_halfwidth, block_rng, polar_transform, sc_genie, z_samples

ENTRY_BUDGET = 2**23


def log_table(p):
    p = np.asarray(p, dtype=float)
    with np.errstate(divide="ignore"):
        return np.log(p)


def tuple_index(x: np.ndarray) -> np.ndarray:
    """Channel-input tuple index from per-user bits ``x[..., m, N]``; user 1 most significant."""
    m = x.shape[-2]
    w = (1 << np.arange(m - 1, -1, -1)).astype(np.int64)
    return np.tensordot(np.moveaxis(x.astype(np.int64), -2, -1), w, axes=1)


class BaseLikelihood:
    """Joint likelihoods of base-code input configurations, per instance."""

    def __init__(self, order: DecodingOrder):
        self.order = order
        self.M = len(order.word)
        self.L = order.L
        self.xidx = base_inputs_to_x(order.word, self.L.bit_length() - 1)

    def config_loglik(self, ll: np.ndarray) -> np.ndarray:
        """``LC[b, d, config] = sum_c ll[b, c*K + d, x(config, c)]``."""
        B, N, _ = ll.shape
        if N % self.L:
            raise PreconditionError(f"block length {N} is not a multiple of L={self.L}")
        K = N // self.L
        ll = ll.reshape(B, self.L, K, -1)
        out = np.zeros((B, K, self.xidx.shape[0]))
        for c in range(self.L):
            out += ll[:, c][:, :, self.xidx[:, c]]
        return out

    def prefix_tables(self, LC: np.ndarray) -> list:
        """``T[t][b, d, p]``: log-likelihood with the first ``t`` positions equal to ``p``."""
        tables = [None] * (self.M + 1)
        tables[self.M] = LC
        for t in range(self.M - 1, -1, -1):
            nxt = tables[t + 1]
            tables[t] = np.logaddexp(nxt[..., 0::2], nxt[..., 1::2])
        return tables

    @staticmethod
    def pair(tables, k: int, prefix: np.ndarray) -> np.ndarray:
        """Log-likelihood pair for position ``k`` given decided prefix values."""
        T = tables[k + 1]
        idx = 2 * prefix.astype(np.int64)
        l0 = np.take_along_axis(T, idx[..., None], axis=-1)[..., 0]
        l1 = np.take_along_axis(T, idx[..., None] + 1, axis=-1)[..., 0]
        return np.stack([l0, l1], axis=-1)

    def batch_size(self, N: int) -> int:
        return max(1, ENTRY_BUDGET // (2 * N // self.L * self.xidx.shape[0]))


def genie_leaves(order: DecodingOrder, u: np.ndarray, ll: np.ndarray) -> np.ndarray:
    """Leaf log-likelihood pairs for every global decoding position.

    ``u`` has shape ``(B, m, N)`` (true user vectors), ``ll`` shape
    ``(B, N, 2**m)``.  Returns ``(B, mL, K, 2)``: for base position ``k``, the
    pairs of the ``K`` outer bit-channels with all earlier bits known.
    """
    base = BaseLikelihood(order)
    B, m, N = u.shape
    K = N // order.L
    tables = base.prefix_tables(base.config_loglik(ll))
    ranks = order.ranks()
    prefix = np.zeros((B, K), dtype=np.int64)
    out = np.empty((B, base.M, K, 2))
    for k, j in enumerate(order.word):
        blk = u[:, j - 1, ranks[k] * K:(ranks[k] + 1) * K]
        out[:, k] = sc_genie(base.pair(tables, k, prefix), blk)
        prefix = 2 * prefix + polar_transform(blk)
    return out


def sample_mac_loglik(probs: np.ndarray, x: np.ndarray, rng) -> np.ndarray:
    """Sample outputs of a discrete MAC for inputs ``x[B, m, N]``; return ``ll[B, N, 2**m]``."""
    y = sample_outputs(probs, tuple_index(x), rng)
    return np.moveaxis(log_table(probs)[:, y], 0, -1)


def mac_monte_carlo_z(W, order: DecodingOrder, n: int, trials: int, seed: int = 0,
                      block: int = 64):
    """Genie-aided ``Z`` estimates for every global position of the length-N code.

    Base-level likelihoods are computed exactly from the MAC table; only the
    outer ``n - l`` levels are sampled.  Returns ``(z, halfwidth)`` of shape
    ``(mL, K)``.
    """
    if trials < 1:
        raise PreconditionError("need at least one trial")
    N = 2**n
    m = W.m
    K = N // order.L
    shape = (len(order.word), K)
    total, total_sq = np.zeros(shape), np.zeros(shape)
    sub = BaseLikelihood(order).batch_size(N)
    for b, start in enumerate(range(0, trials, block)):
        B = min(block, trials - start)
        rng = block_rng(seed, b)
        u = rng.integers(0, 2, size=(B, m, N), dtype=np.uint8)
        ll = sample_mac_loglik(W.probs, polar_transform(u), rng)
        for s in range(0, B, sub):
            uu = u[s:s + sub]
            leaves = genie_leaves(order, uu, ll[s:s + sub])
            truth = _truth_by_position(order, uu)
            zs = z_samples(leaves, truth)
            total += zs.sum(axis=0)
            total_sq += (zs * zs).sum(axis=0)
    return _mean_and_halfwidth(total, total_sq, trials)


def _truth_by_position(order: DecodingOrder, u: np.ndarray) -> np.ndarray:
    K = u.shape[-1] // order.L
    ranks = order.ranks()
    return np.stack([u[:, j - 1, ranks[k] * K:(ranks[k] + 1) * K]
                     for k, j in enumerate(order.word)], axis=1)
