"""Joint successive-cancellation decoding of all users.

Base positions are processed in decoding order.  For base position ``k``
the decoder marginalizes the base code over the still-undecided base bits
of every instance, then runs an ordinary single-user SC pass of length
``K = N / L`` over those likelihoods.  The decided block is re-encoded with
``G^{(x)(n-l)}`` to give the instance-wise base bits for later positions.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .base_code import DecodingOrder
from .channels import MacDMC
from .errors import PreconditionError
from .likelihood import BaseLikelihood, genie_leaves, log_table
from .mac_code import MacPolarSpec
from .polarization import sc_decode


@dataclass(frozen=True)
class ChannelObservation:
    """Per-use log-likelihoods ``loglik[..., i, x] = log p(y_i | x)``, ``x`` a tuple index."""

    loglik: np.ndarray

    def __post_init__(self):
        ll = np.asarray(self.loglik, dtype=float)
        if ll.ndim < 2:
            raise PreconditionError("observation needs shape (N, 2**m) or (B, N, 2**m)")
        if np.any(np.isnan(ll)) or np.any(ll == np.inf):
            raise PreconditionError("log-likelihoods must not be NaN or +inf")
        if np.any(np.all(ll == -np.inf, axis=-1)):
            raise PreconditionError("some channel use has zero likelihood under every input")
        object.__setattr__(self, "loglik", ll)

    @classmethod
    def from_symbols(cls, W: MacDMC, y) -> "ChannelObservation":
        return cls(np.moveaxis(log_table(W.probs)[:, np.asarray(y)], 0, -1))

    @classmethod
    def from_likelihoods(cls, lik) -> "ChannelObservation":
        lik = np.asarray(lik, dtype=float)
        if np.any(lik < 0):
            raise PreconditionError("likelihoods must be nonnegative")
        return cls(log_table(lik))


@dataclass(frozen=True)
class DecodeResult:
    messages: tuple
    inputs: np.ndarray
    margins: np.ndarray


def _batched(spec: MacPolarSpec, obs):
    ll = obs.loglik if isinstance(obs, ChannelObservation) else ChannelObservation(obs).loglik
    single = ll.ndim == 2
    if single:
        ll = ll[None]
    if ll.shape[1:] != (spec.N, 2**spec.m):
        raise PreconditionError(f"observation shape {ll.shape[1:]} != {(spec.N, 2**spec.m)}")
    return ll, single


def base_level_likelihood(order: DecodingOrder, k: int, block_loglik, decided) -> np.ndarray:
    """Log-likelihood pair of base position ``k`` for one base-code instance.

    ``block_loglik`` has shape ``(L, 2**m)`` (the instance's channel uses in
    order), ``decided`` holds the ``k`` earlier base bits.  Returns
    ``(log p(obs, decided | 0), log p(obs, decided | 1))`` up to a common
    additive constant.
    """
    decided = np.asarray(decided, dtype=np.int64)
    if decided.shape != (k,):
        raise PreconditionError(f"need exactly {k} decided bits")
    base = BaseLikelihood(order)
    tables = base.prefix_tables(base.config_loglik(np.asarray(block_loglik, float)[None]))
    prefix = int("".join(map(str, decided)) or "0", 2)
    return base.pair(tables, k, np.array([[prefix]]))[0, 0]


def decode_batch(spec: MacPolarSpec, ll: np.ndarray):
    """Decode ``ll[B, N, 2**m]``; returns input estimates ``(B, m, N)`` and margins."""
    order = spec.order
    base = BaseLikelihood(order)
    B, N, _ = ll.shape
    K = spec.K
    u_hat = np.zeros((B, spec.m, N), dtype=np.uint8)
    margins = np.zeros((B, spec.m, N))
    frozen = [~spec.info_mask(j) for j in range(1, spec.m + 1)]
    ranks = order.ranks()
    step = base.batch_size(N)
    for s in range(0, B, step):
        sl = slice(s, s + step)
        tables = base.prefix_tables(base.config_loglik(ll[sl]))
        prefix = np.zeros((tables[0].shape[0], K), dtype=np.int64)
        for k, j in enumerate(order.word):
            blk = slice(ranks[k] * K, (ranks[k] + 1) * K)
            u, v, marg = sc_decode(base.pair(tables, k, prefix), frozen[j - 1][blk],
                                   spec.frozen_values[j - 1][blk])
            u_hat[sl, j - 1, blk] = u
            margins[sl, j - 1, blk] = marg
            prefix = 2 * prefix + v
    return u_hat, margins


def decode(spec: MacPolarSpec, obs) -> DecodeResult:
    """Joint SC decoding of one observation ``(N, 2**m)`` or a batch ``(B, N, 2**m)``."""
    ll, single = _batched(spec, obs)
    u_hat, margins = decode_batch(spec, ll)
    if single:
        u_hat, margins = u_hat[0], margins[0]
    msgs = tuple(u_hat[..., j, s] for j, s in enumerate(spec.info_sets))
    return DecodeResult(messages=msgs, inputs=u_hat, margins=margins)


def genie_decode(spec: MacPolarSpec, obs, true_inputs) -> np.ndarray:
    """Per-position flags where the decision errs with all earlier bits correct.

    ``true_inputs`` are the user vectors ``u`` (shape ``(m, N)`` or batched).
    Returns booleans of the same shape; frozen positions are never flagged.
    """
    ll, single = _batched(spec, obs)
    u = np.asarray(true_inputs, dtype=np.uint8)
    if single:
        u = u[None]
    leaves = genie_leaves(spec.order, u, ll)
    decisions = (leaves[..., 1] > leaves[..., 0]).astype(np.uint8)
    K = spec.K
    ranks = spec.order.ranks()
    flags = np.zeros(u.shape, bool)
    for k, j in enumerate(spec.order.word):
        blk = slice(ranks[k] * K, (ranks[k] + 1) * K)
        flags[:, j - 1, blk] = decisions[:, k] != u[:, j - 1, blk]
    for j in range(spec.m):
        flags[:, j, ~spec.info_mask(j + 1)] = False
    return flags[0] if single else flags
