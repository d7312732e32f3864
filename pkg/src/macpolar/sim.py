"""Monte Carlo frame-error simulation.

Trials are split into fixed-size blocks; block ``b`` draws everything from
``default_rng([seed, b])``.  Blocks may run on any number of threads and the
aggregated report is identical regardless of scheduling.
"""
from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

from .channels import MacDMC
from .decoder import decode_batch
from .errors import PreconditionError
from .likelihood import sample_mac_loglik
from .mac_code import MacPolarSpec, encode, fer_union_bound
from .polarization import block_rng

SIM_BLOCK = 256


@dataclass
class SimConfig:
    """Everything needed to reproduce a CLI run."""

    channel: str = "gaussian:m=3"
    m: int = None
    L: int = 2
    order: str = None
    n: int = 6
    beta: float = 0.45
    trials: int = 1000
    seed: int = 0
    method: str = "exact"
    selection: str = "threshold"
    samples: int = 200
    workers: int = 1
    spec: str = None
    out: str = None
    fmt: str = "csv"
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.trials < 1:
            raise PreconditionError("trials must be >= 1")


@dataclass(frozen=True)
class FerReport:
    trials: int
    frame_errors: int
    fer: float
    ci_low: float
    ci_high: float
    union_bound: float
    bit_errors: tuple

    def to_dict(self) -> dict:
        return {"trials": self.trials, "frame_errors": self.frame_errors, "fer": self.fer,
                "ci_low": self.ci_low, "ci_high": self.ci_high,
                "union_bound": self.union_bound, "bit_errors": list(self.bit_errors)}


def wilson_interval(k: int, n: int, level: float = 0.95):
    """Wilson score interval for ``k`` successes in ``n`` trials."""
    if n < 1 or not 0 <= k <= n:
        raise PreconditionError(f"need 0 <= k <= n and n >= 1, got k={k}, n={n}")
    z = norm.ppf(0.5 + level / 2)
    p = k / n
    den = 1 + z * z / n
    mid = (p + z * z / (2 * n)) / den
    half = z * np.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / den
    # clamp rounding so the interval always contains the point estimate
    return min(p, max(0.0, mid - half)), max(p, min(1.0, mid + half))


class DiscreteSampler:
    """Output symbols drawn from a discrete MAC table."""

    def __init__(self, W: MacDMC):
        self.W = W
        self.m = W.m

    def __call__(self, x, rng):
        return sample_mac_loglik(self.W.probs, x, rng)


class GaussianSampler:
    """BPSK sum channel with continuous Gaussian noise and exact log-densities.

    ``x[b, j, i]`` maps to ``(2x - 1) * amplitude``; the decoder receives
    ``log p(y | tuple)`` up to a per-use constant.
    """

    def __init__(self, m: int, amplitude: float = 1.0, noise_variance: float = 0.5):
        if noise_variance <= 0:
            raise PreconditionError("noise variance must be positive")
        self.m = m
        self.amplitude = amplitude
        self.noise_variance = noise_variance
        tuples = np.array(list(itertools.product((0, 1), repeat=m)))
        self.means = amplitude * (2 * tuples - 1).sum(axis=1)

    def __call__(self, x, rng):
        mean = self.amplitude * (2 * x.astype(float) - 1).sum(axis=-2)
        y = mean + rng.normal(0.0, np.sqrt(self.noise_variance), mean.shape)
        return -((y[..., None] - self.means) ** 2) / (2 * self.noise_variance)


def _run_block(spec: MacPolarSpec, sampler, seed: int, b: int, size: int):
    rng = block_rng(seed, b)
    msgs = [rng.integers(0, 2, size=(size, len(s)), dtype=np.uint8) for s in spec.info_sets]
    ll = sampler(encode(spec, msgs), rng)
    u_hat, _ = decode_batch(spec, ll)
    wrong = np.zeros(size, bool)
    bits = []
    for j, s in enumerate(spec.info_sets):
        err = u_hat[:, j, s] != msgs[j]
        wrong |= err.any(axis=1)
        bits.append(int(err.sum()))
    return int(wrong.sum()), bits


def simulate(spec: MacPolarSpec, sampler, trials: int, seed: int = 0, workers: int = 1,
             block: int = SIM_BLOCK) -> FerReport:
    """Encode random messages, pass them through ``sampler`` and decode jointly."""
    if trials < 1:
        raise PreconditionError("trials must be >= 1")
    if sampler.m != spec.m:
        raise PreconditionError(f"sampler has {sampler.m} users, code has {spec.m}")
    jobs = [(b, min(block, trials - start)) for b, start in enumerate(range(0, trials, block))]
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(lambda j: _run_block(spec, sampler, seed, *j), jobs))
    else:
        results = [_run_block(spec, sampler, seed, *j) for j in jobs]
    frames = sum(r[0] for r in results)
    bits = tuple(int(sum(r[1][j] for r in results)) for j in range(spec.m))
    lo, hi = map(float, wilson_interval(frames, trials))
    ub = fer_union_bound(spec) if spec.z is not None else float("nan")
    return FerReport(trials=trials, frame_errors=frames, fer=frames / trials,
                     ci_low=lo, ci_high=hi, union_bound=ub, bit_errors=bits)
