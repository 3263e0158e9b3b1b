"""Index sampling schemes and stepsize policies.

Uniform batches are drawn without replacement (partial Fisher-Yates);
Lipschitz-weighted sampling draws with replacement, matching the analyses
those stepsizes come from.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .data import draw_index

ARMIJO_FLOOR = 1e-12
ARMIJO_SKIP_NORM = 1e-8


@dataclass(frozen=True)
class SamplingScheme:
    kind: str = "uniform"  # "uniform" or "lipschitz"
    batch: int = 1
    probs: np.ndarray | None = None
    cumprobs: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in ("uniform", "lipschitz"):
            raise ValueError("unknown sampling kind %r" % self.kind)
        if self.batch < 1:
            raise ValueError("batch size must be >= 1")
        if self.kind == "lipschitz":
            if self.probs is None:
                raise ValueError("lipschitz sampling needs weights")
            p = np.asarray(self.probs, dtype=np.float64)
            if (p <= 0).any():
                raise ValueError("lipschitz weights must be positive")
            p = p / p.sum()
            if abs(p.sum() - 1.0) > 1e-12:
                raise ValueError("weights failed to normalize")
            object.__setattr__(self, "probs", p)
            object.__setattr__(self, "cumprobs", np.cumsum(p))


def uniform_scheme(batch=1):
    return SamplingScheme("uniform", batch)


def lipschitz_scheme(weights, batch=1):
    """Weights p_i proportional to the given per-example constants."""
    return SamplingScheme("lipschitz", batch, probs=np.asarray(weights, dtype=np.float64))


def sample(scheme, rng, n):
    """Draw one index set B_k of size scheme.batch from {0..n-1}."""
    b = scheme.batch
    if scheme.kind == "uniform":
        if b > n:
            raise ValueError("batch %d exceeds n=%d without replacement" % (b, n))
        if b == 1:
            return np.array([draw_index(rng, n)], dtype=np.int64)
        pool = np.arange(n)
        for t in range(b):
            j = t + rng.integers(0, n - t)
            pool[t], pool[j] = pool[j], pool[t]
        return pool[:b].copy()
    if len(scheme.probs) != n:
        raise ValueError("weight vector length %d != n=%d" % (len(scheme.probs), n))
    cum = scheme.cumprobs
    out = np.empty(b, dtype=np.int64)
    for t in range(b):
        out[t] = np.searchsorted(cum, rng.random(), side="right")
    # guard against u == 1.0 rounding past the end
    np.clip(out, 0, n - 1, out=out)
    return out


@dataclass(frozen=True)
class StepsizePolicy:
    kind: str  # "fixed", "theory", "minibatch", "armijo"
    gamma: float | None = None
    gamma_max: float = 1.0
    c: float = 0.5
    factor: float = 0.5

    def __post_init__(self):
        if self.kind not in ("fixed", "theory", "minibatch", "armijo"):
            raise ValueError("unknown stepsize policy %r" % self.kind)
        if self.kind == "fixed" and (self.gamma is None or self.gamma <= 0):
            raise ValueError("fixed policy needs gamma > 0")
        if self.kind == "armijo":
            if not (0 < self.c < 1):
                raise ValueError("armijo c must lie in (0,1)")
            if not (0 < self.factor < 1):
                raise ValueError("backtrack factor must lie in (0,1)")
            if self.gamma_max <= 0:
                raise ValueError("gamma_max must be positive")


def fixed_policy(gamma):
    return StepsizePolicy("fixed", gamma=float(gamma))


def theory_policy():
    return StepsizePolicy("theory")


def minibatch_policy():
    return StepsizePolicy("minibatch")


def armijo_policy(gamma_max=1.0, c=0.5, factor=0.5):
    return StepsizePolicy("armijo", gamma_max=gamma_max, c=c, factor=factor)


def minibatch_smoothness(l_max, l_full, n, b):
    """The batch-size-b smoothness constant interpolating L_max down to L.

    L(b) = (1/b) (n-b)/(n-1) L_max + (n/b) (b-1)/(n-1) L, with L(1) = L_max
    and L(n) = L; n = 1 returns L_max.
    """
    if not 1 <= b <= n:
        raise ValueError("batch size %d out of range [1, %d]" % (b, n))
    if l_full > l_max:
        raise ValueError("l_full must not exceed l_max")
    if n == 1:
        return float(l_max)
    b = float(b)
    return float((n - b) / (b * (n - 1)) * l_max + n * (b - 1) / (b * (n - 1)) * l_full)


def default_stepsize(method, info, scheme=None):
    """Theory-default constant stepsize for a method under a sampling scheme.

    1/L_max for the variance-reduced methods at b=1 uniform, 1/L(b) for
    mini-batches, 1/L-bar under Lipschitz sampling, 1/L for gd. Plain sgd has
    no safe constant-step default and must be given gamma explicitly.
    """
    scheme = scheme or uniform_scheme()
    if method == "gd":
        if not info.l_full_exact:
            warnings.warn("global L is a fallback bound; using it anyway")
        return 1.0 / info.l_full
    if method in ("sgd", "sgd_momentum"):
        raise ValueError("no theory default stepsize for %s; set gamma explicitly" % method)
    if method == "sdca":
        raise ValueError("sdca uses exact line search, not a stepsize")
    if method not in ("sag", "saga", "svrg", "sarah", "sgd_star"):
        raise ValueError("unknown method %r" % method)
    if scheme.kind == "lipschitz":
        return 1.0 / info.l_mean
    if scheme.batch == 1:
        return 1.0 / info.l_max
    if not info.l_full_exact:
        warnings.warn("global L is a fallback bound; L(b) uses it anyway")
    n = len(info.per_example)
    return 1.0 / minibatch_smoothness(info.l_max, info.l_full, n, scheme.batch)


def armijo_stochastic(obj, i, x, g, policy, gamma_start=None):
    """Backtracking stepsize on the sampled example alone.

    Finds the largest gamma in {start * factor^m} with
    f_i(x + gamma g) < f_i(x) - c gamma ||grad f_i(x)||^2, where g is the
    update direction. Skips (returns gamma_max) when ||grad f_i(x)|| <= 1e-8;
    returns the floor-level trial when nothing passes.
    """
    gi = obj.grad_i(x, i)
    gnorm_sq = float(np.dot(gi, gi))
    if gnorm_sq <= ARMIJO_SKIP_NORM**2:
        return policy.gamma_max
    f0 = obj.value_i(x, i)
    gamma = policy.gamma_max if gamma_start is None else min(gamma_start, policy.gamma_max)
    while True:
        ft = obj.value_i(x + gamma * g, i)
        if not np.isfinite(ft):
            raise FloatingPointError("non-finite trial value at gamma=%g" % gamma)
        if ft < f0 - policy.c * gamma * gnorm_sq:
            return gamma
        if gamma <= ARMIJO_FLOOR:
            return gamma
        gamma = max(gamma * policy.factor, ARMIJO_FLOOR)
