"""Iterative methods and the run driver.

Covers the full gradient baseline, plain/momentum/reference-shifted
stochastic gradient, the averaged-gradient table methods, snapshot-anchored
variance reduction (fixed-loop and continuous-correction variants), dual
coordinate ascent, and mini-batch forms of the per-example methods.

Convention used throughout: gradient tables and anchors store only the loss
part loss'(a_i^T x) a_i of each per-example gradient; the l2 term is applied
at the current iterate, so every table-method step has the shape
x <- (1 - gamma*l2) x - gamma * (covariate terms). The estimate whose
expectation matters is always (loss covariates) + l2*x, which averages to the
true full gradient.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from .data import RandomSource
from .diag import StopRule, TraceRecord, duality_gap, enum_stats, should_stop
from .objectives import NonSmoothError, smoothness
from .schedules import (
    SamplingScheme,
    StepsizePolicy,
    armijo_stochastic,
    default_stepsize,
    sample,
    theory_policy,
    uniform_scheme,
)

METHODS = ("gd", "sgd", "sgd_momentum", "sgd_star", "sag", "saga", "svrg", "sarah", "sdca")
TABLE_METHODS = ("sag", "saga")


class DivergenceError(RuntimeError):
    """A run produced a non-finite value; carries the partial trace."""

    def __init__(self, message, gamma=None, records=None):
        super().__init__(message)
        self.gamma = gamma
        self.records = records if records is not None else []


class ConfigError(ValueError):
    """Inconsistent run configuration."""


def _check_finite(value, gamma):
    if not np.isfinite(value):
        raise DivergenceError("non-finite value encountered (gamma=%g)" % (gamma if gamma else 0.0), gamma=gamma)


# ---------------------------------------------------------------------------
# states


class GradientTable:
    """Per-example loss-gradient memory v^i plus the running sum.

    mode "dense" stores each v^i = loss'_i * a_i as a dense vector; mode
    "scalar" stores only the scalar loss'_i (valid because the loss gradient
    is a scalar multiple of a_i). Both modes perform identical arithmetic:
    the dense entries are exactly the products the scalar mode recomputes,
    so trajectories match bit for bit.
    """

    def __init__(self, obj, mode="dense", init_x=None):
        if mode not in ("dense", "scalar"):
            raise ConfigError("table mode must be dense or scalar, not %r" % mode)
        self.mode = mode
        self.n = obj.n
        self.d = obj.d
        if mode == "scalar":
            self.s = np.zeros(self.n)
        else:
            self.v = np.zeros((self.n, self.d))
        self.gsum = np.zeros(self.d)
        self.seen = np.zeros(self.n, dtype=bool)
        self.seen_count = 0
        if init_x is not None:
            for i in range(self.n):
                row = obj.data.rows[i]
                s = obj.loss.deriv(float(np.dot(row.values, init_x[row.indices])), obj.labels[i])
                prod = s * row.values
                if mode == "scalar":
                    self.s[i] = s
                else:
                    self.v[i, row.indices] = prod
                self.gsum[row.indices] += prod
            self.seen[:] = True
            self.seen_count = self.n

    def cov_vals(self, i, row):
        """Stored v^i restricted to the row support."""
        if self.mode == "scalar":
            return self.s[i] * row.values
        return self.v[i, row.indices]

    def store(self, i, row, new_vals, new_scalar):
        if self.mode == "scalar":
            self.s[i] = new_scalar
        else:
            self.v[i, row.indices] = new_vals
        if not self.seen[i]:
            self.seen[i] = True
            self.seen_count += 1

    def mean(self):
        return self.gsum / self.n

    def mean_from_scratch(self, obj):
        """Recomputed (1/n) sum_i v^i, bypassing the running sum."""
        if self.mode == "scalar":
            total = obj.data.to_csr().T @ self.s
        else:
            total = self.v.sum(axis=0)
        return total / self.n

    def mean_rel_error(self, obj):
        ref = self.mean_from_scratch(obj)
        err = np.linalg.norm(self.mean() - ref)
        return float(err / (1.0 + np.linalg.norm(ref)))


@dataclass
class MomentumState:
    m: np.ndarray
    beta: float

    def __post_init__(self):
        if not 0 < self.beta < 1:
            raise ConfigError("momentum beta must lie in (0,1)")


@dataclass(frozen=True)
class StarTable:
    """Reference-point gradients: scalars loss'(a_i^T x*) plus x* itself."""

    x_star: np.ndarray
    scalars: np.ndarray


def star_table(obj, x_star):
    if not obj.loss.smooth:
        raise NonSmoothError("non-smooth loss: %s" % obj.loss.name)
    s = obj.loss.deriv_vec(obj.data.margins(x_star), obj.labels)
    return StarTable(x_star=np.array(x_star, dtype=np.float64), scalars=s)


class SvrgState:
    """Snapshot anchor: x_ref, its per-example loss scalars, and gradients."""

    def __init__(self, t, variant="fixed"):
        if variant not in ("fixed", "sampled"):
            raise ConfigError("svrg variant must be fixed or sampled")
        self.t = int(t)
        self.variant = variant
        self.x_ref = None
        self.s_ref = None
        self.loss_ref = None  # loss part of grad f(x_ref)
        self.grad_ref = None  # full grad f(x_ref)
        self.inner_done = 0


class SarahState:
    """Running estimate g_k plus the previous iterate it was formed at."""

    def __init__(self, t):
        self.t = int(t)
        self.g = None
        self.x_prev = None
        self.inner_done = 0


class DualState:
    """Dual variables v plus the maintained primal image w = x(v)."""

    def __init__(self, obj):
        if obj.l2 <= 0:
            raise ConfigError("dual ascent requires l2 > 0")
        if obj.l1:
            raise ConfigError("dual ascent does not support an l1 term")
        self.v = np.zeros(obj.n)
        self.w = np.zeros(obj.d)

    def recompute_w(self, obj):
        return (obj.data.to_csr().T @ self.v) / (obj.l2 * obj.n)

    def w_rel_error(self, obj):
        ref = self.recompute_w(obj)
        return float(np.linalg.norm(self.w - ref) / (1.0 + np.linalg.norm(ref)))


# ---------------------------------------------------------------------------
# single steps (mutate x in place unless noted; i may be an int or an array)


def _as_batch(i):
    if isinstance(i, (int, np.integer)):
        return (int(i),)
    return tuple(int(j) for j in i)


def gd_step(obj, x, gamma):
    """Full-gradient step (returns a new iterate; prox applied when l1 > 0)."""
    x = x - gamma * obj.full_grad(x)
    if obj.l1:
        x = obj.prox(gamma, x)
    if not np.isfinite(x).all():
        raise DivergenceError("gd diverged (gamma=%g)" % gamma, gamma=gamma)
    return x


def sgd_step(obj, x, i, gamma, momentum=None):
    """Plain or momentum stochastic step on the sampled example(s)."""
    idxs = _as_batch(i)
    b = len(idxs)
    lam = obj.l2
    pulls = []
    for j in idxs:
        row = obj.data.rows[j]
        m = float(np.dot(row.values, x[row.indices]))
        _check_finite(m, gamma)
        pulls.append((row, obj.loss.deriv(m, obj.labels[j])))
    if momentum is None:
        x *= 1.0 - gamma * lam
        for row, s in pulls:
            x[row.indices] -= (gamma / b) * s * row.values
    else:
        mv = momentum.m
        mv *= momentum.beta
        if lam:
            mv += lam * x
        for row, s in pulls:
            mv[row.indices] += (s / b) * row.values
        x -= gamma * mv
    if obj.l1:
        x[:] = obj.prox(gamma, x)
    return x


def sgd_star_step(obj, x, i, gamma, star):
    """Reference-shifted step x - gamma*(grad f_i(x) - grad f_i(x*))."""
    idxs = _as_batch(i)
    b = len(idxs)
    lam = obj.l2
    pulls = []
    for j in idxs:
        row = obj.data.rows[j]
        m = float(np.dot(row.values, x[row.indices]))
        _check_finite(m, gamma)
        pulls.append((row, obj.loss.deriv(m, obj.labels[j]) - star.scalars[j]))
    x *= 1.0 - gamma * lam
    if lam:
        x += (gamma * lam) * star.x_star
    for row, ds in pulls:
        x[row.indices] -= (gamma / b) * ds * row.values
    if obj.l1:
        x[:] = obj.prox(gamma, x)
    return x


def sag_step(table, obj, x, i, gamma, seen_norm=False):
    """Averaged-gradient step: refresh the table first, then move with the
    refreshed average (divided by n, or by the seen count when seen_norm)."""
    idxs = _as_batch(i)
    lam = obj.l2
    for j in idxs:
        row = obj.data.rows[j]
        m = float(np.dot(row.values, x[row.indices]))
        _check_finite(m, gamma)
        s_new = obj.loss.deriv(m, obj.labels[j])
        new_vals = s_new * row.values
        delta = new_vals - table.cov_vals(j, row)
        table.store(j, row, new_vals, s_new)
        table.gsum[row.indices] += delta
    denom = table.seen_count if seen_norm else table.n
    x *= 1.0 - gamma * lam
    x -= (gamma / denom) * table.gsum
    if obj.l1:
        x[:] = obj.prox(gamma, x)
    return x


def saga_step(table, obj, x, i, gamma):
    """Unbiased table step: covariate uses the pre-step table entry and the
    pre-step average; the table is updated after the move."""
    idxs = _as_batch(i)
    b = len(idxs)
    lam = obj.l2
    pulls = []
    for j in idxs:
        row = obj.data.rows[j]
        m = float(np.dot(row.values, x[row.indices]))
        _check_finite(m, gamma)
        s_new = obj.loss.deriv(m, obj.labels[j])
        new_vals = s_new * row.values
        delta = new_vals - table.cov_vals(j, row)
        pulls.append((j, row, new_vals, s_new, delta))
    x *= 1.0 - gamma * lam
    x -= (gamma / table.n) * table.gsum
    for j, row, new_vals, s_new, delta in pulls:
        x[row.indices] -= (gamma / b) * delta
    for j, row, new_vals, s_new, delta in pulls:
        table.store(j, row, new_vals, s_new)
        table.gsum[row.indices] += delta
    if obj.l1:
        x[:] = obj.prox(gamma, x)
    return x


def svrg_outer_refresh(state, obj, x):
    """Re-anchor at x: store the snapshot, its loss scalars, and gradients."""
    state.x_ref = x.copy()
    state.s_ref = obj.loss.deriv_vec(obj.data.margins(x), obj.labels)
    state.loss_ref = (obj.data.to_csr().T @ state.s_ref) / obj.n
    state.grad_ref = state.loss_ref + obj.l2 * state.x_ref
    state.inner_done = 0
    return state


def svrg_inner_step(state, obj, x, i, gamma):
    """Anchored step x - gamma*(grad f_i(x) - grad f_i(x_ref) + grad f(x_ref))."""
    if state.x_ref is None:
        raise RuntimeError("inner step before any refresh")
    idxs = _as_batch(i)
    b = len(idxs)
    lam = obj.l2
    pulls = []
    for j in idxs:
        row = obj.data.rows[j]
        m = float(np.dot(row.values, x[row.indices]))
        _check_finite(m, gamma)
        pulls.append((row, obj.loss.deriv(m, obj.labels[j]) - state.s_ref[j]))
    x *= 1.0 - gamma * lam
    x -= gamma * state.loss_ref
    for row, ds in pulls:
        x[row.indices] -= (gamma / b) * ds * row.values
    if obj.l1:
        x[:] = obj.prox(gamma, x)
    state.inner_done += 1
    return x


def sarah_refresh(state, obj, x):
    state.g = obj.full_grad(x)
    state.x_prev = x.copy()
    state.inner_done = 0
    return state


def sarah_step(state, obj, x, i, gamma):
    """Continuous correction g += grad f_i(x) - grad f_i(x_prev); biased."""
    if state.g is None:
        raise RuntimeError("inner step before any refresh")
    idxs = _as_batch(i)
    b = len(idxs)
    lam = obj.l2
    pulls = []
    for j in idxs:
        row = obj.data.rows[j]
        m_now = float(np.dot(row.values, x[row.indices]))
        m_prev = float(np.dot(row.values, state.x_prev[row.indices]))
        _check_finite(m_now, gamma)
        ds = obj.loss.deriv(m_now, obj.labels[j]) - obj.loss.deriv(m_prev, obj.labels[j])
        pulls.append((row, ds))
    if lam:
        state.g += lam * (x - state.x_prev)
    for row, ds in pulls:
        state.g[row.indices] += (ds / b) * row.values
    state.x_prev[:] = x
    x -= gamma * state.g
    if obj.l1:
        x[:] = obj.prox(gamma, x)
    state.inner_done += 1
    return x


def minibatch_estimate(estimator, x, batch):
    """Average of per-example estimates over an index set."""
    batch = _as_batch(batch)
    if not batch:
        raise ValueError("empty batch")
    g = estimator(x, batch[0]).copy()
    for j in batch[1:]:
        g += estimator(x, j)
    return g / len(batch)


# ---------------------------------------------------------------------------
# dual coordinate ascent


def _logistic_dual_root(rho, bmt, tol=1e-12, max_iter=100):
    """Root of g(s) = log(s/(1-s)) + rho*s + bmt on (0,1), safeguarded Newton."""
    lo, hi = 0.0, 1.0
    # the rho=0 solution is exact and an excellent start otherwise
    s = 1.0 / (1.0 + np.exp(min(max(bmt, -700.0), 700.0)))
    s = min(max(s, 1e-300), 1.0 - 1e-16)
    for _ in range(max_iter):
        g = np.log(s / (1.0 - s)) + rho * s + bmt
        if abs(g) <= tol:
            return s
        if g > 0:
            hi = s
        else:
            lo = s
        step = g / (1.0 / s + 1.0 / (1.0 - s) + rho)
        s_new = s - step
        if not lo < s_new < hi:
            s_new = 0.5 * (lo + hi)
        s = s_new
    raise RuntimeError("dual line search did not converge in %d iterations" % max_iter)


def sdca_step(dual, obj, i):
    """Exact coordinate maximization of the dual at index i.

    Updates v_i and w in place and returns the (scaled by n) increase of the
    dual objective, which is nonnegative up to solver tolerance.
    """
    row = obj.data.rows[i]
    b = obj.labels[i]
    lam_n = obj.l2 * obj.n
    m = float(np.dot(row.values, dual.w[row.indices]))
    rho = obj.row_sq[i] / lam_n
    v_old = float(dual.v[i])
    mt = m - rho * v_old  # margin excluding example i's own contribution
    kind = obj.loss.name
    if kind == "half_squared":
        v_new = (b - mt) / (1.0 + rho)
    elif kind == "hinge":
        if rho == 0.0:
            v_new = b if (1.0 - b * mt) > 0 else 0.0
        else:
            s = (1.0 - b * mt) / rho
            v_new = b * min(1.0, max(0.0, s))
    elif kind == "logistic":
        if rho == 0.0:
            s = 1.0 / (1.0 + np.exp(min(max(b * mt, -700.0), 700.0)))
        else:
            s = _logistic_dual_root(rho, b * mt)
        v_new = b * s
    else:
        raise ConfigError("dual ascent does not support loss %r" % kind)
    dv = v_new - v_old
    if dv != 0.0:
        dual.w[row.indices] += (dv / lam_n) * row.values
        dual.v[i] = v_new
    gain = (
        obj.loss.conjugate(-v_old, b)
        - obj.loss.conjugate(-v_new, b)
        - dv * m
        - 0.5 * rho * dv * dv
    )
    return float(gain)


# ---------------------------------------------------------------------------
# estimators for the enumeration oracles


def sgd_estimator(obj):
    return lambda x, i: obj.grad_i(x, i)


def sgd_star_estimator(obj, star):
    def est(x, i):
        row = obj.data.rows[i]
        g = obj.l2 * (x - star.x_star)
        s = obj.loss.deriv(float(np.dot(row.values, x[row.indices])), obj.labels[i])
        g[row.indices] += (s - star.scalars[i]) * row.values
        return g

    return est


def saga_estimator(obj, table):
    def est(x, i):
        row = obj.data.rows[i]
        g = table.mean() + obj.l2 * x
        s = obj.loss.deriv(float(np.dot(row.values, x[row.indices])), obj.labels[i])
        g[row.indices] += s * row.values - table.cov_vals(i, row)
        return g

    return est


def sag_estimator(obj, table, seen_norm=False):
    """Direction the averaged-gradient method would move along after sampling
    i (biased: its mean is not the gradient until the table is current)."""

    def est(x, i):
        row = obj.data.rows[i]
        s = obj.loss.deriv(float(np.dot(row.values, x[row.indices])), obj.labels[i])
        seen = table.seen_count + (0 if table.seen[i] else 1)
        denom = seen if seen_norm else table.n
        num = table.gsum.copy()
        num[row.indices] += s * row.values - table.cov_vals(i, row)
        return num / denom + obj.l2 * x

    return est


def svrg_estimator(obj, state):
    def est(x, i):
        if state.x_ref is None:
            return obj.grad_i(x, i)  # no anchor yet: plain stochastic gradient
        row = obj.data.rows[i]
        g = state.loss_ref + obj.l2 * x
        s = obj.loss.deriv(float(np.dot(row.values, x[row.indices])), obj.labels[i])
        g[row.indices] += (s - state.s_ref[i]) * row.values
        return g

    return est


# ---------------------------------------------------------------------------
# run driver


@dataclass
class RunConfig:
    """Everything one run needs besides the objective itself.

    gamma overrides the policy; policy defaults to the theory stepsize.
    epochs is a budget in units of n gradient evaluations. Checkpoints are
    emitted whenever the evaluation count crosses a multiple of
    checkpoint_every epochs (never inside a full-gradient refresh).
    """

    method: str
    epochs: float = 10.0
    seed: int = 0
    gamma: float | None = None
    policy: StepsizePolicy | None = None
    scheme: SamplingScheme | None = None
    beta: float = 0.0
    inner_t: int | None = None
    svrg_variant: str = "fixed"
    table_mode: str = "dense"
    table_init_grads: bool = False
    seen_norm: bool = False
    jit: str = "off"  # "auto" | "on" | "off"
    x_star: np.ndarray | None = None
    prox: bool = True
    warm_start_sgd_epochs: float = 0.0
    checkpoint_every: float = 1.0
    var_checkpoints: bool = False
    stop: str | None = None
    f_star: float | None = None
    record_iterates: bool = False
    record_every: int = 1
    var_epochs: frozenset | None = None  # restrict var_est to these epochs


@dataclass
class RunResult:
    records: list
    x: np.ndarray
    grad_evals: int
    aux: dict = field(default_factory=dict)
    iterates: list = field(default_factory=list)


def _validate(config, obj):
    if config.method not in METHODS:
        raise ConfigError("unknown method %r (valid: %s)" % (config.method, ", ".join(METHODS)))
    if config.method != "sdca" and not obj.loss.smooth:
        raise ConfigError("loss %s is only supported by sdca" % obj.loss.name)
    if config.method == "sgd_momentum" and not 0 < config.beta < 1:
        raise ConfigError("sgd_momentum needs beta in (0,1)")
    if config.method == "sgd_star" and config.x_star is None:
        raise ConfigError("sgd_star needs x_star")
    if config.method == "sdca":
        if (config.scheme or uniform_scheme()).batch != 1:
            raise ConfigError("sdca is a single-coordinate method (batch=1)")
        if (config.scheme or uniform_scheme()).kind != "uniform":
            raise ConfigError("sdca supports uniform sampling only")
    if obj.l1 and not config.prox:
        raise ConfigError("l1 > 0 requires the prox step enabled")
    if config.epochs < 0:
        raise ConfigError("epochs must be nonnegative")


def _resolve_gamma(config, obj, scheme):
    """Constant stepsize, or None when the policy is per-step (armijo)."""
    policy = config.policy
    if config.gamma is not None:
        return float(config.gamma), None
    if policy is None:
        policy = theory_policy()
    if policy.kind == "fixed":
        return float(policy.gamma), None
    if policy.kind == "armijo":
        if config.method in ("gd", "sdca", "sgd_momentum"):
            raise ConfigError("armijo stepsizes are per-example; not valid for %s" % config.method)
        return None, policy
    info = smoothness(obj)
    return default_stepsize(config.method, info, scheme), None


def run(config, obj, x0=None):
    """Execute one configured run and return its trace and final iterate.

    Raises DivergenceError (carrying the partial trace) on non-finite values.
    """
    _validate(config, obj)
    method = config.method
    n = obj.n
    scheme = config.scheme or uniform_scheme()
    rng = RandomSource(config.seed)
    x = np.zeros(obj.d) if x0 is None else np.array(x0, dtype=np.float64)
    rule = StopRule.parse(config.stop)
    if rule.kind == "gap" and method != "sdca":
        raise ConfigError("gap stop rule is only available for sdca")
    if rule.kind == "gbar" and method not in TABLE_METHODS:
        raise ConfigError("gbar stop rule needs a gradient table (sag/saga)")
    if rule.kind in ("grad", "gbar") and method == "sdca":
        raise ConfigError("sdca runs stop on the gap metric, not gradient norms")

    gamma = None
    armijo = None
    if method != "sdca":
        gamma, armijo = _resolve_gamma(config, obj, scheme)

    if config.jit != "off":
        from .sparse_jit import jit_compatible, run_jit

        reason = jit_compatible(config, obj, gamma)
        if reason is None:
            return run_jit(config, obj, gamma, x0=x0)
        if config.jit == "on":
            raise ConfigError("jit mode unavailable: %s" % reason)

    warm_budget = int(round(config.warm_start_sgd_epochs * n))
    budget = warm_budget + int(round(config.epochs * n))
    records = []
    iterates = []
    aux = {}
    t0 = time.perf_counter()
    evals = 0
    steps = 0
    cp_stride = max(1, int(round(config.checkpoint_every * n)))
    next_cp = 0

    # method state
    table = None
    momentum = None
    svrg = None
    sarah = None
    dual = None
    star = None
    estimator = None
    if method in TABLE_METHODS:
        table = GradientTable(obj, config.table_mode, init_x=(x if config.table_init_grads else None))
        aux["table"] = table
        if method == "saga":
            estimator = saga_estimator(obj, table)
        else:
            estimator = sag_estimator(obj, table, config.seen_norm)
    elif method in ("sgd", "sgd_momentum"):
        if method == "sgd_momentum":
            momentum = MomentumState(m=np.zeros(obj.d), beta=config.beta)
        estimator = sgd_estimator(obj)
    elif method == "sgd_star":
        star = star_table(obj, config.x_star)
        estimator = sgd_star_estimator(obj, star)
        aux["star"] = star
    elif method == "svrg":
        svrg = SvrgState(config.inner_t or n, config.svrg_variant)
        aux["svrg"] = svrg
        estimator = svrg_estimator(obj, svrg)
    elif method == "sarah":
        sarah = SarahState(config.inner_t or n)
        aux["sarah"] = sarah
    elif method == "sdca":
        dual = DualState(obj)
        aux["dual"] = dual
        aux["min_dual_gain"] = np.inf

    def emit(force=False):
        nonlocal next_cp
        if not force and evals < next_cp:
            return None
        while next_cp <= evals:
            next_cp += cp_stride
        cur = dual.w if method == "sdca" else x
        f = obj.objective_value(cur)
        if not np.isfinite(f):
            raise DivergenceError("objective diverged (gamma=%s)" % gamma, gamma=gamma, records=records)
        rec = TraceRecord(epoch=evals / n, grad_evals=evals, f=f)
        if config.f_star is not None:
            rec.subopt = f - config.f_star
        if method == "sdca":
            rec.gap = duality_gap(obj, dual)
        elif rule.kind == "gbar":
            gbar = table.gsum / (table.seen_count if config.seen_norm and table.seen_count else table.n)
            rec.grad_norm = float(np.linalg.norm(gbar + obj.l2 * x))
        elif obj.loss.smooth:
            rec.grad_norm = float(np.linalg.norm(obj.full_grad(cur)))
        if config.var_checkpoints and estimator is not None:
            if config.var_epochs is None or int(round(rec.epoch)) in config.var_epochs:
                _, rec.var_est = enum_stats(obj, estimator, cur)
        rec.time_s = time.perf_counter() - t0
        records.append(rec)
        return rec

    def note_iterate():
        if config.record_iterates and steps % config.record_every == 0:
            iterates.append((steps, x.copy()))

    def halted(rec):
        return rec is not None and rule.kind != "epochs" and should_stop(rule, rec)

    emit(force=True)
    note_iterate()
    stopped = False
    try:
        # optional plain-SGD warm phase, charged to the same counters
        while evals < warm_budget and not stopped:
            batch = sample(scheme, rng, n)
            g = gamma if gamma is not None else _armijo_gamma(obj, x, batch, armijo, aux)
            sgd_step(obj, x, batch, g)
            evals += len(batch)
            steps += 1
            note_iterate()
            stopped = halted(emit())

        if method == "gd":
            while evals < budget and not stopped:
                x = gd_step(obj, x, gamma)
                evals += n
                steps += 1
                note_iterate()
                stopped = halted(emit())
        elif method in ("sgd", "sgd_momentum", "sgd_star") or method in TABLE_METHODS:
            while evals < budget and not stopped:
                batch = sample(scheme, rng, n)
                g = gamma if armijo is None else _armijo_gamma(obj, x, batch, armijo, aux)
                if method in ("sgd", "sgd_momentum"):
                    sgd_step(obj, x, batch, g, momentum)
                elif method == "sgd_star":
                    sgd_star_step(obj, x, batch, g, star)
                elif method == "sag":
                    sag_step(table, obj, x, batch, g, config.seen_norm)
                else:
                    saga_step(table, obj, x, batch, g)
                evals += len(batch)
                steps += 1
                note_iterate()
                stopped = halted(emit())
        elif method in ("svrg", "sarah"):
            state = svrg if method == "svrg" else sarah
            while evals < budget and not stopped:
                if method == "svrg":
                    svrg_outer_refresh(state, obj, x)
                else:
                    sarah_refresh(state, obj, x)
                evals += n
                if rule.kind == "grad":
                    ref_norm = float(np.linalg.norm(state.grad_ref if method == "svrg" else state.g))
                    if ref_norm <= rule.eps:
                        emit(force=True)
                        stopped = True
                        break
                t_eff = state.t
                if method == "svrg" and state.variant == "sampled":
                    t_eff = 1 + rng.integers(state.t)
                for _ in range(t_eff):
                    batch = sample(scheme, rng, n)
                    g = gamma if armijo is None else _armijo_gamma(obj, x, batch, armijo, aux)
                    if method == "svrg":
                        svrg_inner_step(state, obj, x, batch, g)
                    else:
                        sarah_step(state, obj, x, batch, g)
                    evals += 2 * len(batch)
                    steps += 1
                    note_iterate()
                    emit()
                # stop rules are evaluated only at outer boundaries
                if records and rule.kind not in ("epochs", "grad"):
                    stopped = halted(records[-1])
        else:  # sdca
            min_gain = np.inf
            while evals < budget and not stopped:
                i = sample(scheme, rng, n)[0]
                gain = sdca_step(dual, obj, int(i))
                if gain < min_gain:
                    min_gain = gain
                evals += 1
                steps += 1
                stopped = halted(emit())
            aux["min_dual_gain"] = min_gain
    except DivergenceError as err:
        err.records = records
        raise
    if not records or records[-1].grad_evals != evals:
        emit(force=True)
    xf = dual.w.copy() if method == "sdca" else x
    if config.record_iterates and (not iterates or iterates[-1][0] != steps):
        iterates.append((steps, xf.copy()))
    return RunResult(records=records, x=xf, grad_evals=evals, aux=aux, iterates=iterates)


def _armijo_gamma(obj, x, batch, policy, aux):
    """Backtracked stepsize on the sampled example along -grad f_i(x).

    Warm-started at twice the previously accepted value (capped at the
    policy maximum), which keeps the expected number of trial evaluations
    near one once the scale settles.
    """
    i = int(batch[0])
    warm = aux.get("armijo_last")
    start = None if warm is None else min(2.0 * warm, policy.gamma_max)
    g = armijo_stochastic(obj, i, x, -obj.grad_i(x, i), policy, gamma_start=start)
    aux["armijo_last"] = g
    return g
