"""Just-in-time sparse updates for the gradient-table methods.

Between touches of coordinate j, the table sum gsum_j is constant (it only
changes when a sampled row has support there, and then j is touched). Every
step multiplies x_j by rho = 1 - gamma*l2 and subtracts w_t * gsum_j, where
w_t is gamma/n (or gamma/seen_t). Unrolling m such steps:

    x_j(k) = rho^m x_j(c) - gsum_j * sum_{t=c+1..k} rho^(k-t) w_t

With the decayed prefix G[t] = rho*G[t-1] + w_t (G[0] = 0) the sum collapses
to G[k] - rho^m G[c], so each coordinate catches up in O(1) regardless of how
long it slept. The per-step work is therefore O(nnz(a_i)), not O(d).

When rho == 1 the prefix is a plain running sum, accumulated with Kahan
compensation; catch-up differences then carry an absolute error of order
eps * |G[k]| * |gsum_j| per touch, far below trace tolerances at the scales
this engine targets.
"""

import time

import numpy as np

from .data import RandomSource
from .diag import StopRule, TraceRecord, enum_stats, should_stop
from .schedules import sample, uniform_scheme


class LazyIterate:
    """Iterate vector with per-coordinate staleness bookkeeping."""

    def __init__(self, x, rho, capacity=1024):
        if rho <= 0:
            raise ValueError("decay factor must be positive, got %g" % rho)
        self.x = x
        self.rho = float(rho)
        self.c = np.zeros(x.shape[0], dtype=np.int64)
        self.k = 0
        self._g = np.zeros(max(capacity, 16))
        self._comp = 0.0  # Kahan compensation, used when rho == 1
        self.touched = 0

    @property
    def prefix(self):
        return self._g[: self.k + 1]

    def push_weight(self, w):
        """Register step k+1 with per-step weight w."""
        if self.k + 1 >= self._g.shape[0]:
            grown = np.zeros(self._g.shape[0] * 2)
            grown[: self.k + 1] = self._g[: self.k + 1]
            self._g = grown
        if self.rho == 1.0:
            y = w - self._comp
            t = self._g[self.k] + y
            self._comp = (t - self._g[self.k]) - y
            self._g[self.k + 1] = t
        else:
            self._g[self.k + 1] = self.rho * self._g[self.k] + w
        self.k += 1

    def catch_up(self, idx, gsum):
        """Bring x[idx] current through step k, given the (constant-on-idx
        since their last touch) table sums."""
        ci = self.c[idx]
        m = self.k - ci
        if not m.any():
            return
        pm = self.rho ** m
        self.x[idx] = pm * self.x[idx] - gsum[idx] * (self._g[self.k] - pm * self._g[ci])
        self.c[idx] = self.k

    def materialize(self, gsum):
        """Catch every coordinate up (idempotent); returns the x array."""
        self.catch_up(np.arange(self.x.shape[0]), gsum)
        return self.x


def jit_compatible(config, obj, gamma):
    """None when the lazy engine applies, else a human-readable reason."""
    if config.method not in ("sag", "saga"):
        return "only the table methods (sag, saga) have lazy updates"
    if config.table_mode != "scalar":
        return "lazy updates need the scalar table (dense rows are O(d) anyway)"
    scheme = config.scheme or uniform_scheme()
    if scheme.batch != 1:
        return "mini-batch steps touch too much support to stay lazy"
    if obj.l1:
        return "the soft-threshold prox is dense; run with l1=0 or jit off"
    if gamma is None:
        return "per-step (armijo) stepsizes change the decay each step"
    if config.warm_start_sgd_epochs:
        return "warm-start phase is not lazy; run with jit off"
    if config.record_iterates:
        return "recording every iterate requires materializing every step"
    if 1.0 - gamma * obj.l2 <= 0.0:
        return "gamma*l2 >= 1 makes the decay nonpositive; use dense mode"
    return None


def run_jit(config, obj, gamma, x0=None):
    """Lazy-update driver for sag/saga; same trace semantics as the dense
    driver, plus aux counters for the work actually performed."""
    from .optimizers import (
        ConfigError,
        DivergenceError,
        GradientTable,
        RunResult,
        sag_estimator,
        saga_estimator,
    )

    reason = jit_compatible(config, obj, gamma)
    if reason is not None:
        raise ConfigError("jit mode unavailable: %s" % reason)
    method = config.method
    n = obj.n
    scheme = config.scheme or uniform_scheme()
    rng = RandomSource(config.seed)
    x = np.zeros(obj.d) if x0 is None else np.array(x0, dtype=np.float64)
    rule = StopRule.parse(config.stop)
    if rule.kind == "gap":
        raise ConfigError("gap stop rule is only available for sdca")

    table = GradientTable(obj, "scalar", init_x=(x if config.table_init_grads else None))
    estimator = saga_estimator(obj, table) if method == "saga" else sag_estimator(obj, table, config.seen_norm)
    rho = 1.0 - gamma * obj.l2
    lazy = LazyIterate(x, rho)

    budget = int(round(config.epochs * n))
    records = []
    aux = {"table": table, "jit": True, "lazy": lazy}
    t0 = time.perf_counter()
    evals = 0
    cp_stride = max(1, int(round(config.checkpoint_every * n)))
    next_cp = 0

    def emit(force=False):
        nonlocal next_cp
        if not force and evals < next_cp:
            return None
        while next_cp <= evals:
            next_cp += cp_stride
        lazy.materialize(table.gsum)
        f = obj.objective_value(x)
        if not np.isfinite(f):
            raise DivergenceError("objective diverged (gamma=%g)" % gamma, gamma=gamma, records=records)
        rec = TraceRecord(epoch=evals / n, grad_evals=evals, f=f)
        if config.f_star is not None:
            rec.subopt = f - config.f_star
        if rule.kind == "gbar":
            denom = table.seen_count if config.seen_norm and table.seen_count else table.n
            rec.grad_norm = float(np.linalg.norm(table.gsum / denom + obj.l2 * x))
        else:
            rec.grad_norm = float(np.linalg.norm(obj.full_grad(x)))
        if config.var_checkpoints:
            if config.var_epochs is None or int(round(rec.epoch)) in config.var_epochs:
                _, rec.var_est = enum_stats(obj, estimator, x)
        rec.time_s = time.perf_counter() - t0
        records.append(rec)
        return rec

    emit(force=True)
    stopped = False
    try:
        while evals < budget and not stopped:
            i = int(sample(scheme, rng, n)[0])
            row = obj.data.rows[i]
            lazy.catch_up(row.indices, table.gsum)
            m = float(np.dot(row.values, x[row.indices]))
            if not np.isfinite(m):
                raise DivergenceError("non-finite value encountered (gamma=%g)" % gamma, gamma=gamma, records=records)
            s_new = obj.loss.deriv(m, obj.labels[i])
            delta = s_new * row.values - table.cov_vals(i, row)
            if method == "sag":
                table.store(i, row, None, s_new)
                table.gsum[row.indices] += delta
                denom = table.seen_count if config.seen_norm else table.n
                lazy.push_weight(gamma / denom)
                lazy.catch_up(row.indices, table.gsum)
            else:
                lazy.push_weight(gamma / table.n)
                lazy.catch_up(row.indices, table.gsum)
                x[row.indices] -= gamma * delta
                table.store(i, row, None, s_new)
                table.gsum[row.indices] += delta
            lazy.touched += row.nnz
            evals += 1
            rec = emit()
            if rec is not None and rule.kind != "epochs" and should_stop(rule, rec):
                stopped = True
    except DivergenceError as err:
        err.records = records
        raise
    if not records or records[-1].grad_evals != evals:
        emit(force=True)
    lazy.materialize(table.gsum)
    aux["touched_coords"] = lazy.touched
    return RunResult(records=records, x=x, grad_evals=evals, aux=aux, iterates=[])
