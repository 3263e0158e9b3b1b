"""Metrics, termination, trace i/o, and the independent brute-force oracles.

Everything here either measures a run (traces, rate fits, duality gaps) or
checks an analytic claim by a dumb independent route (finite differences,
exhaustive enumeration over examples, golden-section maximization, a
reference solver certified by its residual). Oracles deliberately avoid the
fast code paths they are used to test.
"""

import hashlib
import io
import json
import math
import os
from dataclasses import dataclass

import numpy as np

from .data import dataset_hash
from .objectives import NonSmoothError, smoothness
from . import vecio

TRACE_COLUMNS = ("epoch", "grad_evals", "f", "subopt", "grad_norm", "var_est", "gap", "time_s")
ENUM_GUARD = 100_000


@dataclass
class TraceRecord:
    """One checkpoint of one run; optional fields are None when unavailable."""

    epoch: float
    grad_evals: int
    f: float
    subopt: float | None = None
    grad_norm: float | None = None
    var_est: float | None = None
    gap: float | None = None
    time_s: float | None = None


@dataclass(frozen=True)
class RateFit:
    rho_hat: float
    c_hat: float
    r2: float


@dataclass(frozen=True)
class StopRule:
    kind: str  # "grad", "gbar", "gap", "epochs"
    eps: float = 0.0

    @staticmethod
    def parse(text):
        if text is None or text == "epochs":
            return StopRule("epochs")
        kind, sep, eps = text.partition(":")
        if kind not in ("grad", "gbar", "gap") or not sep:
            raise ValueError("bad stop rule %r (grad:EPS, gbar:EPS, gap:EPS, epochs)" % text)
        return StopRule(kind, float(eps))


def should_stop(rule, record):
    """True when the record satisfies the rule; epochs never stops early."""
    if isinstance(rule, str) or rule is None:
        rule = StopRule.parse(rule)
    if rule.kind == "epochs":
        return False
    if rule.kind in ("grad", "gbar"):
        if record.grad_norm is None:
            raise ValueError("stop rule %s needs a gradient norm in the record" % rule.kind)
        return record.grad_norm <= rule.eps
    if record.gap is None:
        raise ValueError("stop rule gap needs a duality gap in the record")
    return record.gap <= rule.eps


# ---------------------------------------------------------------------------
# finite differences


def fd_grad(obj, x, h=1e-6, i=None):
    """Central-difference gradient of f (or of f_i when i is given)."""
    fn = (lambda z: obj.value_i(z, i)) if i is not None else obj.full_value
    x = np.asarray(x, dtype=np.float64)
    g = np.zeros_like(x)
    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = h
        g[j] = (fn(x + e) - fn(x - e)) / (2 * h)
    return g


# ---------------------------------------------------------------------------
# enumeration oracles


def enum_stats(obj, estimator, x):
    """Exact mean and variance of an index-conditional gradient estimate.

    estimator(x, i) must return the dense estimate the method would use if it
    sampled i at the frozen state. Returns (mean vector, trace variance
    E_i ||g_i - E g||^2) by two full passes over i.
    """
    n = obj.n
    if n > ENUM_GUARD:
        raise ValueError("n=%d too large to enumerate" % n)
    mean = np.zeros(obj.d)
    for i in range(n):
        mean += estimator(x, i)
    mean /= n
    var = 0.0
    for i in range(n):
        diff = estimator(x, i) - mean
        var += float(np.dot(diff, diff))
    return mean, var / n


def enum_stats_batches(obj, estimator, x, b):
    """enum_stats over all size-b subsets (without replacement, uniform)."""
    from itertools import combinations

    n = obj.n
    count = math.comb(n, b)
    if count > ENUM_GUARD:
        raise ValueError("C(%d,%d)=%d too large to enumerate" % (n, b, count))
    ests = [estimator(x, i) for i in range(n)]
    mean = np.zeros(obj.d)
    batches = list(combinations(range(n), b))
    for B in batches:
        mean += sum(ests[i] for i in B) / b
    mean /= count
    var = 0.0
    for B in batches:
        diff = sum(ests[i] for i in B) / b - mean
        var += float(np.dot(diff, diff))
    return mean, var / count


def check_lemma2(obj, estimator, x):
    """Centered second moment never exceeds the raw one (enumeration)."""
    n = obj.n
    if n > ENUM_GUARD:
        raise ValueError("n=%d too large to enumerate" % n)
    _, var = enum_stats(obj, estimator, x)
    raw = 0.0
    for i in range(n):
        g = estimator(x, i)
        raw += float(np.dot(g, g))
    raw /= n
    return var <= raw + 1e-12 * (1.0 + raw), var, raw


def check_lemma1(obj, x, x_star, info=None):
    """E_i||grad f_i(x) - grad f_i(x*)||^2 <= 2 L_max (f(x) - f(x*)).

    Both sides by enumeration; holds for convex smooth f_i. Returns
    (ok, slack) with slack = rhs - lhs.
    """
    info = info or smoothness(obj)
    lhs = 0.0
    for i in range(obj.n):
        diff = obj.grad_i(x, i) - obj.grad_i(x_star, i)
        lhs += float(np.dot(diff, diff))
    lhs /= obj.n
    rhs = 2.0 * info.l_max * (obj.full_value(x) - obj.full_value(x_star))
    return lhs <= rhs + 1e-12 * (1.0 + abs(rhs)), rhs - lhs


def check_contraction(obj, x, x_star, gamma, info=None):
    """One-step contraction of the reference-shifted estimator in expectation.

    Enumerates x' = x - gamma (grad f_i(x) - grad f_i(x*)) over i and tests
    E||x' - x*||^2 <= (1 - gamma*mu) ||x - x*||^2 with mu = l2. Refuses
    gamma > 1/L_max, the hypothesis the bound needs.
    """
    info = info or smoothness(obj)
    if gamma > (1.0 / info.l_max) * (1 + 1e-12):
        raise ValueError("gamma=%g exceeds 1/L_max=%g" % (gamma, 1.0 / info.l_max))
    if obj.l2 <= 0:
        raise ValueError("contraction bound needs l2 > 0")
    gstar = [obj.grad_i(x_star, i) for i in range(obj.n)]
    lhs = 0.0
    for i in range(obj.n):
        nxt = x - gamma * (obj.grad_i(x, i) - gstar[i])
        diff = nxt - x_star
        lhs += float(np.dot(diff, diff))
    lhs /= obj.n
    base = x - x_star
    rhs = (1.0 - gamma * obj.l2) * float(np.dot(base, base))
    return lhs <= rhs + 1e-12 * (1.0 + abs(rhs))


# ---------------------------------------------------------------------------
# duality


def dual_objective(obj, dual):
    """D(v) = (1/n) sum_i -loss_i*(-v_i) - (l2/2)||w||^2 for the dual state."""
    if obj.l2 <= 0:
        raise ValueError("dual objective needs l2 > 0")
    total = 0.0
    for i in range(obj.n):
        c = obj.loss.conjugate(-dual.v[i], obj.labels[i])
        if not np.isfinite(c):
            return -np.inf
        total -= c
    total /= obj.n
    return total - 0.5 * obj.l2 * float(np.dot(dual.w, dual.w))


def duality_gap(obj, dual):
    """f(x(v)) - D(v); +inf when v leaves the conjugate domain."""
    return obj.full_value(dual.w) - dual_objective(obj, dual)


def golden_section_max(fn, lo, hi, tol=1e-12, max_iter=200):
    """Golden-section maximization of a unimodal fn on [lo, hi].

    Arithmetic stays in the dtype of the bounds, so passing np.longdouble
    endpoints (and an fn evaluated in that dtype) pushes the float-noise
    floor on the argmax below 1e-9 even for O(1)-curvature functions.
    """
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = fn(c), fn(d)
    for _ in range(max_iter):
        if b - a < tol:
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fn(d)
    return (a + b) / 2.0


# ---------------------------------------------------------------------------
# reference solver


_REF_MEMO = {}


def cache_dir():
    return os.environ.get("VROPT_CACHE") or os.path.join(os.path.expanduser("~"), ".cache", "vropt")


def _ref_key(obj, tol):
    raw = "|".join(
        [dataset_hash(obj.data), obj.loss.name, "%.17g" % obj.l2, "%.17g" % obj.l1, "%.17g" % tol]
    )
    return hashlib.sha256(raw.encode()).hexdigest()[:24]


def composite_residual(obj, x, info=None):
    """||grad f(x)|| when l1=0, else the prox-gradient mapping norm at 1/L."""
    g = obj.full_grad(x)
    if not obj.l1:
        return float(np.linalg.norm(g))
    info = info or smoothness(obj)
    gamma = 1.0 / info.l_full
    step = obj.prox(gamma, x - gamma * g)
    return float(np.linalg.norm(x - step) / gamma)


def solve_reference(obj, tol=1e-12, cache=True, max_iter=1_000_000):
    """Deterministic reference solution (x*, f*) certified by its residual.

    A fixed-seed averaged-gradient warm phase drives the composite residual
    toward machine level, then plain (prox-)gradient descent at gamma = 1/L
    runs until the residual is <= tol; only that final test certifies x*.
    Results are cached under $VROPT_CACHE keyed by dataset hash and
    (loss, l2, l1, tol).

    Raises:
        RuntimeError: the iteration cap is hit before the residual passes.
    """
    if not obj.loss.smooth:
        raise NonSmoothError("reference solver needs a smooth loss")
    if obj.l2 <= 0:
        raise ValueError("reference solver needs l2 > 0")
    key = _ref_key(obj, tol)
    if cache and key in _REF_MEMO:
        x, f = _REF_MEMO[key]
        return x.copy(), f
    cdir = cache_dir()
    xpath = os.path.join(cdir, key + ".vec")
    mpath = os.path.join(cdir, key + ".json")
    if cache and os.path.exists(xpath) and os.path.exists(mpath):
        x = vecio.read_vector(xpath)
        with open(mpath) as fh:
            f = float(json.load(fh)["f_star"])
        _REF_MEMO[key] = (x.copy(), f)
        return x, f

    from .optimizers import RunConfig, run  # deferred: avoids an import cycle

    info = smoothness(obj)
    x = np.zeros(obj.d)
    # warm phase: fixed-seed stochastic passes until progress stalls
    res = composite_residual(obj, x, info)
    chunk_epochs = 10.0
    for chunk in range(60):
        if res <= 0.5 * tol:
            break
        cfg = RunConfig(method="saga", epochs=chunk_epochs, seed=0, table_mode="scalar")
        x = run(cfg, obj, x0=x).x
        new_res = composite_residual(obj, x, info)
        if new_res >= res * 0.9:  # stalled at the floating-point floor
            res = min(res, new_res)
            break
        res = new_res
    # pinned polish loop: full (prox-)gradient descent at gamma = 1/L
    gamma = 1.0 / info.l_full
    iters = 0
    while composite_residual(obj, x, info) > tol:
        if iters >= max_iter:
            raise RuntimeError("reference solve exceeded %d iterations" % max_iter)
        x = obj.prox(gamma, x - gamma * obj.full_grad(x)) if obj.l1 else x - gamma * obj.full_grad(x)
        iters += 1
    f = obj.objective_value(x)
    if cache:
        os.makedirs(cdir, exist_ok=True)
        vecio.write_vectors(xpath, x)
        vecio.atomic_write_text(mpath, json.dumps({"f_star": f, "tol": tol}) + "\n")
        _REF_MEMO[key] = (x.copy(), f)
    return x, f


# ---------------------------------------------------------------------------
# rate fitting


def fit_linear_rate(trace, burn_in=0.0):
    """Least-squares fit of log(subopt) against gradient evaluations.

    Models subopt ~= C (1-rho)^k with k the grad_evals axis (equal to the
    iteration count for one-evaluation-per-step methods). Records past the
    first subopt <= 1e-15 are dropped (floating-point floor); needs at least
    5 usable records.
    """
    ks, ys = [], []
    for rec in trace:
        if rec.epoch < burn_in or rec.subopt is None:
            continue
        if rec.subopt <= 1e-15:
            break
        ks.append(float(rec.grad_evals))
        ys.append(math.log(rec.subopt))
    if len(ks) < 5:
        raise ValueError("need at least 5 positive-suboptimality records, found %d" % len(ks))
    ks = np.asarray(ks)
    ys = np.asarray(ys)
    slope, intercept = np.polyfit(ks, ys, 1)
    pred = slope * ks + intercept
    ss_res = float(np.sum((ys - pred) ** 2))
    ss_tot = float(np.sum((ys - ys.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 and ss_res <= 1e-24 else 1.0 - ss_res / ss_tot
    return RateFit(rho_hat=1.0 - math.exp(slope), c_hat=math.exp(intercept), r2=r2)


# ---------------------------------------------------------------------------
# trace i/o


def _fmt(v):
    if v is None:
        return ""
    return "%.17g" % v


def write_trace(trace, sink, meta=None):
    """CSV with the fixed 8-column header; meta becomes '# key = value' lines."""
    own = isinstance(sink, str)
    buf = io.StringIO()
    if meta:
        for k in meta:
            buf.write("# %s = %s\n" % (k, meta[k]))
    buf.write(",".join(TRACE_COLUMNS) + "\n")
    for rec in trace:
        row = [
            _fmt(rec.epoch),
            "%d" % rec.grad_evals,
            _fmt(rec.f),
            _fmt(rec.subopt),
            _fmt(rec.grad_norm),
            _fmt(rec.var_est),
            _fmt(rec.gap),
            _fmt(rec.time_s),
        ]
        buf.write(",".join(row) + "\n")
    text = buf.getvalue()
    if own:
        vecio.atomic_write_text(sink, text)
    else:
        sink.write(text)
    return text


def read_trace(source):
    """Inverse of write_trace; returns (records, meta dict)."""
    if isinstance(source, str):
        if os.path.exists(source):
            with open(source) as fh:
                text = fh.read()
        else:
            text = source
    else:
        text = source.read()
    meta = {}
    records = []
    header_seen = False
    for line in text.splitlines():
        if not line.strip():
            continue
        if line.startswith("#"):
            k, _, v = line[1:].partition("=")
            meta[k.strip()] = v.strip()
            continue
        if not header_seen:
            if line != ",".join(TRACE_COLUMNS):
                raise ValueError("unexpected trace header %r" % line)
            header_seen = True
            continue
        cells = line.split(",")
        if len(cells) != len(TRACE_COLUMNS):
            raise ValueError("bad trace row %r" % line)
        vals = [None if c == "" else float(c) for c in cells]
        records.append(
            TraceRecord(
                epoch=vals[0],
                grad_evals=int(vals[1]),
                f=vals[2],
                subopt=vals[3],
                grad_norm=vals[4],
                var_est=vals[5],
                gap=vals[6],
                time_s=vals[7],
            )
        )
    if not header_seen:
        raise ValueError("no trace header found")
    return records, meta
