"""Linear-model objectives: losses, gradients, conjugates, prox, smoothness.

The smooth objective is f(x) = (1/n) sum_i loss(a_i^T x, b_i) + (l2/2)||x||^2.
An optional l1 term enters only through the proximal map, never through
gradients. Least squares uses the 1/2 convention, so L_i = ||a_i||^2 + l2.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .data import row_norm_sq


class NonSmoothError(ValueError):
    """Raised when a gradient of the hinge loss is requested."""


class HalfSquaredLoss:
    name = "half_squared"
    smooth = True
    curvature_bound = 1.0  # sup of loss'' over margins
    classification = False

    @staticmethod
    def value(alpha, b):
        r = alpha - b
        return 0.5 * r * r

    @staticmethod
    def deriv(alpha, b):
        return alpha - b

    value_vec = staticmethod(lambda m, b: 0.5 * (m - b) ** 2)
    deriv_vec = staticmethod(lambda m, b: m - b)

    @staticmethod
    def conjugate(u, b):
        return 0.5 * u * u + u * b


class LogisticLoss:
    name = "logistic"
    smooth = True
    curvature_bound = 0.25
    classification = True

    @staticmethod
    def value(alpha, b):
        t = -b * alpha
        # log(1 + e^t) = max(t, 0) + log1p(e^{-|t|}), overflow-safe
        return max(t, 0.0) + np.log1p(np.exp(-abs(t)))

    @staticmethod
    def deriv(alpha, b):
        return -b * expit(-b * alpha)

    @staticmethod
    def value_vec(m, b):
        t = -b * m
        return np.maximum(t, 0.0) + np.log1p(np.exp(-np.abs(t)))

    @staticmethod
    def deriv_vec(m, b):
        return -b * expit(-b * m)

    @staticmethod
    def conjugate(u, b):
        # finite only for b*u in [-1, 0]; s ln s + (1-s) ln(1-s) with s = -b*u
        s = -b * u
        if s < 0.0 or s > 1.0:
            return np.inf
        ent = 0.0
        if s > 0.0:
            ent += s * np.log(s)
        if s < 1.0:
            ent += (1.0 - s) * np.log(1.0 - s)
        return ent


class HingeLoss:
    name = "hinge"
    smooth = False
    curvature_bound = None
    classification = True

    @staticmethod
    def value(alpha, b):
        return max(0.0, 1.0 - b * alpha)

    @staticmethod
    def deriv(alpha, b):
        raise NonSmoothError("non-smooth loss: hinge has no derivative")

    value_vec = staticmethod(lambda m, b: np.maximum(0.0, 1.0 - b * m))

    @staticmethod
    def conjugate(u, b):
        return b * u if -1.0 <= b * u <= 0.0 else np.inf


HALF_SQUARED = HalfSquaredLoss()
LOGISTIC = LogisticLoss()
HINGE = HingeLoss()
LOSSES = {l.name: l for l in (HALF_SQUARED, LOGISTIC, HINGE)}


def get_loss(loss):
    if isinstance(loss, str):
        try:
            return LOSSES[loss]
        except KeyError:
            raise ValueError("unknown loss %r (choose from %s)" % (loss, sorted(LOSSES)))
    return loss


def loss_value(loss, alpha, b):
    if not np.isfinite(alpha):
        raise ValueError("non-finite margin")
    return float(get_loss(loss).value(alpha, b))


def loss_deriv(loss, alpha, b):
    loss = get_loss(loss)
    if not loss.smooth:
        raise NonSmoothError("non-smooth loss: %s" % loss.name)
    return float(loss.deriv(alpha, b))


def conjugate_value(loss, u, b):
    return float(get_loss(loss).conjugate(u, b))


class GlmObjective:
    """Immutable bundle of (dataset, loss, l2, l1).

    Labels in {0,1} are coerced to {-1,+1} here when the loss is a
    classification loss; the dataset itself is left untouched.
    """

    def __init__(self, data, loss, l2=0.0, l1=0.0):
        loss = get_loss(loss)
        if l2 < 0 or l1 < 0:
            raise ValueError("regularization weights must be nonnegative")
        if loss is HINGE and l2 <= 0:
            raise ValueError("hinge loss requires l2 > 0")
        labels = data.labels
        if loss.classification:
            vals = set(np.unique(labels))
            if vals <= {0.0, 1.0}:
                labels = np.where(labels > 0, 1.0, -1.0)
            elif not vals <= {-1.0, 1.0}:
                raise ValueError("classification labels must be in {-1,+1} (or {0,1})")
        self.data = data
        self.loss = loss
        self.l2 = float(l2)
        self.l1 = float(l1)
        self.labels = np.asarray(labels, dtype=np.float64)
        self.labels.setflags(write=False)
        self.n = data.n
        self.d = data.d
        self.row_sq = np.array([row_norm_sq(r) for r in data.rows])
        self.row_sq.setflags(write=False)

    # -- per-example quantities ------------------------------------------

    def margin(self, x, i):
        r = self.data.rows[i]
        return float(np.dot(r.values, x[r.indices]))

    def grad_i_scalar(self, x, i):
        """loss'(a_i^T x, b_i); the scalar that spans the loss gradient."""
        return float(self.loss.deriv(self.margin(x, i), self.labels[i]))

    def grad_i(self, x, i):
        """Dense gradient of f_i(x) = loss_i(a_i^T x) + (l2/2)||x||^2."""
        if not 0 <= i < self.n:
            raise IndexError("example index %d out of range" % i)
        g = self.l2 * x if self.l2 else np.zeros(self.d)
        r = self.data.rows[i]
        g[r.indices] += self.grad_i_scalar(x, i) * r.values
        return g

    def value_i(self, x, i):
        v = self.loss.value(self.margin(x, i), self.labels[i])
        return float(v + 0.5 * self.l2 * np.dot(x, x))

    # -- full-pass quantities (vectorized over examples) ------------------

    def full_value(self, x):
        """Smooth objective f(x); excludes the l1 term."""
        m = self.data.margins(x)
        v = float(np.mean(self.loss.value_vec(m, self.labels)))
        return v + 0.5 * self.l2 * float(np.dot(x, x))

    def objective_value(self, x):
        """f(x) + l1*||x||_1, the quantity traces report."""
        v = self.full_value(x)
        if self.l1:
            v += self.l1 * float(np.abs(x).sum())
        return v

    def loss_scalars(self, x):
        """Vector of loss'(a_i^T x, b_i) for all i."""
        if not self.loss.smooth:
            raise NonSmoothError("non-smooth loss: %s" % self.loss.name)
        return self.loss.deriv_vec(self.data.margins(x), self.labels)

    def loss_grad_full(self, x):
        """(1/n) sum_i loss'_i a_i, the loss part of the full gradient."""
        s = self.loss_scalars(x)
        return (self.data.to_csr().T @ s) / self.n

    def full_grad(self, x):
        return self.loss_grad_full(x) + self.l2 * x

    def prox(self, gamma, z):
        """argmin_x 0.5||x-z||^2 + gamma*l1*||x||_1 (identity when l1=0)."""
        if gamma <= 0:
            raise ValueError("prox needs gamma > 0")
        if not self.l1:
            return np.array(z, dtype=np.float64)
        return prox_l1(z, gamma * self.l1)


def full_value(obj, x):
    return obj.full_value(x)


def full_grad(obj, x):
    return obj.full_grad(x)


def grad_i(obj, x, i):
    return obj.grad_i(x, i)


def prox_l1(z, t):
    """Coordinate-wise soft threshold sign(z)*max(|z|-t, 0)."""
    if t < 0:
        raise ValueError("threshold must be nonnegative")
    z = np.asarray(z, dtype=np.float64)
    return np.sign(z) * np.maximum(np.abs(z) - t, 0.0)


@dataclass(frozen=True)
class SmoothnessInfo:
    """L_i, L_max, L-bar, global L (exact-to-tolerance or an upper bound), mu."""

    per_example: np.ndarray
    l_max: float
    l_mean: float
    l_full: float
    l_full_exact: bool
    mu_lower: float

    @property
    def kappa(self):
        return self.l_full / self.mu_lower if self.mu_lower > 0 else np.inf

    @property
    def kappa_max(self):
        return self.l_max / self.mu_lower if self.mu_lower > 0 else np.inf

    @property
    def kappa_mean(self):
        return self.l_mean / self.mu_lower if self.mu_lower > 0 else np.inf


def power_iteration_sq(A, tol=1e-10, max_iter=10_000, seed=12345):
    """Largest eigenvalue of (1/n) A A^T for sparse CSR A.

    Iterates in the smaller of the two spaces (the spectrum is shared with
    (1/n) A^T A). Returns (lam, converged); converged means the residual
    ||B v - lam v|| <= tol * max(lam, 1e-30).
    """
    n, d = A.shape
    rng = np.random.Generator(np.random.PCG64(seed))
    in_row_space = n <= d
    size = n if in_row_space else d

    def apply(v):
        if in_row_space:
            return A @ (A.T @ v) / n
        return A.T @ (A @ v) / n

    v = rng.standard_normal(size)
    nv = np.linalg.norm(v)
    if nv == 0:
        v[0] = 1.0
        nv = 1.0
    v /= nv
    lam = 0.0
    for _ in range(max_iter):
        w = apply(v)
        nw = np.linalg.norm(w)
        if nw == 0:
            return 0.0, True  # A has no nonzero singular value reachable
        lam = float(v @ w)
        v = w / nw
        res = np.linalg.norm(apply(v) - lam * v)
        if res <= tol * max(abs(lam), 1e-30):
            return float(v @ apply(v)), True
    return lam, False


def smoothness(obj, tol=1e-10, max_iter=10_000):
    """SmoothnessInfo for a smooth objective.

    L_i = M ||a_i||^2 + l2 with M the loss curvature bound; the global L is
    M * lam_max((1/n) A A^T) + l2 via power iteration, falling back to the
    trace bound L-bar (flagged inexact) if the iteration fails to converge.
    """
    if not obj.loss.smooth:
        raise NonSmoothError("non-smooth loss: %s" % obj.loss.name)
    M = obj.loss.curvature_bound
    per = M * obj.row_sq + obj.l2
    l_max = float(per.max())
    l_mean = float(per.mean())
    lam, ok = power_iteration_sq(obj.data.to_csr(), tol=tol, max_iter=max_iter)
    if ok:
        # L <= L_max holds mathematically; min() only strips float dust
        l_full = min(M * lam + obj.l2, l_max)
    else:
        l_full = l_mean  # trace bound: lam_max <= mean ||a_i||^2
    return SmoothnessInfo(
        per_example=per,
        l_max=l_max,
        l_mean=l_mean,
        l_full=float(l_full),
        l_full_exact=bool(ok),
        mu_lower=obj.l2,
    )
