"""Datasets and strongly convex loss models.

Two empirical risks are provided, both of the form ``J(w) = (1/N) sum_n Q(w; x_n)``:

* :class:`QuadraticModel` -- ``Q(w; x_n) = 1/2 ||A w - x_n||^2``
* :class:`LogisticModel` -- ``Q(w; h_n, g_n) = rho ||w||^2 + ln(1 + exp(-g_n h_n^T w))``

Sample indices are 1-based at the public boundary (``sample_gradient(w, n)``
with ``1 <= n <= N``); the batched methods used by the simulation engine take
0-based index arrays.
"""
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import expit

from .rng import philox


class InvalidModelError(ValueError):
    """Model construction failed (rank deficiency, bad shapes, ...)."""


class StrongConvexityError(InvalidModelError):
    """The risk would not be strongly convex."""


class NonConvergenceError(RuntimeError):
    """The minimizer solve ran out of iterations.

    The best iterate found so far is kept in ``best``.
    """

    def __init__(self, message, best, grad_norm):
        super().__init__(message)
        self.best = best
        self.grad_norm = grad_norm


@dataclass(frozen=True, eq=False)
class Dataset:
    """Training samples.

    Logistic data carries ``features`` (N x M) and ``labels`` in {-1, +1};
    quadratic data carries ``targets`` (N x P).
    """

    features: Optional[np.ndarray] = None
    labels: Optional[np.ndarray] = None
    targets: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.targets is not None:
            if self.features is not None or self.labels is not None:
                raise ValueError("a dataset holds either targets or features/labels")
            t = np.array(self.targets, dtype=float)
            if t.ndim == 1:
                t = t[:, None]
            _check_samples(t)
            t.setflags(write=False)
            object.__setattr__(self, "targets", t)
            return
        if self.features is None or self.labels is None:
            raise ValueError("logistic data needs both features and labels")
        h = np.array(self.features, dtype=float)
        if h.ndim == 1:
            h = h[:, None]
        y = np.array(self.labels, dtype=float).ravel()
        _check_samples(h)
        if y.shape[0] != h.shape[0]:
            raise ValueError("features and labels disagree on N")
        if not np.all((y == 1.0) | (y == -1.0)):
            raise ValueError("labels must be exactly -1 or +1")
        h.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "features", h)
        object.__setattr__(self, "labels", y)

    @property
    def kind(self):
        return "quadratic" if self.targets is not None else "logistic"

    @property
    def n_samples(self):
        return (self.targets if self.targets is not None else self.features).shape[0]

    @property
    def dim(self):
        return (self.targets if self.targets is not None else self.features).shape[1]


def _check_samples(a):
    if a.ndim != 2:
        raise ValueError("samples must form an N x d array")
    if a.shape[0] < 2:
        raise ValueError(f"need at least 2 samples, got {a.shape[0]}")
    if not np.all(np.isfinite(a)):
        raise ValueError("samples contain non-finite entries")


class LossModel:
    """Common interface of the empirical-risk models.

    Subclasses implement the batched primitives ``_grad_rows`` and ``hessian``;
    everything else is derived here.
    """

    kind = "abstract"

    @property
    def n_samples(self):
        raise NotImplementedError

    @property
    def dim(self):
        raise NotImplementedError

    def _grad_rows(self, W, idx):
        """Per-sample gradients: row t is grad Q(W[t]; x_{idx[t]}) (0-based idx)."""
        raise NotImplementedError

    def all_gradients(self, w):
        """(N, M) array of every per-sample gradient at ``w``."""
        w = np.asarray(w, dtype=float)
        W = np.broadcast_to(w, (self.n_samples, self.dim))
        return self._grad_rows(W, np.arange(self.n_samples))

    def batch_gradient(self, W, idx):
        return self._grad_rows(np.asarray(W, dtype=float), np.asarray(idx))

    def sample_gradient(self, w, n):
        """Gradient of ``Q(w; x_n)`` for the 1-based sample index ``n``."""
        n = self._check_index(n)
        w = np.asarray(w, dtype=float)
        return self._grad_rows(w[None, :], np.array([n - 1]))[0]

    def full_gradient(self, w):
        return self.all_gradients(w).mean(axis=0)

    def gradient_noise(self, w):
        """(N, M) array of ``s_n(w) = grad Q(w; x_n) - grad J(w)``."""
        G = self.all_gradients(w)
        return G - G.mean(axis=0)

    def _check_index(self, n):
        n = int(n)
        if not 1 <= n <= self.n_samples:
            raise IndexError(f"sample index {n} outside 1..{self.n_samples}")
        return n

    def risk(self, w):
        raise NotImplementedError

    def hessian(self, w):
        raise NotImplementedError

    def sample_hessian(self, w, n):
        raise NotImplementedError

    def lipschitz_constants(self):
        """Per-sample gradient Lipschitz constants ``delta_n``."""
        raise NotImplementedError

    def strong_convexity(self):
        """Global strong-convexity constant ``nu`` of the risk."""
        raise NotImplementedError


class QuadraticModel(LossModel):
    """Least-squares risk ``J(w) = 1/(2N) sum_n ||A w - x_n||^2``."""

    kind = "quadratic"

    def __init__(self, A, targets):
        A = np.array(A, dtype=float)
        if A.ndim == 0:
            A = A.reshape(1, 1)
        elif A.ndim == 1:
            A = A[:, None]
        data = targets if isinstance(targets, Dataset) else Dataset(targets=targets)
        if data.kind != "quadratic":
            raise InvalidModelError("quadratic model needs a targets dataset")
        X = data.targets
        if X.shape[1] != A.shape[0]:
            raise InvalidModelError(
                f"targets have dimension {X.shape[1]} but A has {A.shape[0]} rows")
        if np.linalg.matrix_rank(A) < A.shape[1]:
            raise InvalidModelError("A must have full column rank")
        A.setflags(write=False)
        self.A = A
        self.dataset = data
        self._AtA = A.T @ A
        self._AtX = X @ A  # row n is A^T x_n

    @property
    def n_samples(self):
        return self.dataset.n_samples

    @property
    def dim(self):
        return self.A.shape[1]

    def _grad_rows(self, W, idx):
        return W @ self._AtA - self._AtX[idx]

    def risk(self, w):
        r = np.asarray(w, dtype=float) @ self.A.T - self.dataset.targets
        return 0.5 * np.mean(np.sum(r * r, axis=1))

    def hessian(self, w=None):
        return self._AtA.copy()

    def sample_hessian(self, w, n):
        self._check_index(n)
        return self._AtA.copy()

    def lipschitz_constants(self):
        return np.full(self.n_samples, np.linalg.eigvalsh(self._AtA)[-1])

    def strong_convexity(self):
        return float(np.linalg.eigvalsh(self._AtA)[0])

    def minimizer(self):
        """Closed-form ``(A^T A)^{-1} A^T xbar``."""
        return np.linalg.solve(self._AtA, self._AtX.mean(axis=0))


class LogisticModel(LossModel):
    """l2-regularized logistic regression with labels in {-1, +1}."""

    kind = "logistic"

    def __init__(self, dataset, rho):
        if dataset.kind != "logistic":
            raise InvalidModelError("logistic model needs a labeled dataset")
        rho = float(rho)
        if not rho > 0:
            raise StrongConvexityError(f"rho must be positive for strong convexity, got {rho}")
        self.dataset = dataset
        self.rho = rho
        self._H = dataset.features
        self._y = dataset.labels
        self._yH = dataset.features * dataset.labels[:, None]

    @property
    def n_samples(self):
        return self.dataset.n_samples

    @property
    def dim(self):
        return self.dataset.dim

    def _grad_rows(self, W, idx):
        yh = self._yH[idx]
        z = np.sum(yh * W, axis=-1)
        return 2.0 * self.rho * W - yh * expit(-z)[..., None]

    def risk(self, w):
        w = np.asarray(w, dtype=float)
        z = self._yH @ w
        return self.rho * (w @ w) + np.mean(np.logaddexp(0.0, -z))

    def sample_loss(self, w, n):
        n = self._check_index(n)
        w = np.asarray(w, dtype=float)
        return self.rho * (w @ w) + np.logaddexp(0.0, -self._yH[n - 1] @ w)

    def hessian(self, w):
        w = np.asarray(w, dtype=float)
        p = expit(self._yH @ w)
        c = p * (1.0 - p)
        return 2.0 * self.rho * np.eye(self.dim) + (self._H.T * c) @ self._H / self.n_samples

    def sample_hessian(self, w, n):
        n = self._check_index(n)
        h = self._H[n - 1]
        p = expit(self._yH[n - 1] @ np.asarray(w, dtype=float))
        return 2.0 * self.rho * np.eye(self.dim) + p * (1.0 - p) * np.outer(h, h)

    def lipschitz_constants(self):
        # sigmoid' <= 1/4
        return 2.0 * self.rho + 0.25 * np.sum(self._H ** 2, axis=1)

    def strong_convexity(self):
        return 2.0 * self.rho


def quadratic_model(A, targets):
    """Least-squares model; see :class:`QuadraticModel`."""
    return QuadraticModel(A, targets)


def logistic_model(dataset, rho):
    """Regularized logistic model; see :class:`LogisticModel`."""
    return LogisticModel(dataset, rho)


def synth_logistic_dataset(N, M, seed, rho=None):
    """Synthetic logistic-regression data.

    Features are drawn from N(0, diag(lam)) with ``lam`` uniform on (1, 10);
    labels follow a logistic model around a hidden N(0, I) weight vector.
    ``rho`` is accepted for call-site symmetry with the model and ignored.
    """
    N, M = int(N), int(M)
    if N < 2:
        raise ValueError(f"need N >= 2, got {N}")
    if M < 1:
        raise ValueError(f"need M >= 1, got {M}")
    rng = philox(seed)
    lam = rng.uniform(1.0, 10.0, size=M)
    h = rng.standard_normal((N, M)) * np.sqrt(lam)
    w0 = rng.standard_normal(M)
    u = rng.uniform(0.0, 1.0, size=N)
    labels = np.where(u <= expit(h @ w0), 1.0, -1.0)
    return Dataset(features=h, labels=labels)


def synth_quadratic_dataset(N, M, seed, scale=1.0):
    """Targets ``x_n ~ N(0, scale^2 I_M)`` for a least-squares model."""
    N, M = int(N), int(M)
    if N < 2:
        raise ValueError(f"need N >= 2, got {N}")
    if M < 1:
        raise ValueError(f"need M >= 1, got {M}")
    return Dataset(targets=scale * philox(seed).standard_normal((N, M)))


def random_orthonormal(M, seed):
    """Haar-distributed ``M x M`` orthogonal matrix."""
    q, r = np.linalg.qr(philox(seed).standard_normal((M, M)))
    return q * np.sign(np.diag(r))


@dataclass(frozen=True)
class MinimizerResult:
    w_star: np.ndarray
    grad_norm: float
    iterations: int


def solve_minimizer(model, tol=1e-10, max_iter=500):
    """Minimize the empirical risk to ``||grad J|| <= tol``.

    Damped Newton with an Armijo backtracking line search; falls back to the
    negative gradient when the Newton direction is not a descent direction.
    Deterministic: starts from zero.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    if isinstance(model, QuadraticModel):
        w = model.minimizer()
        # one refinement step absorbs solve round-off
        w = w - np.linalg.solve(model._AtA, model.full_gradient(w))
        g = np.linalg.norm(model.full_gradient(w))
        if g > tol:
            raise NonConvergenceError(f"normal equations left ||grad||={g:.3e}", w, g)
        return MinimizerResult(w, float(g), 1)

    w = np.zeros(model.dim)
    f = model.risk(w)
    for it in range(max_iter):
        g = model.full_gradient(w)
        gn = np.linalg.norm(g)
        if gn <= tol:
            return MinimizerResult(w, float(gn), it)
        d = -np.linalg.solve(model.hessian(w), g)
        slope = g @ d
        if not slope < 0:
            d, slope = -g, -(g @ g)
        elif -slope <= 1e-12 * max(1.0, abs(f)):
            # predicted decrease is below the risk's round-off: Armijo cannot
            # discriminate, and the Newton step is locally quadratic anyway
            w = w + d
            f = model.risk(w)
            continue
        t = 1.0
        while True:
            w_new = w + t * d
            f_new = model.risk(w_new)
            if f_new <= f + 1e-4 * t * slope or t < 1e-12:
                break
            t *= 0.5
        if t < 1e-12:
            # line search stalled at round-off; accept a pure Newton step
            w_new = w + d
            f_new = model.risk(w_new)
        w, f = w_new, f_new
    g = model.full_gradient(w)
    gn = float(np.linalg.norm(g))
    if gn <= tol:
        return MinimizerResult(w, gn, max_iter)
    raise NonConvergenceError(f"no convergence in {max_iter} iterations (||grad||={gn:.3e})", w, gn)


@dataclass(frozen=True)
class NoiseStats:
    """Gradient-noise statistics at the minimizer.

    ``nu`` is the global strong-convexity constant used by the bounds;
    ``nu_local`` is ``lambda_min`` of the Hessian at the minimizer.
    """

    R_s_star: np.ndarray
    K: float
    delta: float
    nu: float
    hessian: np.ndarray = field(repr=False)
    nu_local: float = 0.0


def noise_stats(model, w_star):
    w_star = np.asarray(w_star, dtype=float)
    G = model.all_gradients(w_star)
    R = G.T @ G / model.n_samples
    R = 0.5 * (R + R.T)
    H = model.hessian(w_star)
    return NoiseStats(
        R_s_star=R,
        K=float(np.trace(R)),
        delta=float(np.max(model.lipschitz_constants())),
        nu=float(model.strong_convexity()),
        hessian=H,
        nu_local=float(np.linalg.eigvalsh(H)[0]),
    )
