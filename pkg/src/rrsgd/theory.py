"""Closed-form steady-state predictions for SGD under random reshuffling.

Every predictor works in the eigenbasis ``H = U diag(lam) U^T``.  Matrix
power sums ``sum_i (I - mu H)^i`` become per-eigenvalue geometric sums, and
the quantities ``1 - (1 - mu lam)^i`` are formed with ``expm1``/``log1p`` so
that small ``mu lam N`` does not cancel catastrophically.

Only leading terms are returned; the higher-order remainders of the
underlying expansions have no known constants.
"""
import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .eigen import jacobi_eigh
from .model import noise_stats


class ConditioningError(ValueError):
    """A predictor cannot be evaluated reliably at these inputs."""


class StepSizeConditionError(ValueError):
    """A step-size precondition of a bound is violated."""


@dataclass(frozen=True, eq=False)
class TheoryInputs:
    """Everything the predictors consume.

    Attributes
    ----------
    H : (M, M) array
        Hessian of the risk at the minimizer (symmetric positive definite).
    R_s_star : (M, M) array
        Gradient-noise covariance at the minimizer.
    mu : float
    N : int
    nu, delta : float
        Strong-convexity and gradient-Lipschitz constants.
    K : float
        Gradient-noise power, ``trace(R_s_star)`` unless given.
    """

    H: np.ndarray
    R_s_star: np.ndarray
    mu: float
    N: int
    nu: float = None
    delta: float = None
    K: float = None

    def __post_init__(self):
        H = np.atleast_2d(np.array(self.H, dtype=float))
        R = np.atleast_2d(np.array(self.R_s_star, dtype=float))
        if H.shape != R.shape or H.shape[0] != H.shape[1]:
            raise ValueError("H and R_s_star must be square and of equal size")
        if np.max(np.abs(H - H.T)) > 1e-10 * max(1.0, np.abs(H).max()):
            raise ValueError("H must be symmetric")
        if int(self.N) != self.N or self.N < 2:
            raise ValueError("N must be an integer >= 2")
        if not self.mu > 0:
            raise ValueError("mu must be positive")
        object.__setattr__(self, "H", 0.5 * (H + H.T))
        object.__setattr__(self, "R_s_star", 0.5 * (R + R.T))
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "mu", float(self.mu))
        lam = self.eig.Lambda
        if lam[0] <= 0:
            raise ValueError("H must be positive definite")
        if self.nu is None:
            object.__setattr__(self, "nu", float(lam[0]))
        if self.delta is None:
            object.__setattr__(self, "delta", float(lam[-1]))
        if self.K is None:
            object.__setattr__(self, "K", float(np.trace(self.R_s_star)))

    @cached_property
    def eig(self):
        return jacobi_eigh(self.H)

    @cached_property
    def R_rot(self):
        """``U^T R_s_star U``."""
        U = self.eig.U
        return U.T @ self.R_s_star @ U

    @property
    def M(self):
        return self.H.shape[0]

    def with_(self, **changes):
        base = dict(H=self.H, R_s_star=self.R_s_star, mu=self.mu, N=self.N,
                    nu=self.nu, delta=self.delta, K=self.K)
        base.update(changes)
        return TheoryInputs(**base)

    @classmethod
    def from_model(cls, model, w_star, mu, nu="global"):
        """Build inputs from a loss model at its minimizer.

        ``nu='global'`` uses the model's strong-convexity constant (``2 rho``
        for logistic), ``nu='local'`` uses ``lambda_min`` of the Hessian.
        """
        st = noise_stats(model, w_star)
        if nu not in ("global", "local"):
            raise ValueError("nu must be 'global' or 'local'")
        return cls(H=st.hessian, R_s_star=st.R_s_star, mu=mu, N=model.n_samples,
                   nu=st.nu if nu == "global" else st.nu_local, delta=st.delta, K=st.K)


def _one_minus_pow(a, i):
    """``1 - (1 - a)^i`` elementwise, accurate for small ``a``."""
    a = np.asarray(a, dtype=float)
    i = np.asarray(i, dtype=float)
    safe = a < 1.0
    with np.errstate(divide="ignore", invalid="ignore"):
        small = -np.expm1(i * np.log1p(-np.where(safe, a, 0.0)))
        direct = 1.0 - (1.0 - a) ** i
    return np.where(safe, small, direct)


def _sum_kernel(inputs, n):
    """``D(n)`` with ``[N sum_{i<n} B^i R B^i - S R S] / (N-1) = U (D o R~) U^T``.

    Uses ``N sum u_j u_k - S_j S_k = n (N - n) ubar_j ubar_k + N sum (c_j - cbar_j)(c_k - cbar_k)``
    with ``u = (1 - mu lam)^i`` and ``c = 1 - u``, which has no cancellation.
    """
    N = inputs.N
    a = inputs.mu * inputs.eig.Lambda
    i = np.arange(n, dtype=float)[:, None]
    c = _one_minus_pow(a[None, :], i)
    cbar = c.mean(axis=0)
    cc = c - cbar
    ubar = 1.0 - cbar
    return (n * (N - n) * np.outer(ubar, ubar) + N * (cc.T @ cc)) / (N - 1)


def noise_cov_prime(inputs):
    """Covariance of the epoch-aggregated gradient noise at the minimizer."""
    return noise_cov_prime_partial(inputs, inputs.N)


def noise_cov_prime_partial(inputs, i):
    """Same as :func:`noise_cov_prime` with the sums stopped after ``i`` terms."""
    if not 1 <= i <= inputs.N:
        raise ValueError(f"i={i} outside 1..{inputs.N}")
    U = inputs.eig.U
    R = U @ (_sum_kernel(inputs, int(i)) * inputs.R_rot) @ U.T
    return 0.5 * (R + R.T)


def _check_longterm(inputs):
    if inputs.mu * inputs.eig.Lambda[-1] >= 1.0:
        raise ConditioningError("need mu * lambda_max(H) < 1")


def _inv_gap(inputs, power):
    """``1 / (1 - (1 - mu lam)^power)`` per eigenvalue."""
    g = _one_minus_pow(inputs.mu * inputs.eig.Lambda, power)
    if np.any(g <= 0) or not np.all(np.isfinite(g)):
        raise ConditioningError("I - (I - mu H)^(2N) is numerically singular")
    return 1.0 / g


def msd_rr_longterm(inputs):
    """``mu^2 Tr((I - (I - mu H)^{2N})^{-1} R'_s)`` for the long-term model."""
    _check_longterm(inputs)
    D = _sum_kernel(inputs, inputs.N)
    g = _inv_gap(inputs, 2 * inputs.N)
    return float(inputs.mu ** 2 * np.sum(g * np.diag(D) * np.diag(inputs.R_rot)))


def msd_uniform(inputs):
    """``(mu / 2) Tr(H^{-1} R_s)``: steady-state MSD with replacement."""
    return float(0.5 * inputs.mu * np.trace(np.linalg.solve(inputs.H, inputs.R_s_star)))


def msd_infinite_horizon(inputs):
    """Limit of the reshuffling MSD as N grows; same leading term as uniform sampling."""
    return msd_uniform(inputs)


def _check_periter(inputs, nu):
    if inputs.mu > 2.0 / (inputs.delta + nu):
        raise StepSizeConditionError(
            f"mu={inputs.mu:g} exceeds 2/(delta+nu)={2.0 / (inputs.delta + nu):.3e}")


def msd_rr_periter_terms(inputs, i, nu=None):
    """Weight and the two MSD levels whose convex combination is the per-iteration bound.

    Returns ``(eta_i, msd_lt, msd_lt_i)`` with
    ``bound = eta_i * msd_lt + (1 - eta_i) * msd_lt_i`` and
    ``eta_i = (1 - mu nu)^{2i}``.  ``msd_lt_i`` is undefined (nan) at ``i = 0``.
    """
    nu = inputs.nu if nu is None else float(nu)
    _check_periter(inputs, nu)
    if not 0 <= i <= inputs.N:
        raise ValueError(f"i={i} outside 0..{inputs.N}")
    eta = (1.0 - inputs.mu * nu) ** (2 * i)
    lt = msd_rr_longterm(inputs)
    if i == 0:
        return eta, lt, float("nan")
    part = inputs.mu ** 2 * np.trace(noise_cov_prime_partial(inputs, i))
    return eta, lt, float(part / float(_one_minus_pow(inputs.mu * nu, 2 * i)))


def msd_rr_periter_bound(inputs, i, nu=None):
    """Upper bound on the long-term model's steady MSD after ``i`` steps of an epoch.

    ``(1 - mu nu)^{2i} msd_lt + mu^2 Tr(R'_{s,i})``; the second term is the
    collapsed form of ``(1 - (1-mu nu)^{2i}) mu^2 Tr((1-(1-mu nu)^{2i})^{-1} R'_{s,i})``.
    """
    nu = inputs.nu if nu is None else float(nu)
    _check_periter(inputs, nu)
    if not 0 <= i <= inputs.N:
        raise ValueError(f"i={i} outside 0..{inputs.N}")
    first = (1.0 - inputs.mu * nu) ** (2 * i) * msd_rr_longterm(inputs)
    if i == 0:
        return float(first)
    return float(first + inputs.mu ** 2 * np.trace(noise_cov_prime_partial(inputs, i)))


def msd_rr_periter_profile(inputs, nu=None):
    """:func:`msd_rr_periter_bound` for every ``i = 0..N`` in one O(N M) pass."""
    nu = inputs.nu if nu is None else float(nu)
    _check_periter(inputs, nu)
    N = inputs.N
    a = inputs.mu * inputs.eig.Lambda
    i = np.arange(1, N + 1, dtype=float)[:, None]
    c = _one_minus_pow(a[None, :], i - 1.0)
    s1 = np.cumsum(c, axis=0)
    s2 = np.cumsum(c * c, axis=0)
    cbar = s1 / i
    # the spread of c is comparable to its mean, so this difference is benign
    m2 = np.maximum(s2 - s1 * cbar, 0.0)
    Djj = (i * (N - i) * (1.0 - cbar) ** 2 + N * m2) / (N - 1)
    second = inputs.mu ** 2 * (Djj @ np.diag(inputs.R_rot))
    first = (1.0 - inputs.mu * nu) ** (2 * np.arange(N + 1)) * msd_rr_longterm(inputs)
    first[1:] += second
    return first


def _one_minus_tanhc(y):
    """``1 - tanh(y) / y`` without cancellation near 0."""
    y = np.asarray(y, dtype=float)
    y2 = y * y
    series = y2 / 3.0 - 2.0 * y2 ** 2 / 15.0 + 17.0 * y2 ** 3 / 315.0 - 62.0 * y2 ** 4 / 2835.0
    with np.errstate(divide="ignore", invalid="ignore"):
        direct = 1.0 - np.tanh(y) / y
    return np.where(np.abs(y) < 1e-2, series, direct)


def m_rr_factor(mu, N, lam=1.0):
    """``N/(N-1) (1 - 2/(mu N lam) tanh(mu N lam / 2))``.

    The factor by which reshuffling scales the uniform-sampling MSD along an
    eigendirection with curvature ``lam``.
    """
    if N < 2:
        raise ValueError("N must be >= 2")
    x = mu * N * np.asarray(lam, dtype=float)
    out = N / (N - 1.0) * _one_minus_tanhc(x / 2.0)
    return float(out) if np.ndim(out) == 0 else out


def _m_rr_partial(mu, N, i, lam):
    """``N/(N-1) (1 - 2/(mu N lam) tanh(mu i lam / 2))`` written as a sum of nonnegative parts."""
    y = mu * i * lam / 2.0
    t = i / N
    return N / (N - 1.0) * ((1.0 - t) + t * _one_minus_tanhc(y))


def msd_rr_hyperbolic(inputs):
    """``(mu/2) Tr(M_RR Lambda^{-1} U^T R_s U)`` with the diagonal tanh factor ``M_RR``."""
    lam = inputs.eig.Lambda
    M = m_rr_factor(inputs.mu, inputs.N, lam)
    return float(0.5 * inputs.mu * np.sum(M / lam * np.diag(inputs.R_rot)))


def msd_periter_hyperbolic(inputs, i, nu=None):
    """tanh approximation of the per-iteration MSD after ``i`` steps (``0 <= i <= N``).

    ``e^{-2 mu nu i} msd_hyp + (1 - e^{-2 mu nu i}) (mu/2) Tr(M_RR(i) Lambda^{-1} U^T R_s U)``.
    With ``nu = 1`` (orthonormal least squares) the weight is ``e^{-2 mu i}``.
    """
    nu = inputs.nu if nu is None else float(nu)
    if not 0 <= i <= inputs.N:
        raise ValueError(f"i={i} outside 0..{inputs.N}")
    lam = inputs.eig.Lambda
    r = np.diag(inputs.R_rot) / lam
    first = msd_rr_hyperbolic(inputs)
    second = 0.5 * inputs.mu * np.sum(_m_rr_partial(inputs.mu, inputs.N, i, lam) * r)
    w = np.exp(-2.0 * inputs.mu * nu * i)
    return float(w * first + (1.0 - w) * second)


def quadratic_closed_form(mu, N, var_x, form="exact"):
    """Reshuffling MSD of an orthonormal least-squares problem (``A^T A = I``).

    ``form='exact'``::

        mu^2/(N-1) [N/(2mu - mu^2) - (1 - (1-mu)^N) / (mu^2 (1 + (1-mu)^N))] var_x

    ``form='tanh'``::

        (mu/2) N/(N-1) (1 - 2/(mu N) tanh(mu N / 2)) var_x

    ``var_x`` is the gradient-noise power ``Tr(A^T R_xx A)``; it equals the
    target variance when A is square.
    """
    if not 0 < mu < 1:
        raise ValueError("need 0 < mu < 1")
    if form == "exact":
        b = (1.0 - mu) ** N
        return mu ** 2 / (N - 1) * (N / (2 * mu - mu ** 2) - (1 - b) / (mu ** 2 * (1 + b))) * var_x
    if form == "tanh":
        return 0.5 * mu * N / (N - 1) * (1 - 2.0 / (mu * N) * np.tanh(mu * N / 2.0)) * var_x
    raise ValueError(f"unknown form {form!r}")


def _warn_theorem1(inputs):
    limit = inputs.nu / (3.0 * inputs.delta ** 2 * inputs.N)
    if inputs.mu > limit:
        msg = f"mu={inputs.mu:g} exceeds nu/(3 delta^2 N)={limit:.3e}; bound not guaranteed"
        warnings.warn(msg, stacklevel=3)
        return msg
    return None


def stability_bound(inputs):
    """``4 mu^2 delta^2 N^2 K / nu^2``: limsup of the epoch-start MSD."""
    _warn_theorem1(inputs)
    return float(4.0 * inputs.mu ** 2 * inputs.delta ** 2 * inputs.N ** 2 * inputs.K / inputs.nu ** 2)


def rate_alpha_theorem1(inputs):
    """Per-epoch contraction ``1 - mu nu N / 2`` of the stability bound."""
    _warn_theorem1(inputs)
    return float(1.0 - inputs.mu * inputs.nu * inputs.N / 2.0)


def rate_alpha_theorem2(inputs):
    """Per-epoch contraction ``(1 - mu lambda_min(H))^{2N}`` of the long-term model."""
    return float((1.0 - inputs.mu * inputs.eig.Lambda[0]) ** (2 * inputs.N))


def mismatch_bound(inputs):
    """Limsup of ``E||w'_0^k - w_0^k||^2``: the stability bound over ``N - 1``."""
    return stability_bound(inputs) / (inputs.N - 1)


@dataclass
class Prediction:
    """All predictor outputs for one set of inputs (the ``predict`` JSON payload)."""

    msd_rr_lt: float
    msd_rr_hyperbolic: float
    msd_uniform: float
    m_rr: float
    per_iter_bound: list
    stability_bound: float
    mismatch_bound: float
    alpha1: float
    alpha2: float
    warnings: list = field(default_factory=list)

    def as_dict(self):
        return dict(self.__dict__)


def predict(inputs, per_iter=True):
    notes = []
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        stab = stability_bound(inputs)
        mism = mismatch_bound(inputs)
        a1 = rate_alpha_theorem1(inputs)
    for w in caught:
        msg = str(w.message)
        if msg not in notes:
            notes.append(msg)
    bound = []
    if per_iter:
        try:
            bound = msd_rr_periter_profile(inputs).tolist()
        except StepSizeConditionError as e:
            notes.append(str(e))
    return Prediction(
        msd_rr_lt=msd_rr_longterm(inputs),
        msd_rr_hyperbolic=msd_rr_hyperbolic(inputs),
        msd_uniform=msd_uniform(inputs),
        m_rr=m_rr_factor(inputs.mu, inputs.N),
        per_iter_bound=bound,
        stability_bound=stab,
        mismatch_bound=mism,
        alpha1=a1,
        alpha2=rate_alpha_theorem2(inputs),
        warnings=notes,
    )
