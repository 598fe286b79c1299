"""SGD recursions and trial ensembles.

All trials of an ensemble advance together as rows of a ``(T, M)`` array.
Each row's randomness comes from its own seed, and every operation is
row-wise, so a trial's path does not depend on which other trials share its
batch or worker.

Recorded squared deviations are laid out as

* ``granularity='epoch'``: shape ``(epochs + 1,)`` -- ``||w_0^k - w*||^2`` for
  ``k = 1..epochs+1`` (the last entry is the final iterate);
* ``granularity='iterate'``: shape ``(epochs, N + 1)`` -- row ``k-1`` holds
  positions ``0..N`` of epoch ``k``; position ``N`` of one row equals
  position 0 of the next.
"""
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import rng
from .sampling import KINDS, index_batch

DIVERGENCE_THRESHOLD = 1e12
GRANULARITIES = ("epoch", "iterate")


class DivergenceError(RuntimeError):
    def __init__(self, iteration, trial=None):
        where = f" (trial {trial})" if trial is not None else ""
        super().__init__(f"iterate norm exceeded {DIVERGENCE_THRESHOLD:g} at iteration {iteration}{where}")
        self.iteration = iteration
        self.trial = trial


class StepSizeError(ValueError):
    pass


@dataclass(frozen=True)
class StepSizeRule:
    """Constant ``mu`` or decaying ``c / (i + 1)`` indexed by global iteration ``i``.

    With ``strict=True`` a constant rule is checked against
    ``mu <= nu / (3 delta^2 N)`` before a run starts.
    """

    kind: str = "constant"
    mu: float = 0.0
    c: float = 0.0
    strict: bool = False

    def __post_init__(self):
        if self.kind not in ("constant", "decaying"):
            raise ValueError(f"unknown step rule {self.kind!r}")
        if self.kind == "constant" and self.mu < 0:
            raise ValueError("mu must be nonnegative")
        if self.kind == "decaying" and not self.c > 0:
            raise ValueError("decaying rule needs c > 0")

    @classmethod
    def constant(cls, mu, strict=False):
        return cls("constant", mu=float(mu), strict=strict)

    @classmethod
    def decaying(cls, c):
        return cls("decaying", c=float(c))

    def at(self, i):
        """Step size used to produce global iterate ``i`` (``i >= 1``)."""
        if self.kind == "constant":
            return self.mu
        return self.c / (i + 1)

    def stability_limit(self, model):
        return model.strong_convexity() / (3.0 * np.max(model.lipschitz_constants()) ** 2 * model.n_samples)

    def check(self, model):
        if self.strict and self.kind == "constant":
            limit = self.stability_limit(model)
            if self.mu > limit:
                raise StepSizeError(f"mu={self.mu:g} exceeds nu/(3 delta^2 N)={limit:.3e}")


@dataclass
class Trajectory:
    """Squared deviations of one run (layout in the module docstring)."""

    sq_dev: np.ndarray
    granularity: str
    seed: int
    kind: str
    step: StepSizeRule
    N: int
    iterates: Optional[np.ndarray] = field(default=None, repr=False)

    def epoch_starts(self):
        return _epoch_starts(self.sq_dev, self.granularity)

    def rows(self):
        """``(epoch, position, sq_dev)`` triples in recording order."""
        if self.granularity == "epoch":
            for k, v in enumerate(self.sq_dev, start=1):
                yield k, 0, float(v)
        else:
            for k, row in enumerate(self.sq_dev, start=1):
                for i, v in enumerate(row):
                    yield k, i, float(v)


def _epoch_starts(sq, granularity):
    if granularity == "epoch":
        return sq
    return np.concatenate([sq[..., :, 0], sq[..., -1:, -1]], axis=-1)


@dataclass
class RunConfig:
    """Everything one trial needs except its seed."""

    model: object
    sampler: str
    step: StepSizeRule
    epochs: int
    w_star: np.ndarray
    granularity: str = "epoch"
    w0: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.sampler not in KINDS:
            raise ValueError(f"unknown sampler {self.sampler!r}")
        if self.granularity not in GRANULARITIES:
            raise ValueError(f"unknown granularity {self.granularity!r}")
        if int(self.epochs) < 1:
            raise ValueError("epochs must be >= 1")


@dataclass
class Ensemble:
    """Stacked trajectories of T trials sharing one configuration."""

    sq_dev: np.ndarray  # (T, ...) in the Trajectory layout
    seeds: list
    config: RunConfig

    @property
    def trials(self):
        return self.sq_dev.shape[0]

    @property
    def granularity(self):
        return self.config.granularity

    @property
    def N(self):
        return self.config.model.n_samples

    def epoch_starts(self):
        return _epoch_starts(self.sq_dev, self.granularity)

    @property
    def trajectories(self):
        c = self.config
        return [Trajectory(self.sq_dev[t], c.granularity, s, c.sampler, c.step, self.N)
                for t, s in enumerate(self.seeds)]


def _initial(model, w0, T):
    w = np.zeros(model.dim) if w0 is None else np.asarray(w0, dtype=float)
    if w.shape != (model.dim,):
        raise ValueError(f"w0 must have shape ({model.dim},)")
    return np.tile(w, (T, 1))


def _sq(W, w_star):
    d = W - w_star
    return np.sum(d * d, axis=1)


def _guard(W, iteration):
    norms = np.max(np.abs(W), axis=1)
    bad = ~(norms <= DIVERGENCE_THRESHOLD)
    if np.any(bad):
        raise DivergenceError(iteration, int(np.argmax(bad)))


def simulate(model, sampler, step, epochs, w_star, seeds, w0=None,
             granularity="epoch", record_iterates=False):
    """Run ``len(seeds)`` independent trials; returns ``(sq_dev, iterates)``.

    ``sq_dev`` has a leading trial axis.  ``iterates`` (only when requested)
    has shape ``(T, epochs * N + 1, M)``.
    """
    if granularity not in GRANULARITIES:
        raise ValueError(f"unknown granularity {granularity!r}")
    step.check(model)
    seeds = rng.seed_array(seeds)
    T, N, epochs = len(seeds), model.n_samples, int(epochs)
    w_star = np.asarray(w_star, dtype=float)
    W = _initial(model, w0, T)
    if granularity == "epoch":
        out = np.empty((T, epochs + 1))
    else:
        out = np.empty((T, epochs, N + 1))
    path = np.empty((T, epochs * N + 1, model.dim)) if record_iterates else None
    if record_iterates:
        path[:, 0] = W
    it = 0
    for k in range(1, epochs + 1):
        order = index_batch(sampler, seeds, k, N)
        if granularity == "epoch":
            out[:, k - 1] = _sq(W, w_star)
        else:
            out[:, k - 1, 0] = _sq(W, w_star)
        for i in range(N):
            it += 1
            W = W - step.at(it) * model.batch_gradient(W, order[:, i])
            if granularity == "iterate":
                out[:, k - 1, i + 1] = _sq(W, w_star)
            if record_iterates:
                path[:, it] = W
        _guard(W, it)
    if granularity == "epoch":
        out[:, epochs] = _sq(W, w_star)
    return out, path


def run_sgd(model, schedule, step, epochs, w_star, granularity="epoch", w0=None,
            record_iterates=False):
    """One SGD trial driven by ``schedule`` (its kind and seed are used).

    Executes exactly ``epochs * N`` gradient steps; the recorded deviations
    include the initial point.
    """
    if schedule.epoch_length != model.n_samples:
        raise ValueError("schedule epoch length differs from the number of samples")
    sq, path = simulate(model, schedule.kind, step, epochs, w_star, [schedule.seed], w0,
                        granularity, record_iterates)
    return Trajectory(sq[0], granularity, schedule.seed, schedule.kind, step, model.n_samples,
                      None if path is None else path[0])


def _run_chunk(args):
    config, seeds = args
    sq, _ = simulate(config.model, config.sampler, config.step, config.epochs,
                     config.w_star, seeds, config.w0, config.granularity)
    return sq


def run_trials(config, T, base_seed=0, workers=1, chunk_size=None):
    """Run ``T`` trials with seeds ``derive_seed(base_seed, t)``.

    The result is bit-identical for any ``workers`` / ``chunk_size``.
    """
    T = int(T)
    if T < 1:
        raise ValueError("need at least one trial")
    seeds = [rng.derive_seed(base_seed, t) for t in range(T)]
    if chunk_size is None:
        chunk_size = -(-T // max(1, int(workers)))
    chunks = [seeds[a:a + chunk_size] for a in range(0, T, chunk_size)]
    if workers > 1 and len(chunks) > 1:
        with ProcessPoolExecutor(max_workers=int(workers)) as pool:
            parts = list(pool.map(_run_chunk, [(config, c) for c in chunks]))
    else:
        parts = [_run_chunk((config, c)) for c in chunks]
    return Ensemble(np.concatenate(parts, axis=0), seeds, config)


@dataclass
class CoupledRun:
    """A real reshuffling run and the long-term model driven by the same noise.

    ``longterm`` and ``real`` hold squared deviations in the usual layout
    (leading trial axis); ``gap`` is ``||w'_0^k - w_0^k||^2`` at epoch starts.
    """

    longterm: np.ndarray
    real: np.ndarray
    gap: np.ndarray
    granularity: str
    seeds: list

    def longterm_epoch_starts(self):
        return _epoch_starts(self.longterm, self.granularity)

    def real_epoch_starts(self):
        return _epoch_starts(self.real, self.granularity)


def run_longterm_model(model, schedule_or_seeds, mu, epochs, w_star, H=None, w0=None,
                       granularity="epoch", sampler="reshuffle"):
    """Evolve the long-term model alongside a real run sharing its permutations.

    Per step the primed error ``e' = w* - w'`` follows
    ``e'_i = (I - mu H) e'_{i-1} + mu s_{sigma(i)}(w_0^k)`` where the gradient
    noise is frozen at the real run's epoch-start iterate ``w_0^k``.  Over an
    epoch this is ``e'_0^{k+1} = (I - mu H)^N e'_0^k + mu sum_i (I - mu H)^{N-i} s_{sigma(i)}(w_0^k)``.
    """
    if hasattr(schedule_or_seeds, "seed"):
        seeds = [schedule_or_seeds.seed]
        sampler = schedule_or_seeds.kind
    else:
        seeds = schedule_or_seeds
    seeds_u = rng.seed_array(seeds)
    w_star = np.asarray(w_star, dtype=float)
    if H is None:
        H = model.hessian(w_star)
    H = np.asarray(H, dtype=float)
    T, N, epochs = len(seeds_u), model.n_samples, int(epochs)
    W = _initial(model, w0, T)
    E = w_star - W  # primed error starts at the real one
    rows = np.arange(T)
    if granularity == "epoch":
        lt, real = np.empty((T, epochs + 1)), np.empty((T, epochs + 1))
    else:
        lt, real = np.empty((T, epochs, N + 1)), np.empty((T, epochs, N + 1))
    gap = np.empty((T, epochs + 1))
    it = 0
    for k in range(1, epochs + 1):
        order = index_batch(sampler, seeds_u, k, N)
        # s_n(w_0^k) for every trial: (T, N, M)
        W0 = W
        S = np.stack([model.gradient_noise(W0[t]) for t in range(T)])
        e_real = w_star - W
        gap[:, k - 1] = np.sum((E - e_real) ** 2, axis=1)
        if granularity == "epoch":
            lt[:, k - 1], real[:, k - 1] = np.sum(E * E, axis=1), np.sum(e_real * e_real, axis=1)
        else:
            lt[:, k - 1, 0], real[:, k - 1, 0] = np.sum(E * E, axis=1), np.sum(e_real * e_real, axis=1)
        for i in range(N):
            it += 1
            idx = order[:, i]
            W = W - mu * model.batch_gradient(W, idx)
            E = E - mu * (E @ H) + mu * S[rows, idx]
            if granularity == "iterate":
                d = w_star - W
                lt[:, k - 1, i + 1] = np.sum(E * E, axis=1)
                real[:, k - 1, i + 1] = np.sum(d * d, axis=1)
        _guard(W, it)
        _guard(E, it)
    e_real = w_star - W
    gap[:, epochs] = np.sum((E - e_real) ** 2, axis=1)
    if granularity == "epoch":
        lt[:, epochs], real[:, epochs] = np.sum(E * E, axis=1), np.sum(e_real * e_real, axis=1)
    return CoupledRun(lt, real, gap, granularity, [int(s) for s in seeds_u])

