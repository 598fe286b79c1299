"""Index streams for uniform sampling, random reshuffling and cyclic passes.

Public indices, epochs and positions are 1-based.  The ``*_batch`` functions
used by the engine return 0-based index arrays for many trials at once.
"""
import numpy as np

from . import rng

KINDS = ("uniform", "reshuffle", "cyclic")


class UnsupportedKindError(ValueError):
    pass


def _check_kind(kind):
    if kind not in KINDS:
        raise UnsupportedKindError(f"unknown sampler {kind!r}; expected one of {KINDS}")
    return kind


def permutation_batch(seeds, epoch, N):
    """Fisher-Yates permutations of ``0..N-1`` for every seed at ``epoch``.

    Row ``t`` depends only on ``(seeds[t], epoch)``, so any epoch of any trial
    is reproducible without replaying earlier ones.  ``epoch`` may also be an
    array broadcast against ``seeds``.
    """
    seeds = rng.seed_array(seeds)
    epoch = np.asarray(epoch, dtype=np.int64)
    seeds, epoch = np.broadcast_arrays(seeds, epoch)
    T = seeds.shape[0]
    perm = np.tile(np.arange(N), (T, 1))
    if N < 2:
        return perm
    key = rng.stream_key(seeds, rng.TAG_PERMUTATION, epoch)
    u = rng.uniforms(key, np.arange(N - 1))
    rows = np.arange(T)
    for step, i in enumerate(range(N - 1, 0, -1)):
        j = np.minimum((u[:, step] * (i + 1)).astype(np.int64), i)
        tmp = perm[rows, j]
        perm[rows, j] = perm[:, i]
        perm[:, i] = tmp
    return perm


def uniform_batch(seeds, epoch, N):
    """N independent uniform draws from ``0..N-1`` per seed for block ``epoch``."""
    seeds = rng.seed_array(seeds)
    key = rng.stream_key(seeds, rng.TAG_UNIFORM, int(epoch))
    u = rng.uniforms(key, np.arange(N))
    return np.minimum((u * N).astype(np.int64), N - 1)


def index_batch(kind, seeds, epoch, N):
    """0-based sample order for one epoch of every trial, shape ``(T, N)``."""
    if kind == "reshuffle":
        return permutation_batch(seeds, epoch, N)
    if kind == "uniform":
        return uniform_batch(seeds, epoch, N)
    if kind == "cyclic":
        return np.tile(np.arange(N), (np.atleast_1d(seeds).shape[0], 1))
    raise UnsupportedKindError(f"unknown sampler {kind!r}")


class SamplingSchedule:
    """Stateful index stream of one trial.

    Parameters
    ----------
    kind : {'uniform', 'reshuffle', 'cyclic'}
    epoch_length : int
        Number of samples N; one epoch is N draws.
    seed : int
    """

    def __init__(self, kind, epoch_length, seed=0):
        self.kind = _check_kind(kind)
        self.epoch_length = int(epoch_length)
        if self.epoch_length < 1:
            raise ValueError("epoch_length must be positive")
        self.seed = int(seed)
        self.epoch = 1
        self.position = 0
        self._order = None

    @property
    def cursor(self):
        """(epoch, position) of the last emitted draw; position 0 before the first."""
        return self.epoch, self.position

    def clone(self, seed):
        return SamplingSchedule(self.kind, self.epoch_length, seed)

    def epoch_order(self, k):
        """1-based sample order of epoch ``k`` (any kind)."""
        s = np.array([self.seed & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64)
        return index_batch(self.kind, s, k, self.epoch_length)[0] + 1

    def epoch_permutation(self, k):
        if self.kind == "uniform":
            raise UnsupportedKindError("uniform sampling has no epoch permutation")
        if k < 1:
            raise ValueError("epochs are numbered from 1")
        return self.epoch_order(k)

    def next_index(self):
        """Advance by one draw and return ``(index, epoch, position)``."""
        if self.position == self.epoch_length:
            self.epoch += 1
            self.position = 0
        if self.position == 0:
            self._order = self.epoch_order(self.epoch)
        self.position += 1
        return int(self._order[self.position - 1]), self.epoch, self.position

    def __iter__(self):
        return self

    def __next__(self):
        return self.next_index()


def next_index(schedule):
    return schedule.next_index()


def epoch_permutation(schedule, k):
    return schedule.epoch_permutation(k)


def conditional_distribution(kind, prefix, N):
    """Law of the next index given the indices already drawn this epoch.

    Returns a length-N vector whose entry ``n-1`` is the probability of
    drawing sample ``n``.  Without replacement the mass ``1/(N-i)`` sits on
    the indices not in the prefix; with uniform sampling it is ``1/N``
    everywhere; cyclic order is deterministic.
    """
    _check_kind(kind)
    prefix = [int(p) for p in prefix]
    if any(not 1 <= p <= N for p in prefix):
        raise ValueError("prefix entries must lie in 1..N")
    p = np.zeros(N)
    if kind == "uniform":
        # draws with replacement: any history is legal
        p[:] = 1.0 / N
        return p
    if len(set(prefix)) != len(prefix):
        raise ValueError("prefix has duplicate entries")
    if len(prefix) >= N:
        raise ValueError("prefix must be shorter than N")
    if kind == "cyclic":
        if prefix != list(range(1, len(prefix) + 1)):
            raise ValueError("prefix is not a cyclic prefix")
        p[len(prefix)] = 1.0
    else:
        p[:] = 1.0 / (N - len(prefix))
        p[np.array(prefix, dtype=int) - 1] = 0.0
    return p
