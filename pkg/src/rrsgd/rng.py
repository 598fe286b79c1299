"""Counter-based random streams.

Every random quantity in a simulation is addressed by a tuple of integer keys
(trial seed, epoch, purpose tag) plus a counter.  The bits are produced by the
SplitMix64 finalizer applied to ``key + counter * golden``, so any epoch of any
trial can be regenerated without replaying earlier ones, and the whole thing
vectorizes over trials in numpy.  Output is identical across platforms because
only wrapping uint64 arithmetic is involved.

Dataset generation, which needs Gaussians, goes through numpy's Philox
generator instead (see :func:`philox`).
"""
import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MASK = (1 << 64) - 1

# purpose tags mixed into the key so different draws never share a stream
TAG_PERMUTATION = 1
TAG_UNIFORM = 2
TAG_TRIAL = 3


def _mix(z):
    z = np.asarray(z, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def _as_u64(x):
    if isinstance(x, (int, np.integer)):
        return np.uint64(int(x) & _MASK)
    x = np.asarray(x)
    if x.dtype == np.uint64:
        return x
    if x.dtype == object:
        return np.array([int(v) & _MASK for v in x.ravel()], dtype=np.uint64).reshape(x.shape)
    return x.astype(np.int64).astype(np.uint64)


def stream_key(seed, *keys):
    """Hash ``seed`` (scalar or array) and integer ``keys`` into 64-bit stream keys."""
    with np.errstate(over="ignore"):
        h = _mix(_as_u64(seed) + _GOLDEN)
        for k in keys:
            h = _mix(h ^ _mix(_as_u64(k) + _GOLDEN))
    return h


def bits(key, counters):
    """Raw 64-bit outputs for ``key[..., None]`` at ``counters``.

    ``key`` has shape ``(T,)`` (or is a scalar) and ``counters`` shape ``(C,)``;
    the result has shape ``(T, C)`` (or ``(C,)``).
    """
    key = np.asarray(key, dtype=np.uint64)
    c = np.asarray(counters, dtype=np.uint64) + np.uint64(1)
    with np.errstate(over="ignore"):
        return _mix(key[..., None] + c * _GOLDEN)


def uniforms(key, counters):
    """Doubles in [0, 1) with 53 random bits each."""
    return (bits(key, counters) >> np.uint64(11)).astype(np.float64) * (2.0 ** -53)


def seed_array(seeds):
    """1-D uint64 array of seeds given Python ints, numpy ints or arrays.

    Python ints are converted one by one; numpy would otherwise infer
    float64 for lists mixing values above and below 2**63.
    """
    if isinstance(seeds, np.ndarray) and seeds.dtype == np.uint64:
        return np.atleast_1d(seeds)
    if isinstance(seeds, (int, np.integer)):
        seeds = [seeds]
    return np.array([int(s) & _MASK for s in seeds], dtype=np.uint64)


def derive_seed(base_seed, index):
    """Independent integer seed for trial ``index`` of a run seeded with ``base_seed``."""
    return int(stream_key(int(base_seed), TAG_TRIAL, int(index)))


def philox(seed):
    """numpy Generator on a Philox bit generator keyed by ``seed``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed) & _MASK)))
