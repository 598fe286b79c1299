"""Reductions from simulated ensembles to steady-state MSD, slopes and profiles."""
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .engine import _epoch_starts


@dataclass(frozen=True)
class WindowSpec:
    """Trailing block of epochs: ``max(fraction * epochs, minimum)`` or exactly ``epochs``."""

    fraction: float = 0.25
    minimum: int = 50
    epochs: Optional[int] = None

    def length(self, available):
        if self.epochs is not None:
            n = int(self.epochs)
        else:
            n = max(int(round(self.fraction * available)), int(self.minimum))
        if n > available:
            raise ValueError(f"steady window of {n} epochs exceeds the {available} recorded")
        if n < 1:
            raise ValueError("empty steady window")
        return n

    def describe(self):
        if self.epochs is not None:
            return {"epochs": int(self.epochs)}
        return {"fraction": self.fraction, "minimum": self.minimum}


def _window(window):
    if window is None:
        return WindowSpec()
    if isinstance(window, WindowSpec):
        return window
    return WindowSpec(epochs=int(window))


@dataclass
class MsdCurve:
    """Trial-averaged squared deviation.

    ``per_trial`` keeps the raw ``(T, ...)`` array so steady-state errors can
    be computed from per-trial window averages.
    """

    mean_sq_dev: np.ndarray
    stderr: np.ndarray
    trials: int
    granularity: str
    per_trial: Optional[np.ndarray] = None

    @classmethod
    def from_ensemble(cls, ensemble):
        return cls.from_samples(ensemble.sq_dev, ensemble.granularity)

    @classmethod
    def from_samples(cls, samples, granularity="epoch"):
        x = np.asarray(samples, dtype=float)
        T = x.shape[0]
        mean = x.mean(axis=0)
        se = x.std(axis=0, ddof=1) / np.sqrt(T) if T > 1 else np.zeros_like(mean)
        return cls(mean, se, T, granularity, x)

    @property
    def msd_db(self):
        with np.errstate(divide="ignore"):
            return 10.0 * np.log10(self.mean_sq_dev)

    def epoch_starts(self):
        return _epoch_starts(self.mean_sq_dev, self.granularity)

    def rows(self):
        """``(epoch, position, mean, stderr, msd_db)`` in recording order."""
        db = self.msd_db
        if self.granularity == "epoch":
            for k in range(self.mean_sq_dev.shape[0]):
                yield k + 1, 0, self.mean_sq_dev[k], self.stderr[k], db[k]
        else:
            E, P = self.mean_sq_dev.shape
            for k in range(E):
                for i in range(P):
                    yield k + 1, i, self.mean_sq_dev[k, i], self.stderr[k, i], db[k, i]


def steady_state_msd(curve, window=None):
    """Average epoch-start MSD over the trailing window.

    Returns ``(value, stderr)``; the error is the spread of per-trial window
    averages across trials.
    """
    spec = _window(window)
    if curve.per_trial is not None:
        starts = _epoch_starts(curve.per_trial, curve.granularity)
        n = spec.length(starts.shape[1])
        per = starts[:, -n:].mean(axis=1)
        value = float(per.mean())
        se = float(per.std(ddof=1) / np.sqrt(per.size)) if per.size > 1 else 0.0
        return value, se
    starts = curve.epoch_starts()
    se_starts = _epoch_starts(curve.stderr, curve.granularity)
    n = spec.length(starts.shape[0])
    # without per-trial data assume independent epochs
    return float(starts[-n:].mean()), float(np.sqrt(np.sum(se_starts[-n:] ** 2)) / n)


@dataclass(frozen=True)
class SlopeFit:
    slope_db_per_decade: float
    intercept: float
    r_squared: float
    points: tuple

    def as_dict(self):
        return {"slope_db_per_decade": self.slope_db_per_decade, "intercept": self.intercept,
                "r_squared": self.r_squared, "points": [list(p) for p in self.points]}


def _linfit(x, y):
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum(resid ** 2) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), float(min(max(r2, 0.0), 1.0))


def slope_fit(points):
    """Least-squares slope of ``10 log10(msd)`` against ``log10(mu)`` in dB/decade."""
    pts = [(float(m), float(v)) for m, v in points]
    mus = np.array([p[0] for p in pts])
    msd = np.array([p[1] for p in pts])
    if len(set(mus.tolist())) < 3:
        raise ValueError("need at least 3 distinct step sizes")
    if np.any(mus <= 0):
        raise ValueError("step sizes must be positive")
    if np.any(msd <= 0):
        raise ValueError("msd values must be positive")
    slope, icpt, r2 = _linfit(np.log10(mus), 10.0 * np.log10(msd))
    return SlopeFit(slope, icpt, r2, tuple(pts))


def periodicity_profile(curve, N=None, window=None):
    """Steady within-epoch MSD profile over positions ``1..N``.

    Position ``n`` is the iterate after ``n`` steps of an epoch (position
    ``N`` is the next epoch's start).  The profile is normalized by its
    position-1 value.  ``curve`` may also be a plain length-N sequence
    (e.g. a theory profile), which is used as-is.

    Returns ``(profile, peak_position)``; ties go to the smallest position.
    """
    if isinstance(curve, MsdCurve):
        if curve.granularity != "iterate":
            raise ValueError("periodicity needs every-iterate granularity")
        data = curve.mean_sq_dev
        n = _window(window).length(data.shape[0])
        values = data[-n:, 1:].mean(axis=0)
        if N is not None and values.shape[0] != N:
            raise ValueError("N does not match the recorded epoch length")
    else:
        values = np.asarray(curve, dtype=float)
        if N is not None and values.shape[0] != N:
            raise ValueError("profile length differs from N")
    profile = values / values[0]
    return profile, int(np.argmax(profile)) + 1


def periodicity_stats(curve, window=None):
    """Profile plus its relative standard error from per-trial window averages."""
    data = curve.per_trial
    n = _window(window).length(data.shape[1])
    per = data[:, -n:, 1:].mean(axis=1)  # (T, N)
    mean = per.mean(axis=0)
    rel_se = per.std(axis=0, ddof=1) / np.sqrt(per.shape[0]) / mean
    return mean / mean[0], rel_se


def decay_rate_fit(curve, iterations=None):
    """Slope of ``log10(msd)`` against ``log10(iteration)`` over the final decade.

    ``curve`` is an every-iterate :class:`MsdCurve` (iteration ``t`` is the
    global step count) or a plain array paired with ``iterations``.
    """
    if isinstance(curve, MsdCurve):
        if curve.granularity != "iterate":
            raise ValueError("decay fit needs every-iterate granularity")
        m = curve.mean_sq_dev
        values = np.concatenate([m[:, :-1].ravel(), m[-1:, -1]])
        iterations = np.arange(values.size, dtype=float)
    else:
        values = np.asarray(curve, dtype=float)
        iterations = np.arange(1, values.size + 1, dtype=float) if iterations is None \
            else np.asarray(iterations, dtype=float)
    last = iterations.max()
    if last < 10 * max(iterations[iterations > 0].min(), 1.0):
        raise ValueError("fewer than one decade of iterations")
    sel = (iterations >= last / 10.0) & (values > 0)
    slope, _, _ = _linfit(np.log10(iterations[sel]), np.log10(values[sel]))
    return slope
