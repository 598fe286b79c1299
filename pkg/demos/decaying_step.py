"""Decaying step size mu(i) = c / (i + 1): the MSD falls like 1 / i^2 under reshuffling.

    python demos/decaying_step.py [--c 8] [--epochs 2000] [--trials 100]
"""
import argparse

import numpy as np

from rrsgd import (LogisticModel, MsdCurve, RunConfig, StepSizeRule, decay_rate_fit,
                   run_trials, solve_minimizer, synth_logistic_dataset)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--c", type=float, default=8.0)
    ap.add_argument("--epochs", type=int, default=2000)
    ap.add_argument("--trials", type=int, default=100)
    args = ap.parse_args()

    model = LogisticModel(synth_logistic_dataset(25, 10, seed=3), rho=0.1)
    w_star = solve_minimizer(model).w_star
    cfg = RunConfig(model, "reshuffle", StepSizeRule.decaying(args.c), args.epochs, w_star,
                    granularity="iterate")
    curve = MsdCurve.from_ensemble(run_trials(cfg, args.trials, base_seed=8))
    ends = curve.epoch_starts()
    for k in np.unique(np.geomspace(1, args.epochs, 8).astype(int)):
        print(f"iteration {k * 25:>7d}: MSD {ends[k]:.3e}")
    print(f"log-log slope over the final decade: {decay_rate_fit(curve):.3f}")


if __name__ == "__main__":
    main()
