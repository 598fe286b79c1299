"""MSD against step size: dB per decade for reshuffling and uniform sampling.

At N=25 the reshuffling MSD drops about 20 dB per decade of mu and uniform
sampling about 10.  The long-term predictor shows the move towards 30 dB per
decade as N grows.  ``--large`` adds the slow N=1000 simulation.

    python demos/slope_sweep.py [--trials 100] [--large]
"""
import argparse

import numpy as np

from rrsgd import (LogisticModel, MsdCurve, RunConfig, StepSizeRule, TheoryInputs, WindowSpec,
                   msd_rr_longterm, noise_stats, run_trials, slope_fit, solve_minimizer,
                   steady_state_msd, synth_logistic_dataset)

MUS = (3e-4, 1e-3, 3e-3, 1e-2)


def simulated_slopes(N, trials, min_epochs=200):
    model = LogisticModel(synth_logistic_dataset(N, 10, seed=3), rho=0.1)
    w_star = solve_minimizer(model).w_star
    lam = noise_stats(model, w_star).nu_local
    pts = {"reshuffle": [], "uniform": []}
    for mu in MUS:
        # two windows of at least three relaxation times of the slowest mode
        epochs = 2 * max(min_epochs, int(np.ceil(3.0 / (mu * lam * N))))
        for sampler in pts:
            cfg = RunConfig(model, sampler, StepSizeRule.constant(mu), epochs, w_star, w0=w_star)
            curve = MsdCurve.from_ensemble(run_trials(cfg, trials, base_seed=7))
            v, _ = steady_state_msd(curve, WindowSpec(0.5, 50))
            pts[sampler].append((mu, v))
            print(f"  N={N} mu={mu:.0e} {sampler:9s} {10 * np.log10(v):8.2f} dB")
    return {k: slope_fit(v).slope_db_per_decade for k, v in pts.items()}


def predictor_slope(N):
    model = LogisticModel(synth_logistic_dataset(N, 10, seed=3), rho=0.1)
    w_star = solve_minimizer(model).w_star
    pts = [(mu, msd_rr_longterm(TheoryInputs.from_model(model, w_star, mu))) for mu in MUS]
    return slope_fit(pts).slope_db_per_decade


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=100)
    ap.add_argument("--large", action="store_true", help="also simulate N=1000 (slow)")
    args = ap.parse_args()

    s = simulated_slopes(25, args.trials)
    print(f"N=25 simulated: RR {s['reshuffle']:.1f} dB/decade, uniform {s['uniform']:.1f}")
    for N in (25, 200, 1000):
        print(f"N={N} long-term predictor: {predictor_slope(N):.1f} dB/decade")
    if args.large:
        s = simulated_slopes(1000, max(10, args.trials // 5), min_epochs=40)
        print(f"N=1000 simulated: RR {s['reshuffle']:.1f} dB/decade, uniform {s['uniform']:.1f}")


if __name__ == "__main__":
    main()
