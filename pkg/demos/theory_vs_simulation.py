"""Steady-state predictors against simulation.

For a least-squares problem with orthonormal design the long-term model is
exact, so simulation and predictor agree to within noise.  For logistic
regression the real algorithm carries an extra O(mu^2) mismatch term, which
dominates when mu N is small; the coupled run makes that term visible.
Also prints the infinite-horizon scan msd_rr / msd_uniform against N.

    python demos/theory_vs_simulation.py [--trials 100]
"""
import argparse

import numpy as np

from rrsgd import (LogisticModel, MsdCurve, QuadraticModel, RunConfig, StepSizeRule,
                   TheoryInputs, msd_rr_hyperbolic, msd_rr_longterm, msd_uniform,
                   random_orthonormal, run_longterm_model, run_trials, solve_minimizer,
                   steady_state_msd, synth_logistic_dataset, synth_quadratic_dataset)


def db(x):
    return 10 * np.log10(x)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=100)
    args = ap.parse_args()

    q = QuadraticModel(random_orthonormal(5, seed=6), synth_quadratic_dataset(25, 5, seed=6))
    wq = solve_minimizer(q).w_star
    for mu in (0.005, 0.02, 0.05):
        ins = TheoryInputs.from_model(q, wq, mu)
        cfg = RunConfig(q, "reshuffle", StepSizeRule.constant(mu), 400, wq)
        sim, _ = steady_state_msd(MsdCurve.from_ensemble(run_trials(cfg, args.trials)))
        print(f"quadratic mu={mu:<6} sim {db(sim):7.2f} dB  long-term {db(msd_rr_longterm(ins)):7.2f}"
              f"  tanh {db(msd_rr_hyperbolic(ins)):7.2f}  uniform {db(msd_uniform(ins)):7.2f}")

    m = LogisticModel(synth_logistic_dataset(25, 10, seed=3), rho=0.1)
    w = solve_minimizer(m).w_star
    mu = 1e-3
    run = run_longterm_model(m, np.arange(args.trials), mu, 1600, w, w0=w)
    lt, real, gap = (x[:, -800:].mean() for x in (run.longterm, run.real, run.gap))
    pred = msd_rr_longterm(TheoryInputs.from_model(m, w, mu))
    print(f"logistic N=25 mu={mu}: predictor {db(pred):.2f} dB, long-term model {db(lt):.2f} dB,"
          f" real {db(real):.2f} dB, mismatch {db(gap):.2f} dB")

    print("infinite-horizon scan at mu=1e-3 (ratio msd_rr / msd_uniform):")
    for N in (10, 100, 1000, 10000):
        mN = LogisticModel(synth_logistic_dataset(N, 10, seed=3), rho=0.1)
        ins = TheoryInputs.from_model(mN, solve_minimizer(mN).w_star, 1e-3)
        print(f"  N={N:<6} {msd_rr_longterm(ins) / msd_uniform(ins):.4f}")


if __name__ == "__main__":
    main()
