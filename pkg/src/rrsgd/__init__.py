"""SGD under random reshuffling: simulation engine and steady-state MSD theory."""
from .analysis import (MsdCurve, SlopeFit, WindowSpec, decay_rate_fit, periodicity_profile,
                       periodicity_stats, slope_fit, steady_state_msd)
from .eigen import EigenFactorization, jacobi_eigh
from .engine import (CoupledRun, DivergenceError, Ensemble, RunConfig, StepSizeError,
                     StepSizeRule, Trajectory, run_longterm_model, run_sgd, run_trials,
                     simulate)
from .model import (Dataset, InvalidModelError, LogisticModel, NonConvergenceError,
                    QuadraticModel, StrongConvexityError, logistic_model, noise_stats,
                    quadratic_model, random_orthonormal, solve_minimizer,
                    synth_logistic_dataset, synth_quadratic_dataset)
from .sampling import (SamplingSchedule, UnsupportedKindError, conditional_distribution,
                       epoch_permutation, next_index)
from .theory import (Prediction, TheoryInputs, m_rr_factor, mismatch_bound, msd_infinite_horizon,
                     msd_periter_hyperbolic, msd_rr_hyperbolic, msd_rr_longterm,
                     msd_rr_periter_bound, msd_rr_periter_profile, msd_uniform,
                     noise_cov_prime, predict, quadratic_closed_form, rate_alpha_theorem1,
                     rate_alpha_theorem2, stability_bound)
from .walk import (WalkSet, F_bruteforce, F_formula, F_montecarlo, bell_profile, f_bruteforce,
                   f_formula, f_montecarlo)

__version__ = "0.1.0"
