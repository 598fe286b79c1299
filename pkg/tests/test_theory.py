import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rrsgd import theory
from rrsgd.eigen import jacobi_eigh
from rrsgd.model import (LogisticModel, QuadraticModel, random_orthonormal, solve_minimizer,
                         synth_logistic_dataset, synth_quadratic_dataset)
from rrsgd.theory import (ConditioningError, StepSizeConditionError, TheoryInputs, m_rr_factor,
                          mismatch_bound, msd_infinite_horizon, msd_periter_hyperbolic,
                          msd_rr_hyperbolic, msd_rr_longterm, msd_rr_periter_bound,
                          msd_rr_periter_profile, msd_uniform, noise_cov_prime,
                          noise_cov_prime_partial, quadratic_closed_form, rate_alpha_theorem1,
                          rate_alpha_theorem2, stability_bound)
from rrsgd.walk import f_coefficient


def scalar(mu, N, h=1.0, r=1.0, **kw):
    return TheoryInputs(H=[[h]], R_s_star=[[r]], mu=mu, N=N, **kw)


def random_pair(M, seed, lam=(0.5, 3.0)):
    rng = np.random.default_rng(seed)
    Q = random_orthonormal(M, seed)
    H = (Q * rng.uniform(*lam, size=M)) @ Q.T
    G = rng.standard_normal((M, M))
    return H, G @ G.T / M


def brute_cov_prime(H, R, mu, N, n=None):
    n = N if n is None else n
    B = np.eye(H.shape[0]) - mu * H
    P = np.eye(H.shape[0])
    S1 = np.zeros_like(H)
    S2 = np.zeros_like(H)
    for _ in range(n):
        S1 += P
        S2 += P @ R @ P
        P = P @ B
    return (N * S2 - S1 @ R @ S1) / (N - 1)


# eigendecomposition

@pytest.mark.parametrize("M", [1, 2, 5, 10, 20])
def test_jacobi_matches_eigh(M):
    H, _ = random_pair(M, M)
    f = jacobi_eigh(H)
    assert np.allclose(f.Lambda, np.linalg.eigvalsh(H), atol=1e-12)
    assert np.linalg.norm(f.reconstruct() - H) < 1e-10 * np.linalg.norm(H)
    assert np.allclose(f.U.T @ f.U, np.eye(M), atol=1e-12)


def test_jacobi_rejects_asymmetric():
    with pytest.raises(ValueError):
        jacobi_eigh(np.array([[1.0, 2.0], [0.0, 1.0]]))


# inputs

def test_inputs_validation():
    with pytest.raises(ValueError):
        scalar(0.1, 1)
    with pytest.raises(ValueError):
        scalar(0.0, 3)
    with pytest.raises(ValueError):
        TheoryInputs(H=[[-1.0]], R_s_star=[[1.0]], mu=0.1, N=3)
    i = scalar(0.1, 3, h=2.0, r=3.0)
    assert (i.nu, i.delta, i.K) == (2.0, 2.0, 3.0)


# noise covariance

def test_cov_prime_scalar_hand_value():
    R = noise_cov_prime(scalar(0.1, 3))
    assert R[0, 0] == pytest.approx(0.0271, abs=1e-12)
    assert R[0, 0] == pytest.approx(f_coefficient(3, 3, 0.9), abs=1e-14)


def test_cov_prime_vanishes_without_curvature():
    R = noise_cov_prime(scalar(0.1, 2, h=1e-12))
    assert abs(R[0, 0]) < 1e-12


@pytest.mark.parametrize("N,mu,h", [(5, 0.05, 1.0), (20, 0.01, 2.5), (100, 1e-3, 0.3)])
def test_cov_prime_scalar_matches_walk(N, mu, h):
    ins = scalar(mu, N, h=h, r=1.7)
    for i in (1, N // 2, N):
        assert noise_cov_prime_partial(ins, i)[0, 0] == pytest.approx(
            1.7 * f_coefficient(i, N, 1 - mu * h), rel=1e-10)


def test_cov_prime_matrix_matches_direct_sums():
    H, R = random_pair(4, 3)
    ins = TheoryInputs(H=H, R_s_star=R, mu=0.02, N=30)
    for i in (1, 7, 30):
        assert np.allclose(noise_cov_prime_partial(ins, i), brute_cov_prime(H, R, 0.02, 30, i),
                           atol=1e-12)
    assert np.allclose(noise_cov_prime_partial(ins, 1), R, atol=1e-12)
    assert np.allclose(noise_cov_prime_partial(ins, 30), noise_cov_prime(ins))
    with pytest.raises(ValueError):
        noise_cov_prime_partial(ins, 31)


def test_cov_prime_psd():
    H, R = random_pair(5, 9)
    C = noise_cov_prime(TheoryInputs(H=H, R_s_star=R, mu=0.05, N=10))
    assert np.linalg.eigvalsh(C)[0] >= -1e-14


def test_cov_prime_no_cancellation_at_tiny_step():
    # the direct sums lose every digit here; the stable kernel keeps the leading term
    ins = scalar(1e-7, 4)
    expect = f_coefficient(4, 4, 1 - 1e-7)
    assert noise_cov_prime(ins)[0, 0] == pytest.approx(expect, rel=1e-6)
    assert 0 < noise_cov_prime(ins)[0, 0] < 1e-12


# long-term MSD

def test_longterm_scalar_hand_value():
    assert msd_rr_longterm(scalar(0.1, 2)) == pytest.approx(1e-4 / 0.3439, rel=1e-12)
    assert quadratic_closed_form(0.1, 2, 1.0) == pytest.approx(2.908e-4, abs=1e-7)


@pytest.mark.parametrize("mu,N", [(0.1, 2), (0.02, 50), (1e-3, 25), (0.3, 7), (1e-4, 1000)])
def test_longterm_matches_quadratic_closed_form(mu, N):
    ins = scalar(mu, N, r=2.5)
    assert msd_rr_longterm(ins) == pytest.approx(quadratic_closed_form(mu, N, 2.5), rel=1e-10)


def test_longterm_orthonormal_quadratic_model():
    A = random_orthonormal(3, seed=4)
    m = QuadraticModel(A, synth_quadratic_dataset(40, 3, seed=1))
    w = solve_minimizer(m).w_star
    ins = TheoryInputs.from_model(m, w, 0.01)
    assert np.allclose(ins.H, np.eye(3), atol=1e-12)
    assert msd_rr_longterm(ins) == pytest.approx(quadratic_closed_form(0.01, 40, ins.K), rel=1e-10)


def test_longterm_cubic_regime():
    a = msd_rr_longterm(scalar(1e-4, 10))
    b = msd_rr_longterm(scalar(5e-5, 10))
    assert a / b == pytest.approx(8.0, rel=1e-3)


def test_longterm_requires_small_step():
    with pytest.raises(ConditioningError):
        msd_rr_longterm(scalar(1.0, 4))


def test_longterm_matches_brute_matrix():
    H, R = random_pair(4, 11)
    mu, N = 0.03, 15
    ins = TheoryInputs(H=H, R_s_star=R, mu=mu, N=N)
    B = np.eye(4) - mu * H
    brute = mu ** 2 * np.trace(np.linalg.solve(np.eye(4) - np.linalg.matrix_power(B, 2 * N),
                                               brute_cov_prime(H, R, mu, N)))
    assert msd_rr_longterm(ins) == pytest.approx(brute, rel=1e-10)


def test_uniform_values():
    assert msd_uniform(scalar(0.1, 5)) == pytest.approx(0.05)
    m = QuadraticModel(1.0, [[-1.0], [1.0]])
    ins = TheoryInputs.from_model(m, solve_minimizer(m).w_star, 0.1)
    assert msd_uniform(ins) == pytest.approx(0.05)
    assert msd_infinite_horizon(ins) == msd_uniform(ins)


def test_basis_invariance():
    H, R = random_pair(5, 2)
    Q = random_orthonormal(5, seed=99)
    a = TheoryInputs(H=H, R_s_star=R, mu=0.01, N=40)
    b = TheoryInputs(H=Q @ H @ Q.T, R_s_star=Q @ R @ Q.T, mu=0.01, N=40)
    for f in (msd_rr_longterm, msd_uniform, msd_rr_hyperbolic):
        assert f(a) == pytest.approx(f(b), rel=1e-12)
    assert np.allclose(msd_rr_periter_profile(a), msd_rr_periter_profile(b), rtol=1e-12)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10 ** 6), M=st.integers(1, 5), N=st.integers(2, 200),
       logmu=st.floats(-4, -1.5))
def test_ordering_and_bounds(seed, M, N, logmu):
    H, R = random_pair(M, seed)
    ins = TheoryInputs(H=H, R_s_star=R, mu=10 ** logmu, N=N)
    lt, us = msd_rr_longterm(ins), msd_uniform(ins)
    assert 0 < lt < us
    prof = msd_rr_periter_profile(ins)
    assert np.all(prof >= lt * (1 - 1e-12))
    hyp = msd_rr_hyperbolic(ins)
    for i in (0, N // 3, N):
        assert msd_periter_hyperbolic(ins, i) >= hyp * (1 - 1e-12)


def test_infinite_horizon_limit():
    ins = scalar(0.05, 2000)
    assert msd_rr_longterm(ins) == pytest.approx(msd_infinite_horizon(ins), rel=0.05)
    ratios = [msd_rr_longterm(scalar(0.01, N)) / msd_uniform(scalar(0.01, N))
              for N in (10, 100, 1000, 10000)]
    assert np.all(np.diff(ratios) > 0) and ratios[-1] < 1


@pytest.mark.parametrize("lam,ok", [(1.0, False), (2.5, True)])
def test_infinite_horizon_ratio_depends_on_curvature(lam, ok):
    # at mu N = 10 the ratio is about 1 - 2 / (mu N lambda): above 0.9 only once lambda >= 2
    ins = TheoryInputs([[lam]], [[1.0]], 1e-3, 10000)
    r = msd_rr_longterm(ins) / msd_uniform(ins)
    assert r == pytest.approx(1 - 2 / (10 * lam), rel=5e-3)
    assert (r > 0.9) == ok


# per-iteration bound

def test_periter_bound_endpoints():
    ins = scalar(0.05, 20)
    assert msd_rr_periter_bound(ins, 0) == msd_rr_longterm(ins)
    prof = msd_rr_periter_profile(ins)
    for i in range(21):
        assert prof[i] == pytest.approx(msd_rr_periter_bound(ins, i), rel=1e-12)
    assert prof[10] > prof[20]
    eta, lt, lti = theory.msd_rr_periter_terms(ins, 7)
    assert eta * lt + (1 - eta) * lti == pytest.approx(prof[7], rel=1e-12)


def test_periter_bound_precondition():
    with pytest.raises(StepSizeConditionError):
        msd_rr_periter_bound(scalar(0.5, 10, h=4.0), 3)
    with pytest.raises(ValueError):
        msd_rr_periter_bound(scalar(0.01, 10), 11)


def test_periter_profile_peaks_inside():
    for muN in (0.5, 1.0, 2.0, 5.0):
        N = 40
        prof = msd_rr_periter_profile(scalar(muN / N, N))[1:]
        peak = int(np.argmax(prof)) + 1
        assert 1 < peak < N


# hyperbolic forms

def test_m_rr_limits():
    assert m_rr_factor(1.0, 1000) == pytest.approx(1000 / 999 * (1 - 2 / 1000), rel=1e-12)
    assert m_rr_factor(0.01, 10) == pytest.approx(10 / 9 * 0.1 ** 2 / 12, rel=1e-3)
    for mu, N in ((1e-4, 2), (1e-2, 50), (1.0, 100)):
        assert 0 < m_rr_factor(mu, N) < N / (N - 1)


def test_m_rr_tiny_argument_is_accurate():
    x = 1e-6
    assert m_rr_factor(x / 10, 10) == pytest.approx(10 / 9 * x ** 2 / 12, rel=1e-9)


def test_hyperbolic_gap_shrinks_with_mu_at_fixed_muN():
    gaps = []
    for N in (10, 100, 1000):
        ins = scalar(1.0 / N, N)
        gaps.append(abs(msd_rr_hyperbolic(ins) / msd_rr_longterm(ins) - 1))
    assert gaps[0] > gaps[1] > gaps[2]


def test_hyperbolic_small_N_limit():
    # as mu N -> 0 the hyperbolic/exact ratio tends to N^2 / (N^2 - 1)
    for N in (2, 3, 5, 10):
        ins = scalar(1e-7, N)
        assert msd_rr_hyperbolic(ins) / msd_rr_longterm(ins) == pytest.approx(N * N / (N * N - 1.0),
                                                                              rel=1e-4)


def test_quadratic_tanh_form():
    for N in (10, 25, 100, 1000):
        for mu in (1e-3, 1e-4):
            assert quadratic_closed_form(mu, N, 1.0, "tanh") == pytest.approx(
                quadratic_closed_form(mu, N, 1.0), rel=0.01)
    # at mu = 0.01 the exponential approximation costs up to about 1.4%
    for N in (10, 25, 50, 100, 1000):
        assert quadratic_closed_form(0.01, N, 1.0, "tanh") == pytest.approx(
            quadratic_closed_form(0.01, N, 1.0), rel=0.015)
    assert quadratic_closed_form(0.01, 50, 1.0, "tanh") == pytest.approx(
        msd_rr_hyperbolic(scalar(0.01, 50)), rel=1e-12)
    with pytest.raises(ValueError):
        quadratic_closed_form(1.5, 10, 1.0)


def test_quadratic_ratio_to_uniform_is_m_rr():
    mu, N = 1e-3, 200
    ratio = quadratic_closed_form(mu, N, 1.0) / msd_uniform(scalar(mu, N))
    assert ratio == pytest.approx(m_rr_factor(mu, N), rel=0.01)


def test_periter_hyperbolic_quadratic_formula():
    mu, N, var = 0.02, 50, 1.3
    ins = scalar(mu, N, r=var)
    for i in (0, 10, 25, 50):
        m_i = N / (N - 1) * (1 - 2 / (mu * N) * np.tanh(mu * i / 2))
        direct = (np.exp(-2 * mu * i) * quadratic_closed_form(mu, N, var, "tanh")
                  + (1 - np.exp(-2 * mu * i)) * mu / 2 * m_i * var)
        assert msd_periter_hyperbolic(ins, i) == pytest.approx(direct, rel=1e-12)
    assert msd_periter_hyperbolic(ins, N) == pytest.approx(msd_rr_hyperbolic(ins), rel=1e-12)


def test_periter_hyperbolic_rises_then_falls():
    N = 60
    ins = scalar(1.0 / N, N)
    prof = np.array([msd_periter_hyperbolic(ins, i) for i in range(1, N + 1)])
    peak = int(np.argmax(prof)) + 1
    assert N / 3 <= peak <= 2 * N / 3


# stability quantities

def test_stability_bound_scaling_and_rates():
    ins = scalar(1e-3, 10, h=1.0, r=2.0, nu=0.5, delta=2.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        b1 = stability_bound(ins)
        b2 = stability_bound(ins.with_(mu=2e-3))
        assert b1 == pytest.approx(4 * 1e-6 * 4 * 100 * 2 / 0.25)
        assert b2 / b1 == pytest.approx(4.0)
        assert rate_alpha_theorem1(ins) == pytest.approx(1 - 1e-3 * 0.5 * 10 / 2)
        assert mismatch_bound(ins) / b1 == pytest.approx(1 / 9)
    a2 = rate_alpha_theorem2(scalar(1e-5, 100, h=0.7))
    assert a2 == pytest.approx(1 - 2 * 1e-5 * 0.7 * 100, rel=1e-4)
    assert 0 < a2 < 1


def test_stability_bound_warns_outside_condition():
    with pytest.warns(UserWarning):
        stability_bound(scalar(0.1, 10))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        stability_bound(scalar(1e-3, 10, nu=1.0, delta=1.0))


def test_predict_payload():
    m = LogisticModel(synth_logistic_dataset(25, 5, seed=2), rho=0.1)
    w = solve_minimizer(m).w_star
    p = theory.predict(TheoryInputs.from_model(m, w, 1e-3))
    d = p.as_dict()
    for key in ("msd_rr_lt", "msd_rr_hyperbolic", "msd_uniform", "m_rr", "per_iter_bound",
                "stability_bound", "mismatch_bound", "alpha1", "alpha2"):
        assert key in d
    assert len(d["per_iter_bound"]) == 26
    assert 0 < d["m_rr"] < 25 / 24
    assert any("not guaranteed" in s for s in d["warnings"])


def test_local_nu_option():
    m = LogisticModel(synth_logistic_dataset(25, 5, seed=2), rho=0.1)
    w = solve_minimizer(m).w_star
    g = TheoryInputs.from_model(m, w, 1e-3)
    loc = TheoryInputs.from_model(m, w, 1e-3, nu="local")
    assert g.nu == pytest.approx(0.2)
    assert loc.nu >= g.nu
    assert msd_rr_periter_bound(loc, 10) <= msd_rr_periter_bound(g, 10)
