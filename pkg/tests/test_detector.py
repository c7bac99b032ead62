import numpy as np
import pytest
from scipy import stats

from pmusched.detector import (
    H0,
    H1,
    ConvergenceError,
    MeasurementSet,
    NoiseParams,
    covariance_H,
    decide,
    glrt_statistic,
    glrt_test,
    minimize_profile,
    profile_gradient,
    profile_objective,
    residual_A,
)
from pmusched.network import PowerNetwork, build_incidence, nominal_susceptance
from pmusched.simulation import add_noise, generate_truth

NOMINAL_NOISE = NoiseParams(0.01, 0.01)


@pytest.fixture(scope="module")
def model(net14):
    return build_incidence(net14), nominal_susceptance(net14)


def noisy(D, s, T, rng, noise=NOMINAL_NOISE, shift=None):
    return add_noise(generate_truth(s, D, T, shift, rng), noise, rng)


def test_residual_noiseless_zero(model, rng):
    D, s0 = model
    theta, Z = generate_truth(s0, D, 10, None, rng)
    m = MeasurementSet(Z, theta)
    np.testing.assert_allclose(residual_A(s0, m, D), 0, atol=1e-12)
    np.testing.assert_array_equal(residual_A(np.zeros(20), m, D), Z)


def test_residual_loop_oracle(rng):
    B, K, T = 5, 4, 6
    net = PowerNetwork.from_edges(B, [(1, 2, 0.2), (2, 3, 0.4), (3, 4, 0.1), (4, 5, 0.3)])
    D = build_incidence(net)
    m = MeasurementSet(rng.standard_normal((K, T)), rng.standard_normal((B, T)))
    s = rng.uniform(1, 5, K)
    expected = np.empty((K, T))
    for k, br in enumerate(net.branches):
        for t in range(T):
            dtheta = m.theta_tilde[br.from_bus - 1, t] - m.theta_tilde[br.to_bus - 1, t]
            expected[k, t] = m.z_tilde[k, t] - s[k] * dtheta
    np.testing.assert_allclose(residual_A(s, m, D), expected, rtol=1e-14, atol=1e-14)


def test_covariance_examples(model):
    D1 = np.array([[1.0, -1.0]])
    H = covariance_H([2.0], D1, NoiseParams(0.01, 0.01))
    np.testing.assert_allclose(H, [[0.09]])
    D, s0 = model
    np.testing.assert_allclose(covariance_H(np.zeros(20), D, NOMINAL_NOISE), 0.01 * np.eye(20))
    H = covariance_H(s0, D, NOMINAL_NOISE)
    assert np.linalg.eigvalsh(H).min() >= 0.01 - 1e-12


def test_covariance_quadratic_form(model, rng):
    D, s0 = model
    for _ in range(20):
        s = s0 * rng.uniform(-2, 2, 20)
        H = covariance_H(s, D, NOMINAL_NOISE)
        x = rng.standard_normal(20)
        assert x @ H @ x >= 0.01 * (x @ x) - 1e-10


def test_objective_zero_on_exact_model(model, rng):
    D, s0 = model
    theta, Z = generate_truth(s0, D, 15, None, rng)
    assert profile_objective(s0, MeasurementSet(Z, theta), D, NOMINAL_NOISE) == pytest.approx(0, abs=1e-20)


def test_objective_is_half_trace(model, rng):
    D, s0 = model
    m = noisy(D, s0, 12, rng)
    A = residual_A(s0, m, D)
    H = covariance_H(s0, D, NOMINAL_NOISE)
    direct = 0.5 * np.trace(A.T @ np.linalg.inv(H) @ A)
    assert profile_objective(s0, m, D, NOMINAL_NOISE) == pytest.approx(direct, rel=1e-10)


def central_difference(f, x, h):
    g = np.empty_like(x)
    for k in range(len(x)):
        e = np.zeros_like(x)
        e[k] = h
        g[k] = (f(x + e) - f(x - e)) / (2 * h)
    return g


@pytest.mark.parametrize("seed", range(5))
def test_gradient_finite_differences(model, seed):
    D, s0 = model
    rng = np.random.default_rng(seed)
    m = noisy(D, s0, 20, rng, shift=-0.02)
    for _ in range(10):
        x = s0 * rng.uniform(0.8, 1.2, 20)
        g = profile_gradient(x, m, D, NOMINAL_NOISE)
        fd = central_difference(lambda s: profile_objective(s, m, D, NOMINAL_NOISE), x, 1e-5)
        assert np.linalg.norm(g - fd) / np.linalg.norm(fd) < 1e-5


def test_minimize_recovers_noiseless_truth(model, rng):
    D, s0 = model
    s_true = s0 * 0.97
    theta, Z = generate_truth(s_true, D, 20, None, rng)
    m = MeasurementSet(Z, theta)
    s_hat, f_hat, _ = minimize_profile(m, D, NOMINAL_NOISE, s0)
    np.testing.assert_allclose(s_hat, s_true, rtol=0, atol=1e-6)
    assert f_hat < 1e-9


def test_minimize_tiny_noise(model, rng):
    D, s0 = model
    tiny = NoiseParams(1e-8, 1e-8)
    m = noisy(D, s0, 20, rng, noise=tiny)
    s_hat, _, _ = minimize_profile(m, D, tiny, s0)
    np.testing.assert_allclose(s_hat, s0, rtol=0, atol=1e-3)


def test_minimize_descends(model, rng):
    D, s0 = model
    m = noisy(D, s0 * 0.98, 200, rng)
    s_hat, f_hat, _ = minimize_profile(m, D, NOMINAL_NOISE, s0)
    assert f_hat < profile_objective(s0, m, D, NOMINAL_NOISE)
    g = profile_gradient(s_hat, m, D, NOMINAL_NOISE)
    assert np.linalg.norm(g) <= 1e-6 * max(1.0, abs(f_hat))


def test_iteration_cap(model, rng):
    D, s0 = model
    m = noisy(D, s0 * 0.9, 50, rng)
    with pytest.raises(ConvergenceError) as info:
        minimize_profile(m, D, NOMINAL_NOISE, s0, max_iter=2)
    assert info.value.best.shape == (20,)


def test_statistic_zero_noiseless(model, rng):
    D, s0 = model
    theta, Z = generate_truth(s0, D, 20, None, rng)
    res = glrt_statistic(MeasurementSet(Z, theta), D, NOMINAL_NOISE, s0)
    assert res.statistic == pytest.approx(0, abs=1e-12)
    assert res.dof == 20


def test_statistic_larger_under_change(model):
    D, s0 = model
    rng = np.random.default_rng(7)
    h0 = [glrt_statistic(noisy(D, s0, 200, rng), D, NOMINAL_NOISE, s0).statistic for _ in range(200)]
    h1 = [glrt_statistic(noisy(D, s0, 200, rng, shift=-0.02), D, NOMINAL_NOISE, s0).statistic
          for _ in range(200)]
    assert min(h0) >= -1e-9 and min(h1) >= -1e-9
    res = stats.mannwhitneyu(h1, h0, alternative="greater")
    assert res.pvalue < 1e-6


def test_glrt_test_fields(model, rng):
    D, s0 = model
    res = glrt_test(noisy(D, s0, 20, rng, shift=-0.3), D, NOMINAL_NOISE, s0, alpha=0.05)
    assert res.threshold == pytest.approx(15.705, abs=1e-3)
    assert res.alpha == 0.05
    assert res.decision == (H1 if res.statistic > res.threshold else H0)


def test_decide():
    assert decide(0.0, 1.0) == H0
    assert decide(16.0, 15.0) == H1
    assert decide(15.0, 15.0) == H0


def test_rejects_zero_flow_noise(model, rng):
    D, s0 = model
    m = noisy(D, s0, 5, rng)
    with pytest.raises(ValueError):
        profile_objective(s0, m, D, NoiseParams(0.0, 0.01))
