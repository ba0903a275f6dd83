"""Mixture sampling, moments, parameter recovery, EM baseline, metrics."""

import numpy as np
import pytest
from scipy.optimize import linear_sum_assignment

from momentmix.errors import OrderConflict
from momentmix.gmm import (
    GmmModel,
    SampleSet,
    accuracy,
    choose_t,
    classify,
    covariance_keys,
    em_baseline,
    exact_moments,
    learn,
    learn_from_moments,
    model_from_json,
    model_to_json,
    random_model,
    realify,
    recover_covariances,
    recover_weights,
    refine_params,
    sample_gmm,
    sample_moments,
    univariate_gaussian_moment,
)
from momentmix.tensor_store import omega_keys


def match_error(model, learned):
    """Worst per-component parameter error after optimal matching."""
    r = model.r
    C = np.zeros((r, r))
    for i in range(r):
        for j in range(r):
            C[i, j] = max(
                abs(model.weights[i] - learned.weights[j]),
                np.abs(model.means[i] - learned.means[j]).max(),
                np.abs(model.variances[i] - learned.variances[j]).max(),
            )
    rows, cols = linear_sum_assignment(C)
    return C[rows, cols].max()


def moments_for_learning(model, d, m, r):
    t = choose_t(d, r)
    keys_m = set(omega_keys(d, m))
    for j in range(d):
        keys_m.update(covariance_keys(d, m, j))
    Mm = exact_moments(model, sorted(keys_m))
    Mt = exact_moments(model, omega_keys(d, t))
    return Mm, Mt


def test_sample_gmm_degenerate_weight():
    model = GmmModel(
        weights=np.array([1.0, 0.0]),
        means=np.array([[0.0, 0.0], [5.0, 5.0]]),
        variances=np.ones((2, 2)),
    )
    s = sample_gmm(model, 500, seed=1)
    assert np.all(s.labels == 0)


def test_sample_gmm_zero_variance():
    model = GmmModel(
        weights=np.array([0.5, 0.5]),
        means=np.array([[1.0, 2.0], [3.0, 4.0]]),
        variances=np.zeros((2, 2)),
    )
    s = sample_gmm(model, 200, seed=2)
    assert np.allclose(s.data, model.means[s.labels])


def test_sample_gmm_mean_concentration():
    model = GmmModel(
        weights=np.array([1.0]),
        means=np.array([[0.5, -1.0, 2.0]]),
        variances=np.ones((1, 3)),
    )
    s = sample_gmm(model, 100_000, seed=3)
    assert np.abs(s.data.mean(axis=0) - model.means[0]).max() < 0.03


def test_sample_moments_arithmetic():
    s = SampleSet(data=np.array([[1.0, 2.0], [3.0, 4.0]]))
    ms = sample_moments(s, [(0, 1)])
    assert ms[(0, 1)] == pytest.approx(7.0)
    z = SampleSet(data=np.zeros((4, 3)))
    msz = sample_moments(z, [(0, 1, 2)])
    assert msz[(0, 1, 2)] == 0.0


def test_sample_moments_match_exact_in_the_limit():
    model = random_model(4, 2, seed=5)
    N = 200_000
    s = sample_gmm(model, N, seed=5)
    keys = omega_keys(4, 3)
    est = sample_moments(s, keys)
    exact = exact_moments(model, keys)
    Y = s.data
    for key in keys:
        prods = np.prod(Y[:, list(key)], axis=1)
        bound = 5.0 * prods.std() / np.sqrt(N)
        assert abs(est[key] - exact[key]) <= bound


def test_univariate_moments_closed_forms():
    mu, var = 0.7, 2.3
    s2 = var
    closed = {
        0: 1.0,
        1: mu,
        2: mu**2 + s2,
        3: mu**3 + 3 * mu * s2,
        4: mu**4 + 6 * mu**2 * s2 + 3 * s2**2,
        5: mu**5 + 10 * mu**3 * s2 + 15 * mu * s2**2,
        6: mu**6 + 15 * mu**4 * s2 + 45 * mu**2 * s2**2 + 15 * s2**3,
    }
    for t, want in closed.items():
        assert univariate_gaussian_moment(mu, var, t) == pytest.approx(
            want, rel=1e-12
        )
    assert univariate_gaussian_moment(0.0, 1.0, 4) == pytest.approx(3.0)


def test_exact_moments_values():
    model = GmmModel(
        weights=np.array([1.0]),
        means=np.array([[1.0, 1.0, 1.0]]),
        variances=np.array([[4.0, 1.0, 1.0]]),
    )
    ms = exact_moments(model, [(0, 0, 1), (0, 1, 2)])
    assert ms[(0, 0, 1)] == pytest.approx(5.0)  # (mu^2 + var) * mu
    assert ms[(0, 1, 2)] == pytest.approx(1.0)  # pure mean product
    # repeated-pair entry minus the mean part isolates the variance term
    assert ms[(0, 0, 1)] - 1.0 == pytest.approx(4.0)


def test_covariance_keys():
    keys = covariance_keys(4, 3, 1)
    assert keys == [(0, 1, 1), (1, 1, 2), (1, 1, 3)]
    for k in keys:
        assert sorted(k) == list(k)


def test_realify():
    v = np.array([1.0, -2.0, 0.5])
    assert np.allclose(realify(v.astype(complex), 3), [v])
    # for even order the first root of unity reaching a real vector wins,
    # so i*v comes back negated (the sign is unobservable at this stage)
    assert np.allclose(realify(1j * v, 4), [-v])


def test_realify_minimality():
    rng = np.random.default_rng(8)
    for m in (3, 4, 5):
        for _ in range(100 // 3 + 1):
            q = rng.standard_normal(6) + 1j * rng.standard_normal(6)
            out = realify(q, m)[0]
            chosen = min(
                np.linalg.norm((np.exp(2j * np.pi * t / m) * q).imag)
                for t in range(m)
            )
            # the returned vector is the real part under some eta whose
            # imaginary norm attains the minimum
            attained = [
                t for t in range(m)
                if np.allclose((np.exp(2j * np.pi * t / m) * q).real, out)
            ]
            assert attained
            t = attained[0]
            assert np.linalg.norm(
                (np.exp(2j * np.pi * t / m) * q).imag
            ) == pytest.approx(chosen)


def test_choose_t():
    assert choose_t(8, 3) == 1
    assert choose_t(8, 9) == 2
    assert choose_t(4, 5) == 2


def test_recover_weights_round_trip():
    omega = np.array([0.25, 0.75])
    mus = np.array([[1.0, 2.0, -1.0], [0.5, -0.5, 2.0]])
    m, t = 3, 1
    qs = omega[:, None] ** (1 / m) * mus
    model = GmmModel(weights=omega, means=mus, variances=np.zeros((2, 3)))
    Mt = exact_moments(model, omega_keys(3, t))
    w, mu_hat = recover_weights(qs, Mt, m, t)
    assert np.allclose(np.sort(w), [0.25, 0.75], atol=1e-10)
    order = np.argsort(w)
    assert np.allclose(mu_hat[order], mus[np.argsort(omega)], atol=1e-9)


def test_recover_weights_order_conflict():
    with pytest.raises(OrderConflict):
        recover_weights(np.ones((2, 3)), None, m=3, t=3)


def test_refine_params_truth_is_fixed_point():
    model = random_model(5, 2, seed=9)
    Mm, Mt = moments_for_learning(model, 5, 3, 2)
    w, mu = refine_params(model.weights, model.means, Mm, Mt)
    assert np.allclose(w, model.weights, atol=1e-8)
    assert np.allclose(mu, model.means, atol=1e-8)


def test_refine_params_recovers_from_perturbed_start():
    model = random_model(5, 2, seed=10)
    Mm, Mt = moments_for_learning(model, 5, 3, 2)
    rng = np.random.default_rng(0)
    w0 = model.weights + 1e-3 * rng.standard_normal(2)
    w0 = np.abs(w0) / np.abs(w0).sum()
    mu0 = model.means + 1e-3 * rng.standard_normal(model.means.shape)
    w, mu = refine_params(w0, mu0, Mm, Mt)
    assert np.allclose(w, model.weights, atol=1e-6)
    assert np.allclose(mu, model.means, atol=1e-6)


def test_recover_covariances_closed_case():
    model = GmmModel(
        weights=np.array([1.0]),
        means=np.array([[1.0, 1.0, 1.0]]),
        variances=np.array([[4.0, 1.0, 1.0]]),
    )
    keys = set(omega_keys(3, 3))
    for j in range(3):
        keys.update(covariance_keys(3, 3, j))
    Mm = exact_moments(model, sorted(keys))
    qs = model.weights[:, None] ** (1 / 3) * model.means
    var = recover_covariances(Mm, qs, model.weights, model.means)
    assert np.allclose(var, [[4.0, 1.0, 1.0]], atol=1e-9)


def test_recover_covariances_zero_variance():
    model = random_model(6, 2, seed=11)
    model = GmmModel(
        weights=model.weights,
        means=model.means,
        variances=np.zeros_like(model.variances),
    )
    keys = set(omega_keys(6, 3))
    for j in range(6):
        keys.update(covariance_keys(6, 3, j))
    Mm = exact_moments(model, sorted(keys))
    qs = model.weights[:, None] ** (1 / 3) * model.means
    var = recover_covariances(Mm, qs, model.weights, model.means)
    assert np.abs(var).max() <= 1e-9


def test_learn_from_exact_moments():
    model = random_model(8, 3, seed=12)
    Mm, Mt = moments_for_learning(model, 8, 3, 3)
    learned = learn_from_moments(Mm, Mt, 8, 3, seed=1)
    assert match_error(model, learned) <= 1e-6


def test_learn_single_gaussian():
    model = GmmModel(
        weights=np.array([1.0]),
        means=np.array([[1.0, -2.0, 0.5, 3.0, -1.5]]),
        variances=np.array([[1.0, 0.5, 2.0, 1.5, 0.8]]),
    )
    s = sample_gmm(model, 100_000, seed=13)
    learned = learn(s, 1, 3, seed=13)
    assert learned.weights == pytest.approx([1.0])
    assert np.abs(learned.means[0] - model.means[0]).max() < 0.05
    assert np.abs(learned.variances[0] - model.variances[0]).max() < 0.1


def test_em_single_component_closed_form():
    rng = np.random.default_rng(14)
    Y = rng.standard_normal((5000, 3)) + np.array([1.0, 2.0, 3.0])
    s = SampleSet(data=Y)
    model = em_baseline(s, 1, seed=0)
    assert np.allclose(model.means[0], Y.mean(axis=0), atol=1e-9)
    assert np.allclose(model.variances[0], Y.var(axis=0) + 1e-3, atol=1e-9)


def test_em_loglik_monotone():
    model = random_model(4, 2, seed=15)
    s = sample_gmm(model, 2000, seed=15)
    em = em_baseline(s, 2, seed=15)
    hist = np.array(em.meta["loglik_history"])
    assert np.all(np.diff(hist) >= -1e-6 * np.abs(hist[:-1]))


def test_em_separated_clusters():
    model = GmmModel(
        weights=np.array([0.5, 0.5]),
        means=np.array([[0.0, 0.0], [20.0, 20.0]]),
        variances=np.ones((2, 2)),
    )
    s = sample_gmm(model, 5000, seed=16)
    em = em_baseline(s, 2, seed=16)
    assert accuracy(classify(em, s), s.labels) >= 0.99


def test_classify_truth_model():
    model = GmmModel(
        weights=np.array([0.5, 0.5]),
        means=np.array([[0.0, 0.0], [10.0, 10.0]]),
        variances=np.full((2, 2), 1e-6),
    )
    s = sample_gmm(model, 1000, seed=17)
    assert accuracy(classify(model, s), s.labels) == 1.0


def test_accuracy_permutation_invariant():
    model = random_model(4, 3, seed=18)
    s = sample_gmm(model, 2000, seed=18)
    labels = classify(model, s)
    perm = np.array([2, 0, 1])
    permuted = GmmModel(
        weights=model.weights[perm],
        means=model.means[perm],
        variances=model.variances[perm],
    )
    labels_p = classify(permuted, s)
    assert accuracy(labels, s.labels) == pytest.approx(
        accuracy(labels_p, s.labels)
    )


def test_accuracy_single_component():
    labels = np.zeros(100, dtype=int)
    assert accuracy(labels, labels) == 1.0


def test_random_model_valid():
    model = random_model(6, 3, seed=19)
    assert model.weights.sum() == pytest.approx(1.0)
    assert np.all(model.weights > 0)
    assert np.all(model.variances >= 0)


def test_model_json_round_trip():
    model = random_model(5, 2, seed=20)
    back = model_from_json(model_to_json(model))
    assert np.allclose(back.weights, model.weights)
    assert np.allclose(back.means, model.means)
    assert np.allclose(back.variances, model.variances)
