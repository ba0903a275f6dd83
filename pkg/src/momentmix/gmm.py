"""Diagonal Gaussian mixture machinery: sampling, sample and exact
moments, moment-based parameter recovery, an EM baseline, and
classification metrics.

Coordinates are conditionally independent within each component, so every
mixed moment factors into univariate Gaussian moments.  The recovery
pipeline runs the incomplete tensor approximation on the order-m moment
subtensor, phase-corrects the components to real vectors, then solves
nonnegative and simplex-constrained least squares for the weights, means
and variances.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.optimize

from .combinatorics import binomial
from .decomposition import approximate, choose_params
from .errors import CovDesignDegenerate, DegenerateWeight, OrderConflict
from .numerics import nnls, rng_from, simplex_nlls
from .tensor_store import IncompleteSymmetricTensor, omega_keys

TensorKey = tuple[int, ...]

_BETA_FLOOR = 1e-12


@dataclass
class GmmModel:
    weights: np.ndarray  # (r,) on the simplex
    means: np.ndarray  # (r, d)
    variances: np.ndarray  # (r, d) nonnegative
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        self.means = np.atleast_2d(np.asarray(self.means, dtype=float))
        self.variances = np.atleast_2d(np.asarray(self.variances, dtype=float))
        if not math.isclose(self.weights.sum(), 1.0, abs_tol=1e-8):
            raise ValueError("weights must sum to 1")
        if np.any(self.weights < -1e-12):
            raise ValueError("weights must be nonnegative")
        if np.any(self.variances < -1e-12):
            raise ValueError("variances must be nonnegative")

    @property
    def r(self) -> int:
        return self.weights.size

    @property
    def d(self) -> int:
        return self.means.shape[1]


@dataclass
class SampleSet:
    data: np.ndarray  # (N, d)
    seed: int = 0
    labels: np.ndarray | None = None  # true component indices, if known

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def d(self) -> int:
        return self.data.shape[1]


@dataclass
class MomentSet:
    order: int
    values: dict[TensorKey, float]

    def __getitem__(self, key) -> float:
        return self.values[tuple(sorted(key))]


def sample_gmm(model: GmmModel, N: int, seed: int) -> SampleSet:
    """Draw N i.i.d. samples; the component index follows the weights and
    the coordinates are independent normals.  True labels are retained."""
    rng = rng_from(seed, "samples")
    labels = rng.choice(model.r, size=N, p=model.weights / model.weights.sum())
    noise = rng.standard_normal((N, model.d))
    data = model.means[labels] + np.sqrt(model.variances[labels]) * noise
    return SampleSet(data=data, seed=seed, labels=labels)


def sample_moments(samples: SampleSet, keys: list[TensorKey]) -> MomentSet:
    """Empirical moments: for each key, the mean over samples of the
    product of the indexed coordinates."""
    Y = samples.data
    values = {}
    order = len(keys[0]) if keys else 0
    for key in keys:
        values[tuple(sorted(key))] = float(np.prod(Y[:, list(key)], axis=1).mean())
    return MomentSet(order=order, values=values)


def univariate_gaussian_moment(mu: float, var: float, t: int) -> float:
    """E[z^t] for z ~ N(mu, var) by the standard two-term recurrence."""
    if t < 0:
        raise ValueError("moment order must be nonnegative")
    prev2, prev1 = 1.0, mu  # E[z^0], E[z^1]
    if t == 0:
        return prev2
    for s in range(2, t + 1):
        prev2, prev1 = prev1, mu * prev1 + (s - 1) * var * prev2
    return prev1


def exact_moments(model: GmmModel, keys: list[TensorKey]) -> MomentSet:
    """Population moments of a diagonal mixture: coordinates factor, so a
    key's value is a weight-sum of products of univariate moments at the
    key's per-coordinate multiplicities."""
    values = {}
    order = len(keys[0]) if keys else 0
    for key in keys:
        skey = tuple(sorted(key))
        mult: dict[int, int] = {}
        for s in skey:
            mult[s] = mult.get(s, 0) + 1
        total = 0.0
        for i in range(model.r):
            prod = 1.0
            for coord, t in mult.items():
                prod *= univariate_gaussian_moment(
                    model.means[i, coord], model.variances[i, coord], t
                )
            total += model.weights[i] * prod
        values[skey] = total
    return MomentSet(order=order, values=values)


def covariance_keys(d: int, m: int, j: int) -> list[TensorKey]:
    """Keys (j, j, i_1, ..., i_{m-2}) with the trailing labels distinct
    and different from j, sorted."""
    others = [s for s in range(d) if s != j]
    return [
        tuple(sorted((j, j) + gamma))
        for gamma in itertools.combinations(others, m - 2)
    ]


def realify(qs: np.ndarray, m: int) -> np.ndarray:
    """Rotate each complex component by the m-th root of unity minimizing
    its imaginary norm (ties to the smallest root index), then drop the
    imaginary part."""
    qs = np.atleast_2d(np.asarray(qs, dtype=complex))
    out = np.empty(qs.shape, dtype=float)
    etas = np.exp(2j * np.pi * np.arange(m) / m)
    for i, q in enumerate(qs):
        imag_norms = [np.linalg.norm((eta * q).imag) for eta in etas]
        best = int(np.argmin(imag_norms))
        out[i] = (etas[best] * q).real
    return out


def choose_t(d: int, r: int) -> int:
    """Smallest moment order t with C(d, t) >= r."""
    t = 1
    while binomial(d, t) < r:
        t += 1
    return t


def recover_weights(
    qs_real: np.ndarray, Mt: MomentSet, m: int, t: int
) -> tuple[np.ndarray, np.ndarray]:
    """Weights and means from the order-t moments: nonnegative least
    squares for beta_i, then the exponent round trip
    omega_i = beta_i^(m/(m-t)), mu_i = q_i / beta_i^(1/(m-t))."""
    if t >= m:
        raise OrderConflict(f"t={t} must be smaller than m={m}")
    qs_real = np.atleast_2d(qs_real)
    r, d = qs_real.shape
    keys = omega_keys(d, t)
    design = np.empty((len(keys), r))
    for ki, key in enumerate(keys):
        design[ki, :] = np.prod(qs_real[:, list(key)], axis=1)
    b = np.array([Mt[k] for k in keys])
    if m % 2 == 0 and t % 2 == 1:
        # Even-order entries cannot see a component's sign, so the scaled
        # vector may come out negated.  The odd-order moments can: a
        # negative unconstrained coefficient marks a flipped component.
        coef = np.linalg.lstsq(design, b, rcond=None)[0]
        flipped = coef < 0.0
        if flipped.any():
            qs_real = qs_real.copy()
            qs_real[flipped] *= -1.0
            design[:, flipped] *= -1.0
    beta = nnls(design, b)
    for i, bi in enumerate(beta):
        if bi < _BETA_FLOOR:
            raise DegenerateWeight(i)
    omega = beta ** (m / (m - t))
    mus = qs_real / beta[:, None] ** (1.0 / (m - t))
    return omega, mus


def _moment_residual(Mm: MomentSet, Mt: MomentSet, d: int):
    keys_m = omega_keys(d, Mm.order)
    keys_t = omega_keys(d, Mt.order)
    arr_m = np.asarray(keys_m, dtype=int)
    arr_t = np.asarray(keys_t, dtype=int)
    target_m = np.array([Mm[k] for k in keys_m])
    target_t = np.array([Mt[k] for k in keys_t])

    def residual(omega, mu):
        vm = (omega[:, None] * np.prod(mu[:, arr_m], axis=2)).sum(0) - target_m
        vt = (omega[:, None] * np.prod(mu[:, arr_t], axis=2)).sum(0) - target_t
        return np.concatenate([vm, vt])

    return residual


def refine_params(
    omega0: np.ndarray,
    mus0: np.ndarray,
    Mm: MomentSet,
    Mt: MomentSet,
    max_iters: int = 200,
) -> tuple[np.ndarray, np.ndarray]:
    """Simplex-constrained refinement of weights and means on the two-term
    moment-matching objective.  omega0 must already be on the simplex."""
    d = np.atleast_2d(mus0).shape[1]
    residual = _moment_residual(Mm, Mt, d)
    return simplex_nlls(residual, omega0, mus0, max_iters=max_iters)


def recover_covariances(
    Mm: MomentSet,
    qs_real: np.ndarray,
    omega: np.ndarray,
    mus: np.ndarray,
) -> np.ndarray:
    """Diagonal variances: per coordinate j, a nonnegative least squares of
    the repeated-pair moment residual against the weighted mean products."""
    qs_real = np.atleast_2d(qs_real)
    mus = np.atleast_2d(mus)
    r, d = mus.shape
    m = Mm.order
    variances = np.empty((r, d))
    for j in range(d):
        others = [s for s in range(d) if s != j]
        gammas = list(itertools.combinations(others, m - 2))
        response = np.empty(len(gammas))
        design = np.empty((len(gammas), r))
        for gi, gamma in enumerate(gammas):
            key = tuple(sorted((j, j) + gamma))
            recon = sum(
                qs_real[i, j] ** 2 * np.prod(qs_real[i, list(gamma)])
                for i in range(r)
            )
            response[gi] = Mm[key] - recon
            design[gi, :] = omega * np.prod(mus[:, list(gamma)], axis=1)
        if np.linalg.matrix_rank(design) < r:
            raise CovDesignDegenerate(j)
        variances[:, j] = nnls(design, response)
    return variances


def learn_from_moments(
    Mm: MomentSet,
    Mt: MomentSet,
    d: int,
    r: int,
    seed: int = 0,
) -> GmmModel:
    """Full recovery from moment sets: tensor approximation on the order-m
    distinct-index subtensor, phase correction, weight/mean recovery,
    simplex refinement, then covariance recovery."""
    m = Mm.order
    t = Mt.order
    params = choose_params(d - 1, m, r, seed=seed)
    entries = {k: complex(Mm[k]) for k in omega_keys(d, m)}
    F_hat = IncompleteSymmetricTensor(d, m, entries)
    dec = approximate(F_hat, params)
    qs_real = realify(dec.components, m)
    omega_hat, mus_hat = recover_weights(qs_real, Mt, m, t)
    omega_hat = omega_hat / omega_hat.sum()
    omega_star, mus_star = refine_params(omega_hat, mus_hat, Mm, Mt)
    # Rebuild the scaled vectors from the refined weights and means so the
    # mean contribution subtracted from the moments matches the design.
    qs_star = omega_star[:, None] ** (1.0 / m) * mus_star
    variances = recover_covariances(Mm, qs_star, omega_star, mus_star)
    return GmmModel(
        weights=omega_star,
        means=mus_star,
        variances=variances,
        meta={"decomp": dec.diagnostics},
    )


def learn(samples: SampleSet, r: int, m: int, seed: int = 0) -> GmmModel:
    """Moment-based learning from samples: estimate the order-m moments on
    the distinct-index and repeated-pair keys plus the order-t moments,
    then recover all parameters."""
    if m < 3:
        raise ValueError("moment order m must be at least 3")
    d = samples.d
    t = choose_t(d, r)
    keys_m = set(omega_keys(d, m))
    for j in range(d):
        keys_m.update(covariance_keys(d, m, j))
    Mm = sample_moments(samples, sorted(keys_m))
    Mt = sample_moments(samples, omega_keys(d, t))
    return learn_from_moments(Mm, Mt, d, r, seed=seed)


def em_baseline(
    samples: SampleSet,
    r: int,
    max_iters: int = 100,
    reg_value: float = 1e-3,
    seed: int = 0,
) -> GmmModel:
    """Standard EM for diagonal mixtures, initialized by seeded random
    responsibilities; the regularization value is added to every variance
    each M-step.  Returns the best-likelihood iterate."""
    Y = samples.data
    N, d = Y.shape
    if r > N:
        raise ValueError("more components than samples")
    rng = rng_from(seed, "em")
    resp = rng.random((N, r))
    resp /= resp.sum(axis=1, keepdims=True)
    history: list[float] = []
    best = None
    for _ in range(max_iters):
        # M-step
        nk = resp.sum(axis=0)
        weights = nk / N
        means = (resp.T @ Y) / nk[:, None]
        sq = resp.T @ (Y * Y) / nk[:, None]
        variances = sq - means**2 + reg_value
        # E-step / likelihood under the fresh parameters
        log_prob = _log_component_densities(Y, weights, means, variances)
        log_norm = _logsumexp(log_prob)
        ll = float(log_norm.sum())
        history.append(ll)
        if best is None or ll >= best[0]:
            best = (ll, weights.copy(), means.copy(), variances.copy())
        resp = np.exp(log_prob - log_norm[:, None])
    _, weights, means, variances = best
    return GmmModel(
        weights=weights / weights.sum(),
        means=means,
        variances=variances,
        meta={"loglik_history": history},
    )


_VAR_FLOOR = 1e-3


def _log_component_densities(Y, weights, means, variances):
    # Nonnegative least squares can return exactly-zero variances for
    # coordinates whose true spread is below the sampling noise; the
    # Gaussian density is singular there, so likelihoods are evaluated
    # with variances floored at the same scale the EM baseline uses for
    # its variance regularization.
    var = np.maximum(variances, _VAR_FLOOR)
    # (N, r): log omega_i + log N(y; mu_i, diag var_i)
    diff = Y[:, None, :] - means[None, :, :]
    quad = (diff * diff / var[None, :, :]).sum(axis=2)
    logdet = np.log(var).sum(axis=1)
    return (
        np.log(np.maximum(weights, 1e-300))[None, :]
        - 0.5 * (quad + logdet[None, :] + Y.shape[1] * math.log(2 * math.pi))
    )


def _logsumexp(a):
    mx = a.max(axis=1)
    return mx + np.log(np.exp(a - mx[:, None]).sum(axis=1))


def classify(model: GmmModel, samples: SampleSet) -> np.ndarray:
    """Per-sample argmax of the weighted component likelihood."""
    log_prob = _log_component_densities(
        samples.data, model.weights, model.means, model.variances
    )
    return np.argmax(log_prob, axis=1)


def accuracy(labels: np.ndarray, truth: np.ndarray) -> float:
    """Fraction of correct assignments after the maximum-agreement
    matching of predicted components to true components."""
    labels = np.asarray(labels)
    truth = np.asarray(truth)
    r = int(max(labels.max(), truth.max())) + 1
    confusion = np.zeros((r, r))
    for a, b in zip(labels, truth):
        confusion[a, b] += 1
    rows, cols = scipy.optimize.linear_sum_assignment(-confusion)
    return float(confusion[rows, cols].sum() / labels.size)


def random_model(d: int, r: int, seed: int) -> GmmModel:
    """Synthetic model: normalized positive weights, Gaussian means, and
    squared-Gaussian diagonal variances."""
    rng = rng_from(seed, "model")
    s = np.abs(rng.standard_normal(r)) + 0.1
    weights = s / s.sum()
    means = rng.standard_normal((r, d))
    variances = rng.standard_normal((r, d)) ** 2
    return GmmModel(weights=weights, means=means, variances=variances)


def model_to_json(model: GmmModel) -> str:
    return json.dumps(
        {
            "r": model.r,
            "weights": [float(w) for w in model.weights],
            "means": [[float(v) for v in row] for row in model.means],
            "variances": [[float(v) for v in row] for row in model.variances],
        },
        indent=1,
    )


def model_from_json(text: str) -> GmmModel:
    doc = json.loads(text)
    return GmmModel(
        weights=np.asarray(doc["weights"], dtype=float),
        means=np.asarray(doc["means"], dtype=float),
        variances=np.asarray(doc["variances"], dtype=float),
    )
