"""End-to-end incomplete symmetric tensor decomposition (exact pipeline),
its noisy variant with nonlinear refinement, and rank-bound selection.

The exact pipeline recovers rank-r components from the distinct-index
entries alone: generating matrix -> companion matrices -> eigen tails ->
three least-squares stages for the head coordinates and scales.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.optimize

from .combinatorics import binomial, subsets_lex
from .errors import (
    HeadsDegenerate,
    RankTooLarge,
    ScalesDegenerate,
    TailsDegenerate,
)
from .generating import companion_matrices, extract_tails, solve_generating_matrix
from .numerics import lstsq, nlls_refine
from .tensor_store import (
    ComponentList,
    IncompleteSymmetricTensor,
    block_matrix,
    from_components,
    omega_norm,
)


class PreconditionWarning(UserWarning):
    """The dimension is below the threshold that guarantees the closed-form
    rank bound; the value is computed anyway."""


def _threshold(m: int) -> int:
    return max(2 * m - 1, math.ceil(m * m / 4) - 1)


def max_rank(n: int, m: int) -> tuple[int, int, int]:
    """Largest computable rank with its selecting (p*, k*).

    p* = floor((m-1)/2); k* is the largest k with
    C(k, p*) <= C(n-k-1, m-p*-1), found by integer search; the bound is
    max(C(k*, p*), C(n-2-k*, m-1-p*)).
    """
    if n < _threshold(m):
        warnings.warn(
            f"n={n} below threshold {_threshold(m)} for order {m}; "
            "the closed-form rank bound is not guaranteed",
            PreconditionWarning,
        )
    p_star = (m - 1) // 2
    k_star = None
    for k in range(p_star, n - m + p_star + 1):
        if binomial(k, p_star) <= binomial(n - k - 1, m - p_star - 1):
            k_star = k
    if k_star is None:
        k_star = p_star
    r_max = max(binomial(k_star, p_star), binomial(n - 2 - k_star, m - 1 - p_star))
    return r_max, p_star, k_star


def brute_force_max_rank(n: int, m: int) -> int:
    """Exhaustive maximum of min(C(k,p), C(n-k-1,m-p-1)) over the full
    (p, k) grid; the oracle for ``max_rank``."""
    best = 0
    for p in range(1, m - 1):
        for k in range(p, n - m + p + 1):
            best = max(best, min(binomial(k, p), binomial(n - k - 1, m - p - 1)))
    return best


@dataclass
class DecompositionParams:
    r: int
    p: int
    k: int
    seed: int = 0
    refine: bool = False
    refine_opts: dict = field(default_factory=dict)

    def validate(self, n: int, m: int):
        if not (1 <= self.p <= m - 2):
            raise ValueError(f"p={self.p} outside [1, {m - 2}]")
        if not (self.p <= self.k <= n - m + self.p):
            raise ValueError(f"k={self.k} outside [{self.p}, {n - m + self.p}]")
        if binomial(self.k, self.p) < self.r:
            raise RankTooLarge(self.r)
        if binomial(n - self.k - 1, m - self.p - 1) < self.r:
            raise RankTooLarge(self.r)


def choose_params(n: int, m: int, r: int, seed: int = 0) -> DecompositionParams:
    """Feasible (p, k) for a requested rank: p = p* with the smallest k
    satisfying both binomial bounds; all other p are scanned before
    giving up.  k starts at p + 1 so that every head coordinate has at
    least one degree-p monomial avoiding it, which the head-recovery
    least squares needs."""
    if r < 1:
        raise ValueError("rank must be positive")
    _, p_star, _ = max_rank_quiet(n, m)
    candidates = [p_star] + [p for p in range(1, m - 1) if p != p_star]
    for p in candidates:
        for k in range(p + 1, n - m + p + 1):
            if binomial(k, p) >= r and binomial(n - k - 1, m - p - 1) >= r:
                return DecompositionParams(r=r, p=p, k=k, seed=seed)
    raise RankTooLarge(r, brute_force_max_rank(n, m))


def max_rank_quiet(n: int, m: int) -> tuple[int, int, int]:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", PreconditionWarning)
        return max_rank(n, m)


@dataclass
class Decomposition:
    components: np.ndarray  # (r, d) complex
    diagnostics: dict


def _tail_design(tails: np.ndarray, J3: list[tuple[int, ...]]) -> np.ndarray:
    """W[row, i] = product of tail entries of component i over a J3 tuple."""
    W = np.empty((len(J3), tails.shape[0]), dtype=complex)
    for gi, gamma in enumerate(J3):
        W[gi, :] = np.prod(tails[:, [g - 1 for g in gamma]], axis=1)
    return W


def solve_tail_products(
    T: IncompleteSymmetricTensor, tails: np.ndarray, params: DecompositionParams
) -> np.ndarray:
    """Coefficient vectors gamma_i over the head monomial set J1, from one
    least squares per J1 row against the tail design."""
    n, m = T.d - 1, T.m
    k, p = params.k, params.p
    J1 = subsets_lex(1, k, p)
    J2 = subsets_lex(k + 1, n, m - p - 1)
    J3 = [tuple(s - k for s in g) for g in J2]
    W = _tail_design(tails, J3)
    if np.linalg.matrix_rank(W) < params.r:
        raise TailsDegenerate("tail design matrix is rank-deficient")
    B = block_matrix(T, J1, J2, pad_with_zero_label=True)
    # one shared design, all J1 rows as simultaneous right-hand sides
    report = lstsq(W, B.T)
    return report.solution.T  # (|J1|, r)


def solve_heads(
    T: IncompleteSymmetricTensor,
    tails: np.ndarray,
    gammas: np.ndarray,
    params: DecompositionParams,
) -> np.ndarray:
    """Head coordinates: for each head label j, a joint least squares in
    the r unknowns (v_i)_j with design columns gamma_i|_{J1 without j}
    outer the tail design."""
    n, m = T.d - 1, T.m
    k, p, r = params.k, params.p, params.r
    J1 = subsets_lex(1, k, p)
    J2 = subsets_lex(k + 1, n, m - p - 1)
    J3 = [tuple(s - k for s in g) for g in J2]
    W = _tail_design(tails, J3)
    heads = np.empty((r, k), dtype=complex)
    for j in range(1, k + 1):
        rows = [beta for beta in J1 if j not in beta]
        if not rows:
            raise HeadsDegenerate(
                f"no head monomials avoid label {j} (k={k}, p={p})"
            )
        row_idx = [J1.index(beta) for beta in rows]
        B = block_matrix(
            T, [(j,) + beta for beta in rows], J2, pad_with_zero_label=False
        )
        design = np.empty((len(rows) * len(J2), r), dtype=complex)
        for i in range(r):
            design[:, i] = np.outer(gammas[row_idx, i], W[:, i]).ravel()
        report = lstsq(design, B.ravel())
        if report.rank < r:
            raise HeadsDegenerate(f"head design rank-deficient at label {j}")
        heads[:, j - 1] = report.solution
    return heads


def solve_scales(
    T: IncompleteSymmetricTensor,
    heads: np.ndarray,
    tails: np.ndarray,
    params: DecompositionParams,
) -> np.ndarray:
    """Scales lambda_i from a least squares over all stored distinct-index
    keys, each sorted key weighted once."""
    r = params.r
    full = np.concatenate(
        [np.ones((r, 1), dtype=complex), heads, tails], axis=1
    )
    keys = T.keys()
    key_arr = np.asarray(keys, dtype=int)
    design = np.prod(full[:, key_arr], axis=2).T  # (n_keys, r)
    b = np.array([T.entries[kk] for kk in keys])
    # Columns scale like u_i^m and spread over many orders of magnitude
    # when a component's leading coordinate is small; equilibrate so the
    # rank test and the solve see a well-scaled system.
    col_norms = np.linalg.norm(design, axis=0)
    if np.any(col_norms == 0):
        raise ScalesDegenerate("scale design has a zero column")
    report = lstsq(design / col_norms, b)
    if report.rank < r:
        raise ScalesDegenerate("scale design rank-deficient")
    return report.solution / col_norms


def decompose(
    T: IncompleteSymmetricTensor, params: DecompositionParams
) -> Decomposition:
    """Exact pipeline: generating matrix, eigen tails, then the three
    least-squares stages; components are lambda^(1/m) (1, v_i, w_i) with
    the principal m-th root."""
    n, m = T.d - 1, T.m
    params.validate(n, m)
    G = solve_generating_matrix(T, params.r, params.p, params.k)
    Ns = companion_matrices(G)
    tails, _, gap = extract_tails(Ns, params.seed)
    gammas = solve_tail_products(T, tails, params)
    heads = solve_heads(T, tails, gammas, params)
    lambdas = solve_scales(T, heads, tails, params)
    full = np.concatenate(
        [np.ones((params.r, 1), dtype=complex), heads, tails], axis=1
    )
    roots = np.power(lambdas.astype(complex), 1.0 / m)
    components = roots[:, None] * full
    err = decomp_err(T, components)
    diagnostics = {
        "decomp_err": err,
        "eigen_gap": gap,
        "gen_residual_max": float(np.max(G.residuals)) if G.residuals.size else 0.0,
    }
    return Decomposition(components=components, diagnostics=diagnostics)


def reconstruct(
    components: np.ndarray, m: int, keys
) -> IncompleteSymmetricTensor:
    return from_components(ComponentList(components), m, list(keys))


def decomp_err(T: IncompleteSymmetricTensor, components: np.ndarray) -> float:
    """Relative reconstruction error over the stored keys."""
    keys = T.keys()
    rec = reconstruct(components, T.m, keys)
    diff = IncompleteSymmetricTensor(
        T.d, T.m, {kk: T.entries[kk] - rec.entries[kk] for kk in keys}
    )
    denom = omega_norm(T, keys)
    if denom == 0:
        return omega_norm(diff, keys)
    return omega_norm(diff, keys) / denom


def _omega_values(T: IncompleteSymmetricTensor, keys) -> np.ndarray:
    return np.array([T.entries[kk] for kk in keys])


def _residual_builder(T: IncompleteSymmetricTensor, r: int):
    """Real residual and analytic Jacobian over the stored keys for the
    flattened [Re(Q); Im(Q)] parameterization."""
    keys = T.keys()
    key_arr = np.asarray(keys, dtype=int)
    target = _omega_values(T, keys)
    d, m = T.d, T.m
    n_keys = key_arr.shape[0]

    def split(x):
        half = r * d
        return (x[:half] + 1j * x[half:]).reshape(r, d)

    def residual(x):
        Q = split(x)
        vals = np.prod(Q[:, key_arr], axis=2).sum(axis=0) - target
        return np.concatenate([vals.real, vals.imag])

    def jacobian(x):
        Q = split(x)
        gathered = Q[:, key_arr]  # (r, n_keys, m)
        # prefix/suffix products give the per-slot partial derivatives
        prefix = np.ones_like(gathered)
        suffix = np.ones_like(gathered)
        for t in range(1, m):
            prefix[:, :, t] = prefix[:, :, t - 1] * gathered[:, :, t - 1]
            suffix[:, :, m - 1 - t] = suffix[:, :, m - t] * gathered[:, :, m - t]
        partial = prefix * suffix  # d(value)/d Q[i, slot t of key]
        Jc = np.zeros((n_keys, r * d), dtype=complex)
        rows = np.arange(n_keys)
        for i in range(r):
            for t in range(m):
                Jc[rows, i * d + key_arr[:, t]] += partial[i, :, t]
        return np.block(
            [[Jc.real, -Jc.imag], [Jc.imag, Jc.real]]
        )

    def pack(Q):
        return np.concatenate([Q.real.ravel(), Q.imag.ravel()])

    return residual, jacobian, split, pack


def approximate(
    T_noisy: IncompleteSymmetricTensor,
    params: DecompositionParams,
    truth: IncompleteSymmetricTensor | None = None,
) -> Decomposition:
    """Noisy pipeline: run the exact stages on the noisy subtensor, then
    refine all component entries by damped Gauss-Newton on the residual
    over the stored keys.

    When ``truth`` is supplied the diagnostics carry abs_err (distance of
    the reconstruction to the exact tensor) and rel_err (distance to the
    noisy tensor relative to the noise norm).
    """
    base = decompose(T_noisy, params)
    residual, jacobian, split, pack = _residual_builder(T_noisy, params.r)
    opts = {"max_iters": 200, "grad_tol": 1e-10}
    opts.update(params.refine_opts)
    x0 = pack(base.components)
    x_star = nlls_refine(residual, x0, jacobian=jacobian, **opts)
    components = split(x_star)
    keys = T_noisy.keys()
    rec = reconstruct(components, T_noisy.m, keys)
    diff_hat = IncompleteSymmetricTensor(
        T_noisy.d, T_noisy.m,
        {kk: rec.entries[kk] - T_noisy.entries[kk] for kk in keys},
    )
    diagnostics = dict(base.diagnostics)
    diagnostics["decomp_err"] = decomp_err(T_noisy, components)
    diagnostics["pre_refine_decomp_err"] = base.diagnostics["decomp_err"]
    if truth is not None:
        diff_true = IncompleteSymmetricTensor(
            truth.d, truth.m,
            {kk: rec.entries[kk] - truth.entries[kk] for kk in keys},
        )
        noise = IncompleteSymmetricTensor(
            truth.d, truth.m,
            {kk: T_noisy.entries[kk] - truth.entries[kk] for kk in keys},
        )
        noise_norm = omega_norm(noise, keys)
        diagnostics["abs_err"] = omega_norm(diff_true, keys)
        diagnostics["rel_err"] = (
            omega_norm(diff_hat, keys) / noise_norm if noise_norm > 0 else 0.0
        )
    return Decomposition(components=components, diagnostics=diagnostics)


def component_error(
    truth: np.ndarray, recovered: np.ndarray, m: int
) -> float:
    """Max relative vector error after optimal matching, minimizing over
    component permutations and m-th roots of unity per component."""
    truth = np.atleast_2d(truth)
    recovered = np.atleast_2d(recovered)
    r = truth.shape[0]
    phases = np.exp(2j * np.pi * np.arange(m) / m)
    cost = np.empty((r, r))
    for i in range(r):
        norm_i = np.linalg.norm(truth[i])
        for j in range(r):
            errs = [
                np.linalg.norm(truth[i] - eta * recovered[j]) for eta in phases
            ]
            cost[i, j] = min(errs) / (norm_i if norm_i > 0 else 1.0)
    rows, cols = scipy.optimize.linear_sum_assignment(cost)
    return float(cost[rows, cols].max())


def to_json(dec: Decomposition, d: int, m: int) -> str:
    comps = [
        {"re": [float(v.real) for v in q], "im": [float(v.imag) for v in q]}
        for q in dec.components
    ]
    diag = {
        k: (float(v) if isinstance(v, (int, float, np.floating)) else v)
        for k, v in dec.diagnostics.items()
    }
    return json.dumps(
        {
            "d": d,
            "m": m,
            "r": int(dec.components.shape[0]),
            "components": comps,
            "diagnostics": diag,
        },
        indent=1,
    )


def from_json(text: str) -> Decomposition:
    doc = json.loads(text)
    comps = np.array(
        [np.asarray(c["re"]) + 1j * np.asarray(c["im"]) for c in doc["components"]]
    )
    return Decomposition(components=comps, diagnostics=doc.get("diagnostics", {}))
