"""Generating-matrix linear systems, companion matrices, and tail
extraction by eigendecomposition.

The matrix ``G`` has one column per monomial in the mixed basis (head
subset plus one tail label) and one row per monomial in the head basis.
Its r x r slices indexed by a tail label form a commuting family whose
common eigenvectors reveal the tail coordinates of the components.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .combinatorics import IndexSubset, basis_B0, basis_B1, binomial, support_O_alpha
from .errors import DegenerateSpectrum, ShapeCondition
from .numerics import eig, gaussian_vector, lstsq
from .tensor_store import IncompleteSymmetricTensor

_GAP_TOL = 1e-8
_MAX_XI_RETRIES = 5


@dataclass
class GeneratingMatrix:
    """r x |B1| complex matrix with row labels B0 and column labels B1."""

    values: np.ndarray
    row_labels: list[IndexSubset]
    col_labels: list[IndexSubset]
    residuals: np.ndarray  # per-column lstsq residual norms
    k: int
    p: int
    n: int

    col_index: dict[IndexSubset, int] = field(default_factory=dict)

    def __post_init__(self):
        if not self.col_index:
            self.col_index = {c: i for i, c in enumerate(self.col_labels)}

    @property
    def r(self) -> int:
        return self.values.shape[0]

    def column(self, alpha: IndexSubset) -> np.ndarray:
        return self.values[:, self.col_index[tuple(alpha)]]


@dataclass
class CompanionSet:
    """Matrices N_{k+1}..N_n; entry (nu, beta) of N_l is G(beta, nu + e_l)."""

    matrices: np.ndarray  # (n - k, r, r)
    k: int
    p: int
    n: int

    @property
    def r(self) -> int:
        return self.matrices.shape[1]


def assemble_system(
    T: IncompleteSymmetricTensor,
    alpha: IndexSubset,
    B0: list[IndexSubset],
    k: int,
    n: int,
    m: int,
    p: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Linear system for the G-column of ``alpha``: rows indexed by the
    support tuples of alpha, columns by B0.

    A[gamma, beta] is the tensor entry at beta + gamma padded with label 0
    (degree m-1 monomial); b[gamma] is the entry at alpha + gamma.
    """
    support = support_O_alpha(alpha, k, n, m, p)
    A = np.empty((len(support), len(B0)), dtype=complex)
    b = np.empty(len(support), dtype=complex)
    for gi, gamma in enumerate(support):
        for bi, beta in enumerate(B0):
            A[gi, bi] = T[beta + gamma + (0,)]
        b[gi] = T[alpha + gamma]
    return A, b


def solve_generating_matrix(
    T: IncompleteSymmetricTensor, r: int, p: int, k: int
) -> GeneratingMatrix:
    """Solve one least-squares system per column to build G.

    On exact rank-r generic input every per-column residual vanishes; on
    noisy input the same code path yields the least-squares G.
    """
    n = T.d - 1
    m = T.m
    if binomial(k, p) < r or binomial(n - k - 1, m - p - 1) < r:
        raise ShapeCondition(
            f"need C({k},{p}) >= {r} and C({n - k - 1},{m - p - 1}) >= {r}"
        )
    B0 = basis_B0(k, p, r)
    B1 = basis_B1(k, p, n)
    values = np.empty((r, len(B1)), dtype=complex)
    residuals = np.empty(len(B1))
    for ci, alpha in enumerate(B1):
        A, b = assemble_system(T, alpha, B0, k, n, m, p)
        report = lstsq(A, b)
        values[:, ci] = report.solution
        residuals[ci] = report.residual_norm
    return GeneratingMatrix(
        values=values, row_labels=B0, col_labels=B1, residuals=residuals,
        k=k, p=p, n=n,
    )


def companion_matrices(G: GeneratingMatrix) -> CompanionSet:
    """Build N_l for l = k+1..n with N_l[nu, beta] = G(beta, nu + e_l)."""
    r = G.r
    n_tail = G.n - G.k
    mats = np.empty((n_tail, r, r), dtype=complex)
    for li in range(n_tail):
        l = G.k + 1 + li
        for vi, nu in enumerate(G.row_labels):
            col = G.column(nu + (l,))
            mats[li, vi, :] = col
    return CompanionSet(matrices=mats, k=G.k, p=G.p, n=G.n)


def extract_tails(
    Ns: CompanionSet, seed: int
) -> tuple[np.ndarray, np.ndarray, float]:
    """Rayleigh-quotient tails from a random combination of the companions.

    Draws several complex xi ~ N(0, I) + i N(0, I) candidates, keeps the
    eigendecomposition of N(xi) with the widest relative eigenvalue gap,
    and returns per-eigenvector tails w_i[j] = v_i^H N_{k+1+j} v_i
    together with the eigenvectors and the gap.  A well-separated
    spectrum keeps the eigenvectors stable against perturbations of the
    companion matrices, so the candidate count trades a few extra
    eigendecompositions for accuracy on noisy input.
    """
    n_tail, r = Ns.matrices.shape[0], Ns.r
    best_gap, best_vecs = -1.0, None
    for attempt in range(_MAX_XI_RETRIES):
        xi = gaussian_vector(seed, 2 * n_tail, "xi", attempt).view(complex)
        N_xi = np.tensordot(xi, Ns.matrices, axes=(0, 0))
        pairs = eig(N_xi)
        gap = _relative_gap(pairs.values)
        if gap > best_gap:
            best_gap, best_vecs = gap, pairs.vectors
        if r == 1:
            break
    if best_gap < _GAP_TOL and r > 1:
        raise DegenerateSpectrum(
            f"eigenvalue gap {best_gap:.2e} below {_GAP_TOL} after "
            f"{_MAX_XI_RETRIES} random combinations"
        )
    tails = np.empty((r, n_tail), dtype=complex)
    for i in range(r):
        v = best_vecs[:, i]
        for j in range(n_tail):
            tails[i, j] = np.vdot(v, Ns.matrices[j] @ v)
    return tails, best_vecs, best_gap


def _relative_gap(values: np.ndarray) -> float:
    if values.size < 2:
        return float("inf")
    spread = float(np.abs(values[:, None] - values[None, :]).max())
    if spread == 0:
        return 0.0
    idx = np.triu_indices(values.size, k=1)
    min_dist = float(np.abs(values[:, None] - values[None, :])[idx].min())
    return min_dist / spread
