"""Storage and block extraction for incomplete symmetric tensors.

Only sorted keys are stored; a full dense tensor is never materialized.
The norm over a key set counts every sorted distinct-index key with its
m! ordered-tuple multiplicity, matching the Hilbert-Schmidt convention
on subtensors.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .combinatorics import IndexSubset
from .errors import KeyCollision, MissingEntry, OrderExceedsDim
from .numerics import rng_from

TensorKey = tuple[int, ...]


def omega_keys(d: int, m: int) -> list[TensorKey]:
    """All C(d, m) sorted distinct-index keys of an order-m tensor of
    dimension d, lexicographic order."""
    if m > d:
        raise OrderExceedsDim(f"order {m} exceeds dimension {d}")
    return list(itertools.combinations(range(d), m))


@dataclass
class ComponentList:
    """Vectors q_1..q_r of length d with optional scalar weights."""

    vectors: np.ndarray  # (r, d) complex
    weights: np.ndarray | None = None  # (r,) complex, 1 when absent

    def __post_init__(self):
        self.vectors = np.atleast_2d(np.asarray(self.vectors, dtype=complex))
        if self.weights is not None:
            self.weights = np.asarray(self.weights, dtype=complex)
            if self.weights.shape != (self.vectors.shape[0],):
                raise ValueError("weights length must match component count")

    @property
    def r(self) -> int:
        return self.vectors.shape[0]

    @property
    def d(self) -> int:
        return self.vectors.shape[1]

    def effective_weights(self) -> np.ndarray:
        if self.weights is None:
            return np.ones(self.r, dtype=complex)
        return self.weights


@dataclass
class IncompleteSymmetricTensor:
    """Order-m symmetric tensor of dimension d stored on sorted keys only."""

    d: int
    m: int
    entries: dict[TensorKey, complex] = field(default_factory=dict)

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("order must be positive")
        for key in self.entries:
            self._check_key(key)

    def _check_key(self, key: TensorKey):
        if len(key) != self.m:
            raise ValueError(f"key {key} does not have {self.m} slots")
        if any(not (0 <= s < self.d) for s in key):
            raise ValueError(f"key {key} out of range for dimension {self.d}")
        if any(key[i] > key[i + 1] for i in range(len(key) - 1)):
            raise ValueError(f"key {key} is not sorted")

    def __getitem__(self, key) -> complex:
        skey = tuple(sorted(key))
        try:
            return self.entries[skey]
        except KeyError:
            raise MissingEntry(skey) from None

    def __contains__(self, key) -> bool:
        return tuple(sorted(key)) in self.entries

    def keys(self) -> list[TensorKey]:
        return sorted(self.entries)


def from_components(
    comps: ComponentList, m: int, keys: list[TensorKey]
) -> IncompleteSymmetricTensor:
    """Evaluate sum_i lambda_i q_i[i1]...q_i[im] at every requested key."""
    d = comps.d
    lam = comps.effective_weights()
    key_arr = np.asarray(keys, dtype=int)
    if key_arr.size == 0:
        return IncompleteSymmetricTensor(d, m, {})
    # (r, n_keys, m) gather then product over slots, sum over components
    gathered = comps.vectors[:, key_arr]
    values = (lam[:, None] * np.prod(gathered, axis=2)).sum(axis=0)
    entries = {tuple(int(s) for s in k): complex(v) for k, v in zip(keys, values)}
    return IncompleteSymmetricTensor(d, m, entries)


def block_matrix(
    T: IncompleteSymmetricTensor,
    rows: list[IndexSubset],
    cols: list[IndexSubset],
    pad_with_zero_label: bool = False,
) -> np.ndarray:
    """Matrix of tensor entries at keys row ∪ col (∪ {0} when padding).

    Every (row, col) pair must join into distinct labels; with padding the
    joined label set has m-1 elements, none of them 0.
    """
    out = np.empty((len(rows), len(cols)), dtype=complex)
    need = T.m - 1 if pad_with_zero_label else T.m
    for i, row in enumerate(rows):
        for j, col in enumerate(cols):
            joined = row + col
            if len(set(joined)) != len(joined):
                raise KeyCollision(f"row {row} and col {col} share labels")
            if len(joined) != need:
                raise ValueError(
                    f"row {row} + col {col} has {len(joined)} labels, need {need}"
                )
            if pad_with_zero_label:
                if 0 in joined:
                    raise KeyCollision("label 0 present in a padded block")
                joined = joined + (0,)
            out[i, j] = T[joined]
    return out


def omega_norm(T: IncompleteSymmetricTensor, keys: list[TensorKey]) -> float:
    """sqrt(m! * sum |T[key]|^2): each sorted distinct-index key counted
    with its m! ordered occurrences."""
    total = 0.0
    for key in keys:
        total += abs(T[key]) ** 2
    return math.sqrt(math.factorial(T.m) * total)


def subtract(
    A: IncompleteSymmetricTensor, B: IncompleteSymmetricTensor, keys: list[TensorKey]
) -> IncompleteSymmetricTensor:
    """Entrywise A - B on the given keys."""
    return IncompleteSymmetricTensor(
        A.d, A.m, {tuple(k): A[k] - B[k] for k in keys}
    )


def perturb(
    T: IncompleteSymmetricTensor, epsilon: float, seed: int
) -> IncompleteSymmetricTensor:
    """Add a real Gaussian noise tensor on the same keys, rescaled so its
    weighted norm equals ``epsilon``.  Deterministic per seed."""
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    if epsilon == 0:
        return IncompleteSymmetricTensor(T.d, T.m, dict(T.entries))
    keys = T.keys()
    noise = rng_from(seed, "perturb").standard_normal(len(keys))
    scale = epsilon / math.sqrt(math.factorial(T.m) * float(noise @ noise))
    entries = {
        k: T.entries[k] + scale * g for k, g in zip(keys, noise)
    }
    return IncompleteSymmetricTensor(T.d, T.m, entries)


def to_json(T: IncompleteSymmetricTensor) -> str:
    records = [
        {"key": list(k), "re": float(v.real), "im": float(v.imag)}
        for k, v in sorted(T.entries.items())
    ]
    return json.dumps({"d": T.d, "m": T.m, "entries": records}, indent=1)


def from_json(text: str) -> IncompleteSymmetricTensor:
    doc = json.loads(text)
    d, m = int(doc["d"]), int(doc["m"])
    entries: dict[TensorKey, complex] = {}
    prev = None
    for rec in doc["entries"]:
        key = tuple(int(s) for s in rec["key"])
        if any(key[i] > key[i + 1] for i in range(len(key) - 1)):
            raise ValueError(f"unsorted key {key} in tensor file")
        if prev is not None and key <= prev:
            raise ValueError(f"keys not strictly ascending at {key}")
        prev = key
        entries[key] = complex(float(rec["re"]), float(rec.get("im", 0.0)))
    return IncompleteSymmetricTensor(d, m, entries)
