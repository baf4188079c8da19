"""Baseline and residual masks over the PTM coordinate grid, plus their counts.

A mask selects ``(row, col)`` pairs of Pauli indices.  The baseline rule keeps
pairs where at least one string has weight ``<= w_max`` and the strings differ
on at most ``d_max`` qubits; the residual rule keeps pairs where at least one
string has weight exactly ``w_exact`` (default: all qubits) and again
``D_H <= d_max``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations, product
from math import comb

import numpy as np

from ._validation import ValidationError, check_enumerable, check_qubit_count
from .pauli import digit_table, index_hamming, weight_table

BASELINE = "baseline"
RESIDUAL = "residual"


@dataclass(frozen=True)
class MaskSpec:
    n: int
    kind: str
    weight: int
    d_max: int = 2

    def __post_init__(self):
        check_qubit_count(self.n)
        if self.kind not in (BASELINE, RESIDUAL):
            raise ValidationError(f"unknown mask kind {self.kind!r}")
        if not 0 <= self.weight <= self.n:
            raise ValidationError(f"weight {self.weight} outside [0, {self.n}]")
        if self.d_max < 0:
            raise ValidationError("d_max must be nonnegative")

    @classmethod
    def baseline(cls, n, w_max=2, d_max=2):
        return cls(n, BASELINE, min(w_max, n), d_max)

    @classmethod
    def residual(cls, n, w_exact=None, d_max=2):
        return cls(n, RESIDUAL, n if w_exact is None else w_exact, d_max)

    def predicate(self, i, j, w_i, w_j, dist):
        """Evaluate the mask rule on (broadcastable) weight and distance arrays."""
        if self.kind == BASELINE:
            touches = (w_i <= self.weight) | (w_j <= self.weight)
        else:
            touches = (w_i == self.weight) | (w_j == self.weight)
        return touches & (dist <= self.d_max)

    def contains(self, i, j):
        """Predicate on index arrays, computed from scratch."""
        w = weight_table(self.n)
        i = np.asarray(i, dtype=np.int64)
        j = np.asarray(j, dtype=np.int64)
        return self.predicate(i, j, w[i], w[j], index_hamming(i, j))


@dataclass(frozen=True, eq=False)
class MaskSet:
    """Materialized mask: sorted, duplicate-free ``(row, col)`` pairs."""

    n: int
    keys: np.ndarray = field(repr=False)
    spec: MaskSpec | None = None

    def __post_init__(self):
        keys = np.asarray(self.keys, dtype=np.int64)
        if keys.size and np.any(np.diff(keys) <= 0):
            keys = np.unique(keys)
        keys.setflags(write=False)
        object.__setattr__(self, "keys", keys)

    @classmethod
    def from_pairs(cls, n, pairs, spec=None):
        pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
        return cls(n, pairs[:, 0] * 4**n + pairs[:, 1], spec)

    @property
    def dim(self):
        return 4**self.n

    @property
    def rows(self):
        return self.keys // self.dim

    @property
    def cols(self):
        return self.keys % self.dim

    @property
    def pairs(self):
        return np.stack([self.rows, self.cols], axis=1)

    def __len__(self):
        return int(self.keys.size)

    def __iter__(self):
        for key in self.keys.tolist():
            yield divmod(key, self.dim)

    def __contains__(self, pair):
        i, j = pair
        return bool(self.index_of([i], [j])[0] >= 0)

    def index_of(self, rows, cols):
        """Position of each ``(row, col)`` in :attr:`keys`, or -1 when absent."""
        key = np.asarray(rows, dtype=np.int64) * self.dim + np.asarray(cols, dtype=np.int64)
        pos = np.searchsorted(self.keys, key)
        pos_clip = np.minimum(pos, max(len(self) - 1, 0))
        hit = (pos < len(self)) & (self.keys[pos_clip] == key) if len(self) else np.zeros(key.shape, bool)
        return np.where(hit, pos, -1)

    def without_row_zero(self):
        return MaskSet(self.n, self.keys[self.keys >= self.dim], self.spec)


def _neighbour_offsets(n, d_max):
    """XOR offsets that move a string to every other string within ``d_max`` letters."""
    offsets = [0]
    for size in range(1, min(d_max, n) + 1):
        for qubits in combinations(range(n), size):
            for letters in product((1, 2, 3), repeat=size):
                offsets.append(sum(c << (2 * q) for c, q in zip(letters, qubits)))
    return np.asarray(offsets, dtype=np.int64)


def materialize(spec):
    """Return the exact :class:`MaskSet` described by ``spec``.

    Residual masks are grown from the weight-``w_exact`` strings and their
    distance-``d_max`` neighbourhoods rather than scanning all ``16**n`` pairs.
    """
    n = spec.n
    check_enumerable(n)
    dim = 4**n
    w = weight_table(n)
    if spec.kind == RESIDUAL:
        seeds = np.flatnonzero(w == spec.weight).astype(np.int64)
        partners = seeds[:, None] ^ _neighbour_offsets(n, spec.d_max)[None, :]
        seeds = np.broadcast_to(seeds[:, None], partners.shape)
        keys = np.concatenate([(seeds * dim + partners).ravel(), (partners * dim + seeds).ravel()])
        return MaskSet(n, np.unique(keys), spec)

    idx = np.arange(dim, dtype=np.int64)
    chunks = []
    step = max(1, (1 << 20) // dim)
    for start in range(0, dim, step):
        i = idx[start:start + step, None]
        keep = spec.predicate(i, idx[None, :], w[i], w[None, :], index_hamming(i, idx[None, :]))
        r, c = np.nonzero(keep)
        chunks.append((r + start) * dim + c)
    return MaskSet(n, np.concatenate(chunks), spec)


def brute_force_count(spec):
    """Count mask pairs by evaluating the rule on every one of the ``16**n`` pairs.

    Deliberately uses a different code path from :func:`materialize`: letters
    are compared digit by digit and weights are recounted per row block.
    """
    n = spec.n
    check_enumerable(n, "brute-force counting")
    digits = digit_table(n)
    dim = 4**n
    weights = np.count_nonzero(digits, axis=1)
    total = 0
    step = max(1, (1 << 18) // (dim * n))
    for start in range(0, dim, step):
        block = digits[start:start + step]
        dist = np.count_nonzero(block[:, None, :] != digits[None, :, :], axis=2)
        w_i = np.count_nonzero(block, axis=1)[:, None]
        total += int(np.count_nonzero(spec.predicate(None, None, w_i, weights[None, :], dist)))
    return total


def count_A(n):
    """Pairs whose row string has full weight and whose column is within distance 2."""
    n = check_qubit_count(n, high=10**6)
    return 3**n * (1 + 3 * n + 9 * comb(n, 2))


def count_intersection(n):
    """Pairs where both strings have full weight and differ in at most 2 letters."""
    n = check_qubit_count(n, high=10**6)
    return 3**n * (1 + 2 * n + 4 * comb(n, 2))


def k_res_closed_form(n):
    """Number of active residual parameters, ``3^n (1 + 4n + 14 C(n, 2))``."""
    n = check_qubit_count(n, high=10**6)
    return 3**n * (1 + 4 * n + 14 * comb(n, 2))


def active_parameters(n):
    """Active count in the table sense: the full baseline block at n=2, K_res above."""
    return 256 if n == 2 else k_res_closed_form(n)


def compression_rate(n):
    n = check_qubit_count(n, low=2, high=10**6)
    return 1.0 - active_parameters(n) / 16**n


def format_rate(rate):
    return "0%" if rate == 0 else f"{100 * rate:.1f}%"


def base_complexity(graph):
    """Upper bound on baseline parameters: 256 per coupling edge."""
    return 256 * len(graph.edges)


def table1_rows(ns=(2, 3, 4, 5)):
    return [
        {
            "n": n,
            "full": 16**n,
            "active": active_parameters(n),
            "compression": format_rate(compression_rate(n)),
        }
        for n in ns
    ]
