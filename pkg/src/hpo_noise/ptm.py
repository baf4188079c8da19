"""Sparse Pauli transfer matrices stored as identity plus a coordinate list."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from ._validation import (
    ConditioningError,
    MAX_DENSE_QUBITS,
    ContractViolation,
    ValidationError,
    check_pauli_vector,
    check_qubit_count,
)
from .pauli import pauli_matrices

PRUNE_TOL = 1e-14
_MAX_SPARSE_QUBITS = 6


@dataclass(frozen=True)
class Coords:
    """Coordinate list of ``(row, col, value)`` triples held as three arrays."""

    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray

    def __len__(self):
        return int(np.size(self.rows))

    def __iter__(self):
        return iter(zip(self.rows.tolist(), self.cols.tolist(), self.values.tolist()))


def as_coords(entries):
    if isinstance(entries, Coords):
        return entries
    if isinstance(entries, SparsePTM):
        return Coords(entries.rows, entries.cols, entries.values)
    arr = np.asarray(list(entries) if not isinstance(entries, np.ndarray) else entries, dtype=float)
    arr = arr.reshape(-1, 3)
    rows = arr[:, 0].astype(np.int64)
    cols = arr[:, 1].astype(np.int64)
    if np.any(rows != arr[:, 0]) or np.any(cols != arr[:, 1]):
        raise ValidationError("coordinates must be integers")
    return Coords(rows, cols, arr[:, 2].copy())


@dataclass(frozen=True, eq=False)
class SparsePTM:
    """A PTM ``R = I + delta`` with only ``delta`` stored.

    Entries are kept sorted by ``(row, col)``; entries within ``1e-14`` of zero
    are dropped so each channel has one canonical form.  Row 0 of ``delta`` must
    be empty (trace preservation).
    """

    n: int
    rows: np.ndarray = field(repr=False)
    cols: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    check_duplicates: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        n = check_qubit_count(self.n, high=_MAX_SPARSE_QUBITS)
        dim = 4**n
        rows = np.asarray(self.rows, dtype=np.int64).ravel()
        cols = np.asarray(self.cols, dtype=np.int64).ravel()
        values = np.asarray(self.values, dtype=float).ravel()
        if not rows.shape == cols.shape == values.shape:
            raise ValidationError("rows, cols and values must have equal length")
        if rows.size and (rows.min() < 0 or cols.min() < 0 or rows.max() >= dim or cols.max() >= dim):
            raise ValidationError(f"coordinate outside [0, {dim})")
        if not np.all(np.isfinite(values)):
            raise ValidationError("PTM entries must be finite")
        keys = rows * dim + cols
        order = np.argsort(keys, kind="stable")
        keys = keys[order]
        if self.check_duplicates and keys.size and np.any(np.diff(keys) == 0):
            dup = keys[np.flatnonzero(np.diff(keys) == 0)[0]]
            raise ValidationError(f"duplicate coordinate {divmod(int(dup), dim)}")
        values = values[order]
        keep = np.abs(values) >= PRUNE_TOL
        keys, values = keys[keep], values[keep]
        if keys.size and keys[0] < dim:
            raise ValidationError(
                f"row 0 of delta must be empty for a trace-preserving channel; found column {int(keys[0])}"
            )
        rows, cols = keys // dim, keys % dim
        for arr in (rows, cols, values):
            arr.setflags(write=False)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "cols", cols)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_entries(cls, n, entries):
        c = as_coords(entries)
        return cls(n, c.rows, c.cols, c.values)

    @classmethod
    def from_delta(cls, n, delta):
        """Build from a dense or scipy-sparse delta matrix (duplicates are summed)."""
        coo = sp.coo_matrix(delta)
        coo.sum_duplicates()
        return cls(n, coo.row, coo.col, coo.data, check_duplicates=False)

    @classmethod
    def from_matrix(cls, n, matrix):
        """Build from the full PTM ``R`` (dense or sparse)."""
        dim = 4**n
        if sp.issparse(matrix):
            return cls.from_delta(n, sp.csr_matrix(matrix) - sp.identity(dim, format="csr"))
        matrix = np.asarray(matrix, dtype=float)
        if matrix.shape != (dim, dim):
            raise ValidationError(f"expected a {dim}x{dim} matrix, got {matrix.shape}")
        return cls.from_delta(n, matrix - np.eye(dim))

    @property
    def dim(self):
        return 4**self.n

    @property
    def nnz(self):
        return int(self.values.size)

    @property
    def keys(self):
        return self.rows * self.dim + self.cols

    @property
    def entries(self):
        return list(zip(self.rows.tolist(), self.cols.tolist(), self.values.tolist()))

    def delta_matrix(self):
        """``delta`` as a CSR matrix."""
        return sp.csr_matrix((self.values, (self.rows, self.cols)), shape=(self.dim, self.dim))

    def matrix(self):
        """Full ``R`` as a CSR matrix."""
        return self.delta_matrix() + sp.identity(self.dim, format="csr")

    def to_dense(self):
        if self.n > _MAX_SPARSE_QUBITS:
            raise ValidationError("dense PTMs are limited to n <= 6")
        out = np.eye(self.dim)
        out[self.rows, self.cols] += self.values
        return out

    def value_at(self, i, j):
        """Entry ``R[i, j]``."""
        key = int(i) * self.dim + int(j)
        keys = self.keys
        pos = np.searchsorted(keys, key)
        base = 1.0 if i == j else 0.0
        if pos < keys.size and keys[pos] == key:
            return base + float(self.values[pos])
        return base

    def apply(self, v):
        return apply(self, v)

    def equals(self, other):
        """Exact (bitwise) equality of size and stored entries."""
        return (
            self.n == other.n
            and np.array_equal(self.rows, other.rows)
            and np.array_equal(self.cols, other.cols)
            and np.array_equal(self.values, other.values)
        )

    def max_abs_diff(self, other):
        if self.n != other.n:
            raise ValidationError("qubit counts differ")
        diff = self.delta_matrix() - other.delta_matrix()
        return float(abs(diff).max()) if diff.nnz else 0.0


@dataclass(frozen=True)
class TopologyGraph:
    """Qubit count plus coupling edges ``(u, v)`` with ``u < v``."""

    n: int
    edges: tuple = ()

    def __post_init__(self):
        n = check_qubit_count(self.n)
        edges = []
        for edge in self.edges:
            try:
                u, v = (int(x) for x in edge)
            except (TypeError, ValueError):
                raise ValidationError(f"malformed edge {edge!r}") from None
            if not 0 <= u < v < n:
                raise ValidationError(f"edge ({u}, {v}) must satisfy 0 <= u < v < {n}")
            edges.append((u, v))
        if len(set(edges)) != len(edges):
            raise ValidationError("duplicate edge in topology")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "edges", tuple(edges))

    @classmethod
    def chain(cls, n):
        return cls(n, tuple((k, k + 1) for k in range(n - 1)))


def identity_ptm(n):
    return SparsePTM(n, [], [], [])


def ptm_from_kraus(n, kraus, *, atol=1e-10):
    """PTM of the channel ``rho -> sum_k K rho K^dag``, entry by entry
    ``R_ij = Tr[P_i E(P_j)] / 2^n``.
    """
    n = check_qubit_count(n, high=MAX_DENSE_QUBITS)
    d = 2**n
    ops = np.asarray(kraus, dtype=complex)
    if ops.ndim == 2:
        ops = ops[None]
    if ops.ndim != 3 or ops.shape[1:] != (d, d) or ops.shape[0] == 0:
        raise ValidationError(f"Kraus operators must be a nonempty stack of {d}x{d} matrices")
    completeness = np.einsum("kba,kbc->ac", ops.conj(), ops)
    if not np.allclose(completeness, np.eye(d), atol=atol, rtol=0):
        raise ValidationError("Kraus operators are not trace preserving (sum K^dag K != I)")
    paulis = pauli_matrices(n)
    evolved = np.einsum("kab,jbc,kdc->jad", ops, paulis, ops.conj(), optimize=True)
    # Tr[P_i E_j] = sum_ab P_i[a, b] E_j[b, a]
    full = paulis.reshape(4**n, -1) @ evolved.transpose(0, 2, 1).reshape(4**n, -1).T / d
    if np.max(np.abs(full.imag)) > atol:
        raise ValidationError("PTM has a non-negligible imaginary part")
    return SparsePTM.from_matrix(n, full.real)


def tensor_product(*ptms):
    """PTM of independent channels; the first argument acts on qubit 0."""
    n = sum(p.n for p in ptms)
    out = sp.identity(1, format="csr")
    for p in ptms:
        out = sp.kron(p.matrix(), out, format="csr")
    return SparsePTM.from_matrix(n, out)


def _spectator_offsets(qubits, n_global):
    spectators = [q for q in range(n_global) if q not in qubits]
    offsets = np.zeros(1, dtype=np.int64)
    for q in spectators:
        offsets = (offsets[:, None] + (np.arange(4, dtype=np.int64) << (2 * q))[None, :]).ravel()
    return np.sort(offsets)


def _scatter_digits(local, qubits):
    """Map local indices (qubit k of the block is ``qubits[k]``) to global digit positions."""
    local = np.asarray(local, dtype=np.int64)
    out = np.zeros_like(local)
    for k, q in enumerate(qubits):
        out += ((local >> (2 * k)) & 3) << (2 * q)
    return out


def embed(ptm, qubits, n_global):
    """Act with ``ptm`` on ``qubits`` and as the identity on every other qubit."""
    qubits = tuple(int(q) for q in qubits)
    n_global = check_qubit_count(n_global, high=_MAX_SPARSE_QUBITS)
    if len(qubits) != ptm.n:
        raise ValidationError(f"{ptm.n}-qubit PTM cannot act on qubits {qubits}")
    if len(set(qubits)) != len(qubits) or any(not 0 <= q < n_global for q in qubits):
        raise ValidationError(f"qubits {qubits} invalid for n={n_global}")
    offsets = _spectator_offsets(qubits, n_global)
    rows = _scatter_digits(ptm.rows, qubits)[:, None] + offsets[None, :]
    cols = _scatter_digits(ptm.cols, qubits)[:, None] + offsets[None, :]
    values = np.broadcast_to(ptm.values[:, None], rows.shape)
    return SparsePTM(n_global, rows.ravel(), cols.ravel(), values.ravel())


def lift_edge(r2, edge, n_global):
    """Lift a 2-qubit PTM onto ``edge = (u, v)``: block qubit 0 is ``u``, qubit 1 is ``v``."""
    if r2.n != 2:
        raise ValidationError(f"lift_edge expects a 2-qubit PTM, got n={r2.n}")
    u, v = edge
    if u == v:
        raise ValidationError("edge endpoints must differ")
    return embed(r2, (u, v), n_global)


def restrict(ptm, qubits):
    """Marginal block on ``qubits``: entries whose spectator letters are all identity."""
    qubits = tuple(qubits)
    k = len(qubits)
    local = np.arange(4**k, dtype=np.int64)
    glob = _scatter_digits(local, qubits)
    sub = ptm.matrix()[glob][:, glob]
    return SparsePTM.from_matrix(k, sub)


def compose(*ptms):
    """Matrix product ``ptms[0] @ ptms[1] @ ...`` (the last argument acts first)."""
    n = ptms[0].n
    if any(p.n != n for p in ptms):
        raise ValidationError("cannot compose PTMs of different sizes")
    out = ptms[-1].matrix()
    for p in reversed(ptms[:-1]):
        out = p.matrix() @ out
    return SparsePTM.from_matrix(n, out)


def compose_global(graph, edge_ptms):
    """Product of lifted edge PTMs; the lexicographically first edge acts first."""
    lookup = {tuple(int(x) for x in e): p for e, p in dict(edge_ptms).items()}
    layers = []
    for edge in sorted(graph.edges):
        if edge not in lookup:
            raise ValidationError(f"no PTM assigned to edge {edge}")
        layers.append(lift_edge(lookup[edge], edge, graph.n))
    if not layers:
        return identity_ptm(graph.n)
    return compose(*reversed(layers))


def effective_ptm(frozen, residual, mask):
    """``I + frozen_delta + residual``; every residual coordinate must lie in ``mask``."""
    res = as_coords(residual)
    if mask.n != frozen.n:
        raise ValidationError(f"mask is for n={mask.n}, frozen model for n={frozen.n}")
    if len(res):
        missing = mask.index_of(res.rows, res.cols) < 0
        if np.any(missing):
            k = int(np.flatnonzero(missing)[0])
            raise ContractViolation(
                f"residual coordinate ({int(res.rows[k])}, {int(res.cols[k])}) lies outside the mask"
            )
    if len(res) and np.unique(res.rows * frozen.dim + res.cols).size != len(res):
        raise ValidationError("duplicate residual coordinate")
    rows = np.concatenate([frozen.rows, res.rows])
    cols = np.concatenate([frozen.cols, res.cols])
    values = np.concatenate([frozen.values, res.values])
    delta = sp.coo_matrix((values, (rows, cols)), shape=(frozen.dim, frozen.dim))
    return SparsePTM.from_delta(frozen.n, delta)


def apply(r, v):
    """``R v`` for one Pauli vector or a batch stacked along the first axis."""
    arr = check_pauli_vector(v, r.n)
    if arr.ndim == 1:
        return arr + r.delta_matrix() @ arr
    return arr + (r.delta_matrix() @ arr.T).T


MAX_CONDITION = 1e8


def invert(ptm, max_condition=MAX_CONDITION):
    """Dense inverse of ``R``; raises :class:`ConditioningError` when ill-conditioned."""
    if ptm.n > MAX_DENSE_QUBITS:
        raise ValidationError(f"dense inversion is limited to n <= {MAX_DENSE_QUBITS}")
    dense = ptm.to_dense()
    cond = float(np.linalg.cond(dense))
    if not np.isfinite(cond) or cond >= max_condition:
        raise ConditioningError(
            f"PTM condition number {cond:.3e} exceeds {max_condition:.1e}", condition_number=cond
        )
    return np.linalg.inv(dense)
