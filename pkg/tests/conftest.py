import itertools

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

SIGMA = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def pauli_operator(letters):
    """Dense operator for a Pauli word; letter k acts on qubit k (rightmost Kronecker factor)."""
    out = np.ones((1, 1), dtype=complex)
    for letter in letters:
        out = np.kron(SIGMA[letter], out)
    return out


def words(n):
    """All Pauli words of length n in little-endian base-4 order, built by hand."""
    out = []
    for digits in itertools.product(range(4), repeat=n):
        # itertools varies the last position fastest; reverse so qubit 0 is least significant
        out.append("".join("IXYZ"[d] for d in reversed(digits)))
    return out


def explicit_ptm(n, kraus):
    """Entry-by-entry evaluation of R_ij = Tr[P_i E(P_j)] / 2^n with explicit loops."""
    basis = [pauli_operator(w) for w in words(n)]
    d = 2**n
    out = np.zeros((4**n, 4**n))
    for j, pj in enumerate(basis):
        evolved = sum(k @ pj @ k.conj().T for k in kraus)
        for i, pi in enumerate(basis):
            out[i, j] = np.trace(pi @ evolved).real / d
    return out


def dense_lift(r2_dense, edge, n):
    """Reference lifting: kron with identity on spectators, then permute qubit axes."""
    u, v = edge
    big = np.kron(np.eye(4 ** (n - 2)), r2_dense)
    # axes in C order are most-significant first: axis a <-> qubit n-1-a
    t = big.reshape((4,) * (2 * n))
    # currently qubit 0 of the block sits at qubit 0, block qubit 1 at qubit 1, spectators at 2..n-1
    spectators = [q for q in range(n) if q not in edge]
    current_to_target = {0: u, 1: v}
    for k, q in enumerate(spectators):
        current_to_target[2 + k] = q
    perm = [0] * n
    for cur, tgt in current_to_target.items():
        perm[n - 1 - tgt] = n - 1 - cur
    t = t.transpose(perm + [p + n for p in perm])
    return t.reshape(4**n, 4**n)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
