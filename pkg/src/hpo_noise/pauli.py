"""Pauli strings as basis labels.

Strings are indexed little-endian in base 4: qubit 0 is the least significant
digit and the letters map to digits ``I=0, X=1, Y=2, Z=3``.  So ``"XI"`` (X on
qubit 0) is index 1 and ``"IZ"`` (Z on qubit 1) is index 12.  The same ordering
is used for every vector and matrix in the package.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ._validation import MAX_QUBITS, ValidationError, check_qubit_count

LETTERS = "IXYZ"
_DIGIT = {letter: k for k, letter in enumerate(LETTERS)}


def _coerce_letters(p):
    if isinstance(p, PauliString):
        return p.letters
    if not isinstance(p, str):
        p = "".join(p)
    return p


def encode(letters):
    """Return the base-4 index of a Pauli word such as ``"XIZ"``."""
    letters = _coerce_letters(letters)
    if not letters:
        raise ValidationError("a Pauli string needs at least one letter")
    if len(letters) > MAX_QUBITS:
        raise ValidationError(f"Pauli strings are capped at {MAX_QUBITS} letters")
    index = 0
    for k, letter in enumerate(letters):
        try:
            index += _DIGIT[letter] * 4**k
        except KeyError:
            raise ValidationError(f"invalid Pauli letter {letter!r} in {letters!r}") from None
    return index


def decode(index, n):
    """Inverse of :func:`encode` for an ``n``-qubit string."""
    n = check_qubit_count(n)
    index = int(index)
    if not 0 <= index < 4**n:
        raise ValidationError(f"index {index} outside [0, 4^{n})")
    out = []
    for _ in range(n):
        index, digit = divmod(index, 4)
        out.append(LETTERS[digit])
    return "".join(out)


@dataclass(frozen=True)
class PauliString:
    letters: str

    def __post_init__(self):
        encode(self.letters)  # validates

    @classmethod
    def from_index(cls, index, n):
        return cls(decode(index, n))

    @property
    def n(self):
        return len(self.letters)

    @property
    def index(self):
        return encode(self.letters)

    @property
    def weight(self):
        return weight(self.letters)

    def __str__(self):
        return self.letters


def weight(p):
    """Number of non-identity letters."""
    letters = _coerce_letters(p)
    encode(letters)
    return sum(letter != "I" for letter in letters)


def hamming_distance(p, q):
    """Number of qubit positions where the two strings carry different letters."""
    a, b = _coerce_letters(p), _coerce_letters(q)
    if len(a) != len(b):
        raise ValidationError(f"length mismatch: {len(a)} vs {len(b)}")
    encode(a)
    encode(b)
    return sum(x != y for x, y in zip(a, b))


def enumerate_basis(n):
    """All ``4**n`` strings in ascending index order."""
    n = check_qubit_count(n)
    return [PauliString(decode(k, n)) for k in range(4**n)]


@lru_cache(maxsize=None)
def digit_table(n):
    """``(4**n, n)`` array; entry ``[k, q]`` is the letter digit of string ``k`` on qubit ``q``."""
    n = check_qubit_count(n)
    idx = np.arange(4**n, dtype=np.int64)
    table = (idx[:, None] >> (2 * np.arange(n, dtype=np.int64))[None, :]) & 3
    table.setflags(write=False)
    return table


@lru_cache(maxsize=None)
def weight_table(n):
    """Pauli weight of every index, as an int array of length ``4**n``."""
    w = np.count_nonzero(digit_table(n), axis=1).astype(np.int64)
    w.setflags(write=False)
    return w


def index_hamming(i, j):
    """Vectorized Hamming distance between index arrays (same qubit count)."""
    x = np.bitwise_xor(np.asarray(i, dtype=np.int64), np.asarray(j, dtype=np.int64))
    # a digit differs iff either of its two bits differs
    marks = (x | (x >> 1)) & 0x555555555555
    return _popcount(marks)


def _popcount(x):
    x = np.asarray(x, dtype=np.int64)
    count = np.zeros_like(x)
    while np.any(x):
        count += x & 1
        x = x >> 1
    return count


_SINGLE = np.array(
    [
        [[1, 0], [0, 1]],
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)


@lru_cache(maxsize=8)
def pauli_matrices(n):
    """Dense ``(4**n, 2**n, 2**n)`` stack of Pauli operators in index order.

    Computational-basis states are little-endian as well, so qubit ``n-1`` is
    the leftmost Kronecker factor.
    """
    n = check_qubit_count(n, high=6)
    mats = np.ones((1, 1, 1), dtype=complex)
    for _ in range(n):
        mats = np.einsum("dab,kce->dkacbe", _SINGLE, mats)
        size = mats.shape[2] * mats.shape[3]
        mats = mats.reshape(-1, size, size)
    mats.setflags(write=False)
    return mats
