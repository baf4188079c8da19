import pytest
from hypothesis import given
from hypothesis import strategies as st

from hpo_noise import ValidationError
from hpo_noise.pauli import (
    PauliString,
    decode,
    encode,
    enumerate_basis,
    hamming_distance,
    index_hamming,
    weight,
    weight_table,
)

from conftest import words


@pytest.mark.parametrize("letters, index", [("II", 0), ("XI", 1), ("IZ", 12), ("ZZ", 15), ("XIZ", 49)])
def test_encode(letters, index):
    assert encode(letters) == index
    assert decode(index, len(letters)) == letters


@pytest.mark.parametrize("letters, w", [("II", 0), ("XZ", 2), ("XIZ", 2), ("YYYY", 4)])
def test_weight(letters, w):
    assert weight(letters) == w
    assert PauliString(letters).weight == w


@pytest.mark.parametrize("p, q, d", [("XX", "XX", 0), ("XY", "ZY", 1), ("III", "XYZ", 3)])
def test_hamming_distance(p, q, d):
    assert hamming_distance(p, q) == d


def test_rejects_bad_input():
    with pytest.raises(ValidationError):
        encode("XA")
    with pytest.raises(ValidationError):
        encode("")
    with pytest.raises(ValidationError):
        hamming_distance("XX", "XXX")
    with pytest.raises(ValidationError):
        enumerate_basis(13)
    with pytest.raises(ValidationError):
        enumerate_basis(0)


def test_enumerate_basis_order():
    assert [str(p) for p in enumerate_basis(1)] == ["I", "X", "Y", "Z"]
    two = [str(p) for p in enumerate_basis(2)]
    assert len(two) == 16
    assert two[:4] == ["II", "XI", "YI", "ZI"]
    assert len(enumerate_basis(3)) == 64
    assert [str(p) for p in enumerate_basis(3)] == words(3)


@pytest.mark.parametrize("n", range(1, 7))
def test_round_trip_exhaustive(n):
    for k in range(4**n):
        assert encode(decode(k, n)) == k


@pytest.mark.parametrize("n", range(1, 7))
def test_full_weight_count(n):
    w = weight_table(n)
    assert w.max() == n
    assert int((w == n).sum()) == 3**n
    assert all(w[k] == weight(decode(k, n)) for k in range(0, 4**n, 7))


pauli_pairs = st.integers(1, 8).flatmap(
    lambda n: st.tuples(*(st.text("IXYZ", min_size=n, max_size=n) for _ in range(3)))
)


@given(pauli_pairs)
def test_hamming_metric_axioms(triple):
    p, q, r = triple
    assert hamming_distance(p, q) >= 0
    assert (hamming_distance(p, q) == 0) == (p == q)
    assert hamming_distance(p, q) == hamming_distance(q, p)
    assert hamming_distance(p, r) <= hamming_distance(p, q) + hamming_distance(q, r)


@given(pauli_pairs)
def test_index_hamming_matches_letters(triple):
    p, q, _ = triple
    assert int(index_hamming(encode(p), encode(q))) == hamming_distance(p, q)
