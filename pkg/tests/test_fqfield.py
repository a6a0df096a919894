import numpy as np
import pytest
from hypothesis import given, strategies as st

from fqpatterns.fqfield import field, prime_power

QS = [2, 4, 8, 9, 16, 25, 27, 32, 49, 64, 81]


@pytest.mark.parametrize("q", QS)
def test_tables_form_a_field(q):
    F = field(q)
    x = F.elements
    A, M = F.add_table, F.mul_table
    assert np.array_equal(A, A.T) and np.array_equal(M, M.T)
    assert np.array_equal(A[0], x) and np.array_equal(M[1], x)
    for row in A:
        assert np.array_equal(np.sort(row), x)
    for row in M[1:]:
        assert np.array_equal(np.sort(row[1:]), x[1:])
    assert np.array_equal(A[x, F.neg_table], np.zeros(q, dtype=A.dtype))


@given(st.sampled_from(QS), st.data())
def test_associativity_and_distributivity(q, data):
    F = field(q)
    a, b, c = (data.draw(st.integers(0, q - 1)) for _ in range(3))
    assert F.add(F.add(a, b), c) == F.add(a, F.add(b, c))
    assert F.mul(F.mul(a, b), c) == F.mul(a, F.mul(b, c))
    assert F.mul(a, F.add(b, c)) == F.add(F.mul(a, b), F.mul(a, c))


@pytest.mark.parametrize("q", QS)
def test_tables_match_polynomial_arithmetic(q):
    F = field(q)
    rng = np.random.default_rng(q)
    for a, b in rng.integers(q, size=(20, 2)):
        pa, pb = F.poly_of(a), F.poly_of(b)
        assert F.index_of(pa + pb) == F.add(a, b)
        assert F.index_of(pa * pb) == F.mul(a, b)


@pytest.mark.parametrize("q", [4, 9, 16, 27])
def test_frobenius_is_additive(q):
    F = field(q)
    x = F.elements
    fx = F.powers_of_all(F.p)
    lhs = fx[F.add_table]
    rhs = F.add_table[fx[:, None], fx[None, :]]
    assert np.array_equal(lhs, rhs)


@pytest.mark.parametrize("q", [4, 8, 9, 25, 27])
def test_characters_are_orthonormal(q):
    F = field(q)
    C = F.char_matrix
    assert np.allclose(C @ C.conj().T / q, np.eye(q), atol=1e-12)
    # chi_s(x + y) = chi_s(x) chi_s(y)
    s = q - 1
    v = F.char_values(s)
    assert np.allclose(v[F.add_table], np.outer(v, v), atol=1e-12)


def test_prime_power():
    assert prime_power(81) == (3, 4)
    assert prime_power(7) == (7, 1)
    with pytest.raises(ValueError):
        prime_power(12)
