import itertools
import random

import numpy as np
import pytest

from src.algebra import (PrimeField, dot_product, field_arith, hamming_dist, hamming_weight,
                         mod_matmul)
from src.errors import DivisionByZero, LengthMismatch, MismatchedFields, ParameterError


F5 = PrimeField(5)


def test_field_rejects_composite_and_out_of_range_moduli():
    for bad in (0, 1, 4, 9, 2**61):
        with pytest.raises(ParameterError):
            PrimeField(bad)
    assert PrimeField(2**61 - 1).q == 2**61 - 1,\
           "The largest supported modulus is the Mersenne prime 2^61-1"


def test_field_arith_examples():
    assert field_arith(F5(2), F5(4), "add") == F5(1), "2 + 4 = 1 in F_5"
    assert field_arith(F5(1), F5(3), "div") == F5(2), "1 / 3 = 2 in F_5"
    assert F5(2) - F5(4) == F5(3), "2 - 4 = 3 in F_5"
    assert F5(3) * F5(4) == F5(2), "3 * 4 = 2 in F_5"
    assert -F5(1) == F5(4), "Negation wraps into [0, q)"
    with pytest.raises(DivisionByZero):
        field_arith(F5(4), F5(0), "div")


def test_field_arith_rejects_mixed_fields():
    with pytest.raises(MismatchedFields):
        field_arith(F5(1), PrimeField(7)(1), "add")


@pytest.mark.parametrize("q", [2, 3, 5, 7])
def test_field_axioms_exhaustive(q):
    field = PrimeField(q)
    elements = [field(v) for v in range(q)]
    for a, b, c in itertools.product(elements, repeat=3):
        assert (a + b) + c == a + (b + c), "Addition must be associative"
        assert a * (b + c) == a * b + a * c, "Multiplication must distribute over addition"
    for a in elements[1:]:
        assert a * (field(1) / a) == field(1), f"{a.value} times its inverse must be 1"


def test_element_bytes_are_canonical():
    field = PrimeField(7)
    assert field(6).to_bytes() == b"\x00" * 7 + b"\x06", "Elements encode as 8-byte big-endian"
    assert field.element_from_bytes(field(6).to_bytes()) == field(6)
    with pytest.raises(ParameterError):
        field.element_from_bytes(b"\x00" * 7 + b"\x07")
    with pytest.raises(ParameterError):
        field.element_from_bytes(b"\x01")


def test_vector_construction_keeps_values_canonical():
    assert F5.vector([7, -1, 5]).values == (2, 4, 0), "vector() reduces modulo q"
    with pytest.raises(ParameterError):
        F5.vector([])
    v = F5.vector([1, 2, 3])
    assert (v + v).values == (2, 4, 1)
    assert (v - v.scale(2)).values == (4, 3, 2)
    assert [e.value for e in v] == [1, 2, 3], "Iteration yields field elements"


def test_dot_product_examples():
    assert dot_product(F5.vector([1, 2, 0, 3]), F5.vector([4, 1, 1, 1])) == F5(4),\
           "(1,2,0,3).(4,1,1,1) = 9 = 4 in F_5"
    assert dot_product(F5.zero_vector(4), F5.vector([4, 1, 1, 1])) == F5(0),\
           "The zero vector annihilates"
    F3 = PrimeField(3)
    assert dot_product(F3.vector([1, 1]), F3.vector([1, 2])) == F3(0), "1 + 2 = 0 in F_3"
    with pytest.raises(LengthMismatch):
        dot_product(F5.vector([1, 2]), F5.vector([1, 2, 3]))
    with pytest.raises(MismatchedFields):
        dot_product(F5.vector([1, 2]), F3.vector([1, 2]))


def test_hamming_examples():
    v = F5.vector([1, 2, 3])
    assert hamming_dist(v, v) == 0
    assert hamming_dist(v, F5.vector([1, 0, 3])) == 1
    assert hamming_weight(F5.vector([0, 4, 0, 1])) == 2
    with pytest.raises(LengthMismatch):
        hamming_dist(v, F5.vector([1, 2]))


def test_hamming_distance_is_a_metric_on_random_triples():
    rng = random.Random(11)
    for _ in range(500):
        u, v, w = (F5.vector(rng.randrange(5) for _ in range(6)) for _ in range(3))
        assert hamming_dist(u, w) <= hamming_dist(u, v) + hamming_dist(v, w),\
               "Triangle inequality must hold"
        assert hamming_dist(u, v) == hamming_dist(v, u)
        assert hamming_dist(u, v) == hamming_weight(u - v)


def test_mod_matmul_handles_large_moduli_exactly():
    q = 2**61 - 1
    left = np.array([[q - 1, q - 2]], dtype=object)
    right = np.array([[q - 1], [q - 1]], dtype=object)
    expected = ((q - 1) * (q - 1) + (q - 2) * (q - 1)) % q
    assert int(mod_matmul(left, right, q)[0, 0]) == expected,\
           "Products above 2^63 must fall back to exact integers"
