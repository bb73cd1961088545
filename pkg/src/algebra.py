"""
algebra.py: Prime-field arithmetic and vector operations underlying every scheme.
Elements are kept in canonical form (0 <= value < q) from construction onwards.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Iterable, Iterator, Literal

import numpy as np
from sympy import isprime

from .errors import (DivisionByZero, LengthMismatch, MismatchedFields,
                     ParameterError)

MAX_MODULUS = 2**61 - 1
ELEMENT_BYTES = 8

ArithKind = Literal["add", "sub", "mul", "div"]


@dataclass(frozen=True)
class PrimeField:
    """
    The prime field F_q. The modulus is checked for primality when the field is created.
    """
    q: int

    def __post_init__(self):
        if not isinstance(self.q, int) or isinstance(self.q, bool):
            raise ParameterError(f"Field modulus must be an integer, got {self.q!r}")
        if not 2 <= self.q <= MAX_MODULUS:
            raise ParameterError(f"Field modulus {self.q} outside supported range [2, 2^61-1]")
        if not isprime(self.q):
            raise ParameterError(f"Field modulus {self.q} is not prime")

    def __call__(self, value: int) -> FieldElement:
        return FieldElement(value % self.q, self)

    def vector(self, values: Iterable[int]) -> FieldVector:
        """Build a vector from integers, reducing each modulo q."""
        return FieldVector(self, tuple(int(v) % self.q for v in values))

    def zero_vector(self, length: int) -> FieldVector:
        return FieldVector(self, (0,) * length)

    def inverse(self, value: int) -> int:
        """Multiplicative inverse of a canonical value (extended Euclid via pow)."""
        if value % self.q == 0:
            raise DivisionByZero(f"0 has no inverse in F_{self.q}")
        return pow(value, -1, self.q)

    def element_from_bytes(self, data: bytes) -> FieldElement:
        """Parse an 8-byte big-endian element, rejecting non-canonical values."""
        if len(data) != ELEMENT_BYTES:
            raise ParameterError(f"Field element encoding must be {ELEMENT_BYTES} bytes")
        (value,) = struct.unpack(">Q", data)
        if value >= self.q:
            raise ParameterError(f"Encoded value {value} is not below q={self.q}")
        return FieldElement(value, self)


@dataclass(frozen=True)
class FieldElement:
    """An element of a prime field in canonical representation."""
    value: int
    field: PrimeField

    def __post_init__(self):
        if not 0 <= self.value < self.field.q:
            raise ParameterError(
                f"{self.value} is not a canonical representative of F_{self.field.q}")

    def __add__(self, other: FieldElement) -> FieldElement:
        return field_arith(self, other, "add")

    def __sub__(self, other: FieldElement) -> FieldElement:
        return field_arith(self, other, "sub")

    def __mul__(self, other: FieldElement) -> FieldElement:
        return field_arith(self, other, "mul")

    def __truediv__(self, other: FieldElement) -> FieldElement:
        return field_arith(self, other, "div")

    def __neg__(self) -> FieldElement:
        return FieldElement((-self.value) % self.field.q, self.field)

    def __int__(self) -> int:
        return self.value

    def to_bytes(self) -> bytes:
        return struct.pack(">Q", self.value)


@dataclass(frozen=True)
class FieldVector:
    """
    An ordered vector over a single prime field. Values are stored as canonical integers;
    element access wraps them back into FieldElement.
    """
    field: PrimeField
    values: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(int(v) for v in self.values))
        if len(self.values) == 0:
            raise ParameterError("A field vector must have positive length")
        q = self.field.q
        for value in self.values:
            if not 0 <= value < q:
                raise ParameterError(f"{value} is not a canonical representative of F_{q}")

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, index: int) -> FieldElement:
        return FieldElement(self.values[index], self.field)

    def __iter__(self) -> Iterator[FieldElement]:
        return (FieldElement(v, self.field) for v in self.values)

    @property
    def elements(self) -> tuple[FieldElement, ...]:
        return tuple(self)

    @property
    def length(self) -> int:
        return len(self.values)

    def __add__(self, other: FieldVector) -> FieldVector:
        _check_compatible(self, other)
        q = self.field.q
        return FieldVector(self.field, tuple((a + b) % q for a, b in zip(self.values, other.values)))

    def __sub__(self, other: FieldVector) -> FieldVector:
        _check_compatible(self, other)
        q = self.field.q
        return FieldVector(self.field, tuple((a - b) % q for a, b in zip(self.values, other.values)))

    def scale(self, scalar: int | FieldElement) -> FieldVector:
        """Multiply every coordinate by a scalar."""
        if isinstance(scalar, FieldElement):
            if scalar.field != self.field:
                raise MismatchedFields("Scalar and vector are over different fields")
            scalar = scalar.value
        q = self.field.q
        return FieldVector(self.field, tuple((scalar * v) % q for v in self.values))

    def to_bytes(self) -> bytes:
        return b"".join(struct.pack(">Q", v) for v in self.values)


def _check_compatible(u: FieldVector, v: FieldVector) -> None:
    if u.field != v.field:
        raise MismatchedFields(f"Vectors over F_{u.field.q} and F_{v.field.q}")
    if len(u) != len(v):
        raise LengthMismatch(f"Vector lengths differ: {len(u)} != {len(v)}")


def field_arith(a: FieldElement, b: FieldElement, kind: ArithKind) -> FieldElement:
    """
    Apply one field operation to two elements of the same field.

    Raises:
        MismatchedFields: if a and b live in different fields.
        DivisionByZero: for kind == "div" with b == 0.
    """
    if a.field != b.field:
        raise MismatchedFields(f"Operands over F_{a.field.q} and F_{b.field.q}")
    q = a.field.q
    match kind:
        case "add":
            value = a.value + b.value
        case "sub":
            value = a.value - b.value
        case "mul":
            value = a.value * b.value
        case "div":
            value = a.value * a.field.inverse(b.value)
        case _:
            raise ParameterError(f"Unknown field operation {kind!r}")
    return FieldElement(value % q, a.field)


def dot_product(u: FieldVector, v: FieldVector) -> FieldElement:
    """Return sum(u_i * v_i) in F_q."""
    _check_compatible(u, v)
    q = u.field.q
    return FieldElement(sum(a * b for a, b in zip(u.values, v.values)) % q, u.field)


def hamming_weight(v: FieldVector) -> int:
    """Number of nonzero coordinates."""
    return sum(1 for value in v.values if value != 0)


def hamming_dist(u: FieldVector, v: FieldVector) -> int:
    """Number of coordinates in which u and v differ."""
    if len(u) != len(v):
        raise LengthMismatch(f"Vector lengths differ: {len(u)} != {len(v)}")
    return sum(1 for a, b in zip(u.values, v.values) if a != b)


def array_dtype(q: int, terms: int):
    """
    Pick an integer dtype able to hold a sum of `terms` products of canonical values.
    Falls back to Python integers (object arrays) for large moduli.
    """
    if (q - 1) * (q - 1) * max(terms, 1) < 2**63:
        return np.int64
    return object


def mod_matmul(left: np.ndarray, right: np.ndarray, q: int) -> np.ndarray:
    """Matrix product of canonical integer arrays reduced modulo q."""
    dtype = array_dtype(q, np.shape(left)[-1])
    product = np.asarray(left, dtype=dtype) @ np.asarray(right, dtype=dtype)
    return product % q
