"""
coding.py: Message-space encoding, code distance and nearest-neighbour decoding.
This module provides the linear codes that turn a message m in (F_q)^k into an encoded
message M in (F_q)^n, and the exhaustive minimum-distance search used by every extractor.
"""
from __future__ import annotations

import functools
import logging
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from .algebra import FieldVector, PrimeField, mod_matmul
from .errors import (EmptyCodebook, LengthMismatch, NotACodeword,
                     ParameterError, TooLargeToEnumerate)
from .models.limits_model import DEFAULT_LIMITS

logger = logging.getLogger(__name__)

DEFAULT_MAX_CODEWORDS = DEFAULT_LIMITS.max_codewords
_CHUNK = 1 << 16


def _row_reduce(rows: list[list[int]], q: int) -> tuple[list[list[int]], list[int]]:
    """
    Reduce a matrix over F_q to reduced row echelon form.
    Returns the reduced rows and the pivot column of each non-zero row.
    """
    matrix = [list(row) for row in rows]
    pivots: list[int] = []
    row_count = len(matrix)
    col_count = len(matrix[0]) if matrix else 0
    lead = 0
    for col in range(col_count):
        pivot_row = next((r for r in range(lead, row_count) if matrix[r][col] % q), None)
        if pivot_row is None:
            continue
        matrix[lead], matrix[pivot_row] = matrix[pivot_row], matrix[lead]
        inv = pow(matrix[lead][col], -1, q)
        matrix[lead] = [(v * inv) % q for v in matrix[lead]]
        for r in range(row_count):
            if r != lead and matrix[r][col]:
                factor = matrix[r][col]
                matrix[r] = [(a - factor * b) % q for a, b in zip(matrix[r], matrix[lead])]
        pivots.append(col)
        lead += 1
        if lead == row_count:
            break
    return matrix, pivots


def matrix_rank(rows: list[list[int]], q: int) -> int:
    return len(_row_reduce(rows, q)[1]) if rows else 0


def _invert(square: list[list[int]], q: int) -> list[list[int]]:
    size = len(square)
    augmented = [list(row) + [int(i == j) for j in range(size)] for i, row in enumerate(square)]
    reduced, pivots = _row_reduce(augmented, q)
    if pivots[:size] != list(range(size)):
        raise ParameterError("Matrix is singular over the field")
    return [row[size:] for row in reduced]


def message_array(q: int, k: int) -> np.ndarray:
    """All q^k messages as rows, in lexicographic order (first coordinate most significant)."""
    count = q**k
    index = np.arange(count, dtype=np.int64)
    powers = np.array([q ** (k - 1 - j) for j in range(k)], dtype=np.int64)
    return (index[:, None] // powers[None, :]) % q


@dataclass(frozen=True)
class LinearCode:
    """
    A linear [n, k] code over F_q given by a k x n generator matrix.
    The generator must have rank k so that encoding is injective.
    """
    field: PrimeField
    n: int
    k: int
    generator: tuple[tuple[int, ...], ...]
    declared_distance: int | None = None
    kind: str = "matrix"

    def __post_init__(self):
        object.__setattr__(self, "generator",
                           tuple(tuple(int(v) for v in row) for row in self.generator))
        if not 1 <= self.k <= self.n:
            raise ParameterError(f"Code dimensions must satisfy 1 <= k <= n, got k={self.k}, n={self.n}")
        if len(self.generator) != self.k or any(len(row) != self.n for row in self.generator):
            raise ParameterError(f"Generator must be a {self.k} x {self.n} matrix")
        if any(not 0 <= v < self.field.q for row in self.generator for v in row):
            raise ParameterError("Generator entries must be canonical field values")
        if len(self._information_set) != self.k:
            raise ParameterError(f"Generator has rank below k={self.k}; encoding is not injective")

    @property
    def q(self) -> int:
        return self.field.q

    @property
    def message_count(self) -> int:
        return self.q**self.k

    @cached_property
    def generator_array(self) -> np.ndarray:
        return np.array(self.generator, dtype=np.int64 if self.q < 2**31 else object)

    @cached_property
    def _information_set(self) -> tuple[int, ...]:
        _, pivots = _row_reduce([list(row) for row in self.generator], self.q)
        return tuple(pivots)

    @cached_property
    def _information_inverse(self) -> list[list[int]]:
        square = [[row[c] for c in self._information_set] for row in self.generator]
        return _invert(square, self.q)

    def encode_values(self, message: Sequence[int]) -> tuple[int, ...]:
        q = self.q
        return tuple(sum(message[i] * self.generator[i][j] for i in range(self.k)) % q
                     for j in range(self.n))

    def unencode_values(self, word: Sequence[int]) -> tuple[int, ...] | None:
        """Recover the message of a codeword, or None when the word is not a codeword."""
        q = self.q
        picked = [word[c] for c in self._information_set]
        inverse = self._information_inverse
        message = tuple(sum(picked[r] * inverse[r][i] for r in range(self.k)) % q
                        for i in range(self.k))
        if self.encode_values(message) != tuple(word):
            return None
        return message


@dataclass(frozen=True)
class EncodedMessage:
    """A codeword M = e(m) of a linear code."""
    blocks: FieldVector
    code: LinearCode

    def __post_init__(self):
        if self.blocks.field != self.code.field or len(self.blocks) != self.code.n:
            raise NotACodeword("Blocks do not match the code's field and length")
        if self.code.unencode_values(self.blocks.values) is None:
            raise NotACodeword(f"{self.blocks.values} is not a codeword")

    @property
    def values(self) -> tuple[int, ...]:
        return self.blocks.values


class NearestCodeword(NamedTuple):
    index: int
    distance: int
    tie: bool


def rs_code(field: PrimeField, n: int, k: int) -> LinearCode:
    """
    Evaluation Reed-Solomon code with evaluation points 1, 2, ..., n.
    Message (m_1, ..., m_k) is the polynomial m_1 + m_2 x + ... + m_k x^(k-1).
    """
    if n > field.q:
        raise ParameterError(f"Reed-Solomon length n={n} exceeds field size q={field.q}")
    if not 1 <= k <= n:
        raise ParameterError(f"Reed-Solomon dimension must satisfy 1 <= k <= n, got k={k}, n={n}")
    q = field.q
    generator = tuple(tuple(pow(x, i, q) for x in range(1, n + 1)) for i in range(k))
    return LinearCode(field, n, k, generator, declared_distance=n - k + 1, kind="rs")


def repetition_code(field: PrimeField, n: int) -> LinearCode:
    return LinearCode(field, n, 1, ((1,) * n,), declared_distance=n)


def encode(code: LinearCode, m: FieldVector) -> EncodedMessage:
    """Encode a length-k message into a codeword."""
    if m.field != code.field:
        raise ParameterError("Message and code are over different fields")
    if len(m) != code.k:
        raise LengthMismatch(f"Message length {len(m)} != k={code.k}")
    return EncodedMessage(FieldVector(code.field, code.encode_values(m.values)), code)


def decode_unencode(code: LinearCode, encoded: EncodedMessage | FieldVector) -> FieldVector:
    """
    Invert the encoding map on a codeword.

    Raises:
        NotACodeword: if the word fails the membership check.
    """
    blocks = encoded.blocks if isinstance(encoded, EncodedMessage) else encoded
    if len(blocks) != code.n:
        raise NotACodeword(f"Word of length {len(blocks)} cannot belong to a length-{code.n} code")
    message = code.unencode_values(blocks.values)
    if message is None:
        raise NotACodeword(f"{blocks.values} is not a codeword")
    return FieldVector(code.field, message)


def message_at(code: LinearCode, index: int) -> FieldVector:
    """The message with the given position in lexicographic message order."""
    if not 0 <= index < code.message_count:
        raise ParameterError(f"Message index {index} outside [0, {code.message_count})")
    digits = []
    for _ in range(code.k):
        index, digit = divmod(index, code.q)
        digits.append(digit)
    return FieldVector(code.field, tuple(reversed(digits)))


def message_index(m: FieldVector) -> int:
    index = 0
    for value in m.values:
        index = index * m.field.q + value
    return index


def _check_cap(count: int, cap: int, what: str) -> None:
    if count > cap:
        raise TooLargeToEnumerate(f"{what}: {count} exceeds the enumeration cap {cap}")


@functools.lru_cache(maxsize=32)
def codeword_table(code: LinearCode, max_codewords: int = DEFAULT_MAX_CODEWORDS) -> np.ndarray:
    """Every codeword as a row, indexed in lexicographic message order."""
    _check_cap(code.message_count, max_codewords, "codewords")
    table = mod_matmul(message_array(code.q, code.k), code.generator_array, code.q)
    table.setflags(write=False)
    return table


def code_distance(code: LinearCode, max_codewords: int = DEFAULT_MAX_CODEWORDS) -> int:
    """
    Minimum Hamming weight over non-zero codewords, by exhaustive enumeration.

    Raises:
        TooLargeToEnumerate: if q^k exceeds max_codewords.
    """
    _check_cap(code.message_count, max_codewords, "codewords")
    messages = message_array(code.q, code.k)[1:]
    best = code.n
    for start in range(0, len(messages), _CHUNK):
        chunk = mod_matmul(messages[start:start + _CHUNK], code.generator_array, code.q)
        best = min(best, int(np.count_nonzero(chunk, axis=1).min()))
    if code.declared_distance is not None and code.declared_distance != best:
        logger.warning("Declared distance %d disagrees with enumerated distance %d",
                       code.declared_distance, best)
    return best


def minimum_distance(code: LinearCode, max_codewords: int = DEFAULT_MAX_CODEWORDS) -> int:
    """Declared distance when available, otherwise the enumerated one."""
    if code.declared_distance is not None:
        return code.declared_distance
    return code_distance(code, max_codewords)


def nonzero_weights(code: LinearCode, max_codewords: int = DEFAULT_MAX_CODEWORDS) -> list[int]:
    """The sorted set of Hamming weights taken by non-zero codewords."""
    _check_cap(code.message_count, max_codewords, "codewords")
    messages = message_array(code.q, code.k)[1:]
    weights: set[int] = set()
    for start in range(0, len(messages), _CHUNK):
        chunk = mod_matmul(messages[start:start + _CHUNK], code.generator_array, code.q)
        weights.update(int(w) for w in np.unique(np.count_nonzero(chunk, axis=1)))
    return sorted(weights)


def _as_array(vectors) -> np.ndarray:
    if isinstance(vectors, FieldVector):
        return np.array(vectors.values)
    if isinstance(vectors, (list, tuple)) and vectors and isinstance(vectors[0], FieldVector):
        return np.array([v.values for v in vectors])
    return np.asarray(vectors)


def nearest_codeword(word, codebook) -> NearestCodeword:
    """
    Exhaustive minimum-distance search.
    Each codebook entry is a length-L sequence of symbols; a symbol may itself be a tuple
    (trailing array axes), in which case two symbols differ if any component differs.
    Ties are broken towards the lowest index and flagged.

    Raises:
        EmptyCodebook: if the codebook has no entries.
        LengthMismatch: if the word and the entries differ in shape.
    """
    if len(codebook) == 0:
        raise EmptyCodebook("Nearest-neighbour search over an empty codebook")
    book = _as_array(codebook)
    target = _as_array(word)
    if book.shape[1:] != target.shape:
        raise LengthMismatch(f"Word shape {target.shape} != codebook entry shape {book.shape[1:]}")
    differs = book != target
    if differs.ndim > 2:
        differs = differs.any(axis=tuple(range(2, differs.ndim)))
    distances = np.count_nonzero(differs, axis=1)
    index = int(np.argmin(distances))
    distance = int(distances[index])
    tie = int(np.count_nonzero(distances == distance)) > 1
    return NearestCodeword(index, distance, tie)


def load_code_file(path: str | Path) -> LinearCode:
    """
    Read a code description file: header lines q=, n=, k=, kind=rs|matrix, then
    (for matrix codes) k rows of n space-separated integers.
    """
    header: dict[str, str] = {}
    rows: list[tuple[int, ...]] = []
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" in line:
                key, value = line.split("=", 1)
                header[key.strip()] = value.strip()
            else:
                rows.append(tuple(int(v) for v in line.split()))
    try:
        field = PrimeField(int(header["q"]))
        n, k = int(header["n"]), int(header["k"])
        kind = header.get("kind", "rs")
    except KeyError as e:
        raise ParameterError(f"Code file {path} is missing header {e}") from e
    if kind == "rs":
        return rs_code(field, n, k)
    if kind == "matrix":
        distance = int(header["d"]) if "d" in header else None
        return LinearCode(field, n, k, tuple(rows), declared_distance=distance)
    raise ParameterError(f"Unknown code kind {kind!r} in {path}")


def save_code_file(code: LinearCode, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"q={code.q}\nn={code.n}\nk={code.k}\nkind={code.kind}\n")
        if code.kind == "matrix":
            if code.declared_distance is not None:
                f.write(f"d={code.declared_distance}\n")
            for row in code.generator:
                f.write(" ".join(str(v) for v in row) + "\n")
