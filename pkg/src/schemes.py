"""
schemes.py: Challenge spaces, response functions and response codes of the keyless schemes.
The keyed scheme shares the linear-combination challenge spaces defined here; its
keys, tags and verification live in keyed_sw.py.

Canonical challenge orderings:
    basic       ascending block index
    multiblock  colexicographic order of the l-subsets
    lc-v1       lexicographic order of the nonzero vectors
    lc-v2, sw   lexicographic order of the weight-l vectors (all nonzero vectors for sw without l)
"""
from __future__ import annotations

import functools
import itertools
import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum
from math import comb
from typing import Iterator, NamedTuple

import numpy as np

from .algebra import FieldVector, mod_matmul
from .coding import EncodedMessage, LinearCode, codeword_table, message_array
from .errors import (InvalidChallenge, OrdinalOutOfRange, ParameterError,
                     ShapeMismatch, TooLargeToEnumerate)
from .models.limits_model import DEFAULT_LIMITS, Limits

logger = logging.getLogger(__name__)

PAIRWISE_LIMIT = 4096


class SchemeKind(str, Enum):
    BASIC = "basic"
    MULTIBLOCK = "multiblock"
    LC_V1 = "lc-v1"
    LC_V2 = "lc-v2"
    SW = "sw"

    @property
    def uses_vectors(self) -> bool:
        return self in (SchemeKind.LC_V1, SchemeKind.LC_V2, SchemeKind.SW)


@dataclass(frozen=True)
class SchemeDescriptor:
    """
    Which scheme is run over which code. `ell` is required for multiblock and lc-v2; for sw
    it selects the weight-l challenge space, and None selects every nonzero vector.
    """
    kind: SchemeKind
    code: LinearCode
    ell: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", SchemeKind(self.kind))
        n = self.code.n
        if self.kind in (SchemeKind.MULTIBLOCK, SchemeKind.LC_V2) and self.ell is None:
            raise ParameterError(f"Scheme {self.kind.value} requires ell")
        if self.kind in (SchemeKind.BASIC, SchemeKind.LC_V1) and self.ell is not None:
            raise ParameterError(f"Scheme {self.kind.value} takes no ell")
        if self.ell is not None and not 1 <= self.ell <= n:
            raise ParameterError(f"ell must satisfy 1 <= ell <= n={n}, got {self.ell}")

    @property
    def q(self) -> int:
        return self.code.q

    @property
    def n(self) -> int:
        return self.code.n

    @property
    def gamma(self) -> int:
        return challenge_count(self)

    @property
    def response_width(self) -> int:
        """Number of field elements in one keyless response."""
        return self.ell if self.kind == SchemeKind.MULTIBLOCK else 1

    @property
    def weight_limited(self) -> bool:
        return self.kind == SchemeKind.LC_V2 or (self.kind == SchemeKind.SW and self.ell is not None)


@dataclass(frozen=True)
class Challenge:
    """
    A scheme-tagged challenge. Payloads use 1-based block indices:
    basic an int, multiblock a sorted tuple of indices, vector schemes a FieldVector.
    """
    kind: SchemeKind
    payload: int | tuple[int, ...] | FieldVector


@dataclass(frozen=True)
class Response:
    """A keyless response: 1 element, or l elements for multiblock."""
    values: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(int(v) for v in self.values))


class ResponseCode(NamedTuple):
    """
    codebook has shape (q^k, gamma, width); row i is r^M for the i-th message in
    lexicographic order.
    """
    codebook: np.ndarray
    dstar: int


def _completions(q: int, positions: int, weight: int) -> int:
    """Vectors over `positions` coordinates having exactly `weight` nonzero entries."""
    if weight < 0 or weight > positions:
        return 0
    return comb(positions, weight) * (q - 1) ** weight


def challenge_count(scheme: SchemeDescriptor) -> int:
    """gamma = |challenge space|."""
    n, q = scheme.n, scheme.q
    match scheme.kind:
        case SchemeKind.BASIC:
            return n
        case SchemeKind.MULTIBLOCK:
            return comb(n, scheme.ell)
        case SchemeKind.LC_V1:
            return q**n - 1
        case _:
            if scheme.weight_limited:
                return _completions(q, n, scheme.ell)
            return q**n - 1


def validate_challenge(scheme: SchemeDescriptor, c: Challenge) -> None:
    """
    Raises:
        InvalidChallenge: if c is not a member of the scheme's challenge space.
    """
    if c.kind != scheme.kind:
        raise InvalidChallenge(f"Challenge for {c.kind.value} used with {scheme.kind.value}")
    n = scheme.n
    match scheme.kind:
        case SchemeKind.BASIC:
            if not isinstance(c.payload, int) or not 1 <= c.payload <= n:
                raise InvalidChallenge(f"Basic challenge must be an index in [1, {n}]")
        case SchemeKind.MULTIBLOCK:
            indices = c.payload
            if not isinstance(indices, tuple) or len(indices) != scheme.ell:
                raise InvalidChallenge(f"Multiblock challenge must name {scheme.ell} indices")
            if any(b <= a for a, b in zip(indices, indices[1:])):
                raise InvalidChallenge(f"Multiblock indices {indices} are not strictly increasing")
            if indices[0] < 1 or indices[-1] > n:
                raise InvalidChallenge(f"Multiblock indices {indices} outside [1, {n}]")
        case _:
            vector = c.payload
            if not isinstance(vector, FieldVector) or vector.field != scheme.code.field:
                raise InvalidChallenge("Linear-combination challenge must be a vector over the scheme field")
            if len(vector) != n:
                raise InvalidChallenge(f"Challenge vector length {len(vector)} != n={n}")
            weight = sum(1 for v in vector.values if v)
            if weight == 0:
                raise InvalidChallenge("The zero vector is not a challenge")
            if scheme.weight_limited and weight != scheme.ell:
                raise InvalidChallenge(f"Challenge has weight {weight}, expected {scheme.ell}")


def _unrank_colex(rank: int, size: int) -> tuple[int, ...]:
    """The rank-th size-subset of {0, 1, ...} in colexicographic order."""
    subset = []
    for i in range(size, 0, -1):
        a = i - 1
        while comb(a + 1, i) <= rank:
            a += 1
        rank -= comb(a, i)
        subset.append(a)
    return tuple(reversed(subset))


def _rank_colex(subset: tuple[int, ...]) -> int:
    return sum(comb(a, i) for i, a in enumerate(subset, start=1))


def _unrank_weight(rank: int, q: int, n: int, weight: int) -> tuple[int, ...]:
    values = []
    for position in range(n):
        rest = n - position - 1
        with_zero = _completions(q, rest, weight)
        if rank < with_zero:
            values.append(0)
            continue
        rank -= with_zero
        block = _completions(q, rest, weight - 1)
        step, rank = divmod(rank, block)
        values.append(step + 1)
        weight -= 1
    return tuple(values)


def _rank_weight(values: tuple[int, ...], q: int, weight: int) -> int:
    rank = 0
    n = len(values)
    for position, value in enumerate(values):
        rest = n - position - 1
        if value:
            rank += _completions(q, rest, weight) + (value - 1) * _completions(q, rest, weight - 1)
            weight -= 1
    return rank


def challenge_at(scheme: SchemeDescriptor, ordinal: int) -> Challenge:
    """
    Raises:
        OrdinalOutOfRange: if ordinal is not in [0, gamma).
    """
    gamma = challenge_count(scheme)
    if not 0 <= ordinal < gamma:
        raise OrdinalOutOfRange(f"Ordinal {ordinal} outside [0, {gamma})")
    q, n = scheme.q, scheme.n
    match scheme.kind:
        case SchemeKind.BASIC:
            return Challenge(scheme.kind, ordinal + 1)
        case SchemeKind.MULTIBLOCK:
            return Challenge(scheme.kind, tuple(a + 1 for a in _unrank_colex(ordinal, scheme.ell)))
    if scheme.weight_limited:
        values = _unrank_weight(ordinal, q, n, scheme.ell)
    else:
        value = ordinal + 1
        values = tuple((value // q ** (n - 1 - j)) % q for j in range(n))
    return Challenge(scheme.kind, FieldVector(scheme.code.field, values))


def ordinal_of(scheme: SchemeDescriptor, c: Challenge) -> int:
    """Inverse of challenge_at."""
    validate_challenge(scheme, c)
    match scheme.kind:
        case SchemeKind.BASIC:
            return c.payload - 1
        case SchemeKind.MULTIBLOCK:
            return _rank_colex(tuple(i - 1 for i in c.payload))
    values = c.payload.values
    if scheme.weight_limited:
        return _rank_weight(values, scheme.q, scheme.ell)
    value = 0
    for v in values:
        value = value * scheme.q + v
    return value - 1


def _weight_vectors(q: int, n: int, weight: int) -> Iterator[tuple[int, ...]]:
    """Weight-limited vectors in lexicographic order."""
    if n == 0:
        yield ()
        return
    if n > weight:
        for tail in _weight_vectors(q, n - 1, weight):
            yield (0,) + tail
    if weight > 0:
        for head in range(1, q):
            for tail in _weight_vectors(q, n - 1, weight - 1):
                yield (head,) + tail


def _check_gamma(scheme: SchemeDescriptor, limits: Limits) -> int:
    gamma = challenge_count(scheme)
    if gamma > limits.max_challenges:
        raise TooLargeToEnumerate(f"gamma={gamma} exceeds the challenge cap {limits.max_challenges}")
    return gamma


def enumerate_challenges(scheme: SchemeDescriptor,
                         limits: Limits = DEFAULT_LIMITS) -> Iterator[Challenge]:
    """Every challenge exactly once, in canonical order."""
    _check_gamma(scheme, limits)
    q, n = scheme.q, scheme.n
    match scheme.kind:
        case SchemeKind.BASIC:
            for index in range(1, n + 1):
                yield Challenge(scheme.kind, index)
        case SchemeKind.MULTIBLOCK:
            for ordinal in range(comb(n, scheme.ell)):
                yield Challenge(scheme.kind, tuple(a + 1 for a in _unrank_colex(ordinal, scheme.ell)))
        case _:
            if scheme.weight_limited:
                rows = _weight_vectors(q, n, scheme.ell)
            else:
                rows = itertools.islice(itertools.product(range(q), repeat=n), 1, None)
            for values in rows:
                yield Challenge(scheme.kind, FieldVector(scheme.code.field, values))


@functools.lru_cache(maxsize=32)
def challenge_matrix(scheme: SchemeDescriptor, limits: Limits = DEFAULT_LIMITS) -> np.ndarray:
    """
    Challenges as an integer array in canonical order: shape (gamma, n) of coefficients for
    vector schemes, (gamma, l) of 0-based indices for multiblock, (n, 1) for basic.
    """
    gamma = _check_gamma(scheme, limits)
    q, n = scheme.q, scheme.n
    match scheme.kind:
        case SchemeKind.BASIC:
            matrix = np.arange(n, dtype=np.int64)[:, None]
        case SchemeKind.MULTIBLOCK:
            subsets = sorted(itertools.combinations(range(n), scheme.ell), key=lambda s: s[::-1])
            matrix = np.array(subsets, dtype=np.int64)
        case _:
            if scheme.weight_limited:
                matrix = np.array(list(_weight_vectors(q, n, scheme.ell)), dtype=np.int64)
            else:
                if q**n > limits.max_enumerate:
                    raise TooLargeToEnumerate(f"q^n={q**n} exceeds the enumeration cap")
                matrix = message_array(q, n)[1:]
    if len(matrix) != gamma:
        raise RuntimeError(f"Challenge enumeration produced {len(matrix)} rows, expected {gamma}")
    matrix.setflags(write=False)
    return matrix


def _blocks(M: EncodedMessage | FieldVector) -> FieldVector:
    return M.blocks if isinstance(M, EncodedMessage) else M


def respond(scheme: SchemeDescriptor, M: EncodedMessage | FieldVector, c: Challenge) -> Response:
    """
    The authentic response rho(M, c). For sw this is the mu component only; the full
    keyed response is produced by keyed_sw.sw_respond.
    """
    validate_challenge(scheme, c)
    values = _blocks(M).values
    match scheme.kind:
        case SchemeKind.BASIC:
            return Response((values[c.payload - 1],))
        case SchemeKind.MULTIBLOCK:
            return Response(tuple(values[i - 1] for i in c.payload))
    q = scheme.q
    return Response((sum(v * m for v, m in zip(c.payload.values, values)) % q,))


def verify_response(scheme: SchemeDescriptor, stored: Response, received: Response) -> bool:
    """
    Keyless verification: component-wise equality.

    Raises:
        ShapeMismatch: if either response does not have the scheme's width.
    """
    width = scheme.response_width
    if len(stored.values) != width or len(received.values) != width:
        raise ShapeMismatch(f"Responses must have {width} element(s), got "
                            f"{len(stored.values)} and {len(received.values)}")
    return stored.values == received.values


def _responses(scheme: SchemeDescriptor, words: np.ndarray, limits: Limits) -> np.ndarray:
    """Response vectors of many codewords at once: shape (rows, gamma, width)."""
    challenges = challenge_matrix(scheme, limits)
    match scheme.kind:
        case SchemeKind.BASIC:
            return np.asarray(words)[:, :, None]
        case SchemeKind.MULTIBLOCK:
            return np.asarray(words)[:, challenges]
    return mod_matmul(words, challenges.T, scheme.q)[:, :, None]


def response_vector(scheme: SchemeDescriptor, M: EncodedMessage | FieldVector,
                    limits: Limits = DEFAULT_LIMITS) -> np.ndarray:
    """
    r^M as an array of shape (gamma, width); row i is respond(scheme, M, challenge_at(i)).
    """
    _check_gamma(scheme, limits)
    word = np.array([_blocks(M).values], dtype=np.int64 if scheme.q < 2**31 else object)
    return _responses(scheme, word, limits)[0]


def _pairwise_min(codebook: np.ndarray) -> int:
    flat = codebook.reshape(len(codebook), -1, codebook.shape[2])
    best = None
    for i in range(len(flat) - 1):
        differs = (flat[i + 1:] != flat[i]).any(axis=2)
        local = int(np.count_nonzero(differs, axis=1).min())
        best = local if best is None else min(best, local)
    return best if best is not None else 0


@functools.lru_cache(maxsize=16)
def build_response_code(scheme: SchemeDescriptor, limits: Limits = DEFAULT_LIMITS) -> ResponseCode:
    """
    Assemble R* in lexicographic message order and compute its minimum distance d*.
    The minimum is taken over all pairs for small codebooks; larger ones use the minimum
    nonzero weight, which equals it because every response function is linear in M.

    Raises:
        TooLargeToEnumerate: if q^k, gamma or the codebook size exceed the caps.
    """
    code = scheme.code
    gamma = _check_gamma(scheme, limits)
    cells = code.message_count * gamma * scheme.response_width
    if cells > limits.max_enumerate:
        raise TooLargeToEnumerate(f"Response code of {cells} cells exceeds the cap {limits.max_enumerate}")
    words = codeword_table(code, limits.max_codewords)
    codebook = _responses(scheme, words, limits)
    codebook.setflags(write=False)
    if len(codebook) <= PAIRWISE_LIMIT:
        dstar = _pairwise_min(codebook)
    else:
        dstar = int(np.count_nonzero(codebook[1:].any(axis=2), axis=1).min())
    if dstar <= 0:
        raise ParameterError(f"Response map of {scheme.kind.value} is not injective on this code")
    logger.debug("Built %s response code: %d codewords, gamma=%d, d*=%d",
                 scheme.kind.value, len(codebook), gamma, dstar)
    return ResponseCode(codebook, dstar)


class ProvingAlgorithm(ABC):
    """
    A deterministic, total responder for one scheme. Extractors see it only through
    respond_at (by challenge ordinal) and __call__ (by challenge).
    """
    construction = "honest"
    reentrant = True

    def __init__(self, scheme: SchemeDescriptor):
        self.scheme = scheme

    @abstractmethod
    def respond_at(self, ordinal: int):
        """The response to challenge_at(scheme, ordinal)."""

    def __call__(self, challenge: Challenge):
        return self.respond_at(ordinal_of(self.scheme, challenge))
