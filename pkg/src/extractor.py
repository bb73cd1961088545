"""
extractor.py: Black-box extraction by nearest-neighbour decoding in the response code,
exact success probabilities, and the prover models used to exercise the thresholds.
The extractor only ever queries a proving algorithm; it never looks inside it.
"""
from __future__ import annotations

import logging
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Any

import numpy as np

from .algebra import FieldVector
from .coding import EncodedMessage, LinearCode, decode_unencode, encode, message_at, nearest_codeword
from .errors import InvalidParams, ParameterError, TooLargeToEnumerate
from .keyed_sw import (SwCorruptProver, SwHonestProver, SwResponse, oracle_from_key,
                       sw_guess_prover, sw_oracle_attack)
from .models.limits_model import DEFAULT_LIMITS, Limits
from .schemes import (ProvingAlgorithm, Response, SchemeDescriptor, SchemeKind,
                      build_response_code, challenge_count, response_vector)

logger = logging.getLogger(__name__)

PROVER_KINDS = ("honest", "corrupt-set", "decoy", "sw-attack", "sw-guess", "remote")


@dataclass(frozen=True)
class ExtractionResult:
    """
    m_hat is the decoded message, M_hat its codeword. `tie` is set when more than one codeword
    is nearest; `unique` is set when the distance is below d*/2, where the nearest codeword
    cannot be ambiguous.
    """
    m_hat: FieldVector
    M_hat: EncodedMessage
    distance: int
    tie: bool
    queries: int
    dstar: int

    @property
    def unique(self) -> bool:
        return 2 * self.distance < self.dstar


class HonestProver(ProvingAlgorithm):
    """Answers rho(M, c) everywhere."""

    def __init__(self, scheme: SchemeDescriptor, M: EncodedMessage, limits: Limits = DEFAULT_LIMITS):
        super().__init__(scheme)
        self.M = M
        self._responses = response_vector(scheme, M, limits)

    def respond_at(self, ordinal: int) -> Response:
        return Response(tuple(self._responses[ordinal]))


class CorruptSetProver(HonestProver):
    """
    Wrong exactly on the given ordinals. The wrong value replaces one component of the
    response: authentic+1 by default, or a seeded uniformly random non-authentic value.
    """
    construction = "corrupt-set"

    def __init__(self, scheme: SchemeDescriptor, M: EncodedMessage, ordinals, component: int = 0,
                 rule: str = "increment", seed=None, limits: Limits = DEFAULT_LIMITS):
        super().__init__(scheme, M, limits)
        gamma = challenge_count(scheme)
        self.ordinals = frozenset(int(o) for o in ordinals)
        if any(not 0 <= o < gamma for o in self.ordinals):
            raise InvalidParams(f"Corrupted ordinals must lie in [0, {gamma})")
        if not 0 <= component < scheme.response_width:
            raise InvalidParams(f"component {component} outside a width-{scheme.response_width} response")
        if rule not in ("increment", "random"):
            raise InvalidParams(f"Unknown wrong-value rule {rule!r}")
        self.component = component
        self.rule = rule
        self.seed = seed

    def respond_at(self, ordinal: int) -> Response:
        honest = super().respond_at(ordinal)
        if ordinal not in self.ordinals:
            return honest
        q = self.scheme.q
        if self.rule == "increment":
            offset = 1
        else:
            offset = random.Random(f"{self.seed}/{ordinal}").randrange(1, q)
        values = list(honest.values)
        values[self.component] = (values[self.component] + offset) % q
        return Response(tuple(values))


class DecoyProver(HonestProver):
    """
    Answers rho(M', c) on `budget` ordinals where r^M and r^M' disagree and rho(M, c)
    elsewhere. The budgeted ordinals are the first ones in canonical order, or a seeded
    sample when a seed is given.
    """
    construction = "decoy"

    def __init__(self, scheme: SchemeDescriptor, M: EncodedMessage, decoy: EncodedMessage,
                 budget: int, seed=None, limits: Limits = DEFAULT_LIMITS):
        super().__init__(scheme, M, limits)
        if decoy.values == M.values:
            raise InvalidParams("The decoy must differ from the stored codeword")
        decoy_responses = response_vector(scheme, decoy, limits)
        disagreeing = np.flatnonzero((decoy_responses != self._responses).any(axis=1)).tolist()
        if not 0 <= budget <= len(disagreeing):
            raise InvalidParams(f"Budget {budget} exceeds the {len(disagreeing)} disagreeing coordinates")
        if seed is None:
            moved = disagreeing[:budget]
        else:
            moved = random.Random(seed).sample(disagreeing, budget)
        self.decoy = decoy
        self.moved = frozenset(moved)
        self._decoy_responses = decoy_responses

    def respond_at(self, ordinal: int) -> Response:
        if ordinal in self.moved:
            return Response(tuple(self._decoy_responses[ordinal]))
        return super().respond_at(ordinal)


def make_prover(kind: str, scheme: SchemeDescriptor, M: EncodedMessage,
                params: dict[str, Any] | None = None, seed=None) -> ProvingAlgorithm:
    """
    Build a proving algorithm.

    kind:
        honest       params: tag (sw only)
        corrupt-set  params: ordinals, component, rule ("increment" | "random"), tag (sw only)
        decoy        params: decoy (EncodedMessage), budget
        sw-attack    params: key, tag, infer_last; runs the verification-oracle attack
        sw-guess     params: tag, alpha_guess
        remote       params: endpoint (host, port)

    Raises:
        InvalidParams: if params do not fit the kind or the scheme.
    """
    params = dict(params or {})
    keyed = scheme.kind == SchemeKind.SW
    if keyed and kind in ("honest", "corrupt-set", "sw-attack", "sw-guess") and "tag" not in params:
        raise InvalidParams(f"Prover {kind!r} for the keyed scheme needs the tag")
    match kind:
        case "honest":
            if keyed:
                return SwHonestProver(scheme, M, params["tag"])
            return HonestProver(scheme, M)
        case "corrupt-set":
            if "ordinals" not in params:
                raise InvalidParams("corrupt-set needs ordinals")
            options = dict(component=params.get("component", 0), rule=params.get("rule", "increment"),
                           seed=seed)
            if keyed:
                return SwCorruptProver(scheme, M, params["tag"], params["ordinals"], **options)
            return CorruptSetProver(scheme, M, params["ordinals"], **options)
        case "decoy":
            if keyed:
                raise InvalidParams("Decoys for the keyed scheme are built by sw-guess or sw-attack")
            if "decoy" not in params or "budget" not in params:
                raise InvalidParams("decoy needs a decoy codeword and a budget")
            return DecoyProver(scheme, M, params["decoy"], params["budget"], seed)
        case "sw-attack":
            if not keyed or "key" not in params:
                raise InvalidParams("sw-attack needs the keyed scheme and the verifier's key")
            result = sw_oracle_attack(M, params["tag"], oracle_from_key(params["key"]), scheme,
                                      infer_last=params.get("infer_last", True))
            return result.prover
        case "sw-guess":
            if not keyed:
                raise InvalidParams("sw-guess needs the keyed scheme")
            return sw_guess_prover(M, params["tag"], params.get("alpha_guess", 0), scheme)
        case "remote":
            from .service.client import RemoteProver
            if "endpoint" not in params:
                raise InvalidParams("remote needs an endpoint")
            return RemoteProver(params["endpoint"], scheme)
    raise InvalidParams(f"Unknown prover kind {kind!r}; expected one of {PROVER_KINDS}")


def _check_gamma(scheme: SchemeDescriptor, limits: Limits) -> int:
    gamma = challenge_count(scheme)
    if gamma > limits.max_challenges:
        raise TooLargeToEnumerate(f"gamma={gamma} exceeds the challenge cap {limits.max_challenges}")
    return gamma


def _response_row(response) -> tuple[int, ...]:
    if isinstance(response, SwResponse):
        return (response.mu.value,)
    return response.values


def succ_exact(P: ProvingAlgorithm, scheme: SchemeDescriptor, M: EncodedMessage,
               limits: Limits = DEFAULT_LIMITS) -> Fraction:
    """Fraction of challenges answered authentically."""
    if scheme.kind == SchemeKind.SW:
        raise ParameterError("Keyed provers are measured with sw_succ_avg")
    gamma = _check_gamma(scheme, limits)
    authentic = response_vector(scheme, M, limits)
    correct = sum(1 for ordinal in range(gamma)
                  if P.respond_at(ordinal).values == tuple(authentic[ordinal]))
    return Fraction(correct, gamma)


def query_all(P: ProvingAlgorithm, scheme: SchemeDescriptor,
              limits: Limits = DEFAULT_LIMITS) -> np.ndarray:
    """R' = the prover's answer to every challenge in canonical order, shape (gamma, width)."""
    gamma = _check_gamma(scheme, limits)
    rows = [_response_row(P.respond_at(ordinal)) for ordinal in range(gamma)]
    return np.array(rows, dtype=np.int64 if scheme.q < 2**31 else object)


def _decode(R: np.ndarray, scheme: SchemeDescriptor, limits: Limits) -> ExtractionResult:
    code: LinearCode = scheme.code
    response_code = build_response_code(scheme, limits)
    nearest = nearest_codeword(R, response_code.codebook)
    M_hat = encode(code, message_at(code, nearest.index))
    m_hat = decode_unencode(code, M_hat)
    result = ExtractionResult(m_hat, M_hat, nearest.distance, nearest.tie, len(R), response_code.dstar)
    if result.tie:
        logger.warning("Extraction tie at distance %d; result is not guaranteed", result.distance)
    elif not result.unique:
        logger.warning("Extraction distance %d is not below d*/2 = %s; result is not guaranteed",
                       result.distance, Fraction(response_code.dstar, 2))
    logger.info("Extracted m=%s at distance %d after %d queries",
                m_hat.values, result.distance, result.queries)
    return result


def extract(P: ProvingAlgorithm, scheme: SchemeDescriptor,
            limits: Limits = DEFAULT_LIMITS) -> ExtractionResult:
    """
    Query P on every challenge and decode R' to the nearest response vector r^M.

    Raises:
        TooLargeToEnumerate: if gamma or q^k exceed the caps.
    """
    return _decode(query_all(P, scheme, limits), scheme, limits)


def sw_extract(P: ProvingAlgorithm, scheme: SchemeDescriptor,
               limits: Limits = DEFAULT_LIMITS) -> ExtractionResult:
    """
    Extraction for the keyed scheme: only the mu component of every response is decoded,
    tau is ignored.
    """
    if scheme.kind != SchemeKind.SW:
        raise ParameterError("sw_extract needs the keyed scheme")
    return _decode(query_all(P, scheme, limits), scheme, limits)
