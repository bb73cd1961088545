"""
keyed_sw.py: The keyed linear-authenticator scheme with information-theoretic keys.
The verifier keeps K = (alpha, B); the prover stores M and the tag S = B + alpha*M and
answers a challenge V with (mu, tau) = (V.M, V.S). A response is acceptable for K when
tau = alpha*mu + V.B.

Keys are drawn uniformly at random (no pseudorandom function), so a prover that sees
only M and S cannot tell which of the q keys in Possible(M, S) the verifier holds.
That argument fails if the prover learns accept/reject outcomes, which is what
sw_oracle_attack demonstrates.
"""
from __future__ import annotations

import logging
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, NamedTuple

from .algebra import FieldElement, FieldVector, PrimeField, dot_product
from .coding import EncodedMessage, encode, matrix_rank, message_at, message_index
from .errors import (InvalidParams, LengthMismatch, OracleInconsistent,
                     ParameterError, TooLargeToEnumerate)
from .models.limits_model import DEFAULT_LIMITS, Limits
from .schemes import (Challenge, ProvingAlgorithm, SchemeDescriptor, SchemeKind,
                      challenge_at, challenge_count, response_vector)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SwKey:
    alpha: FieldElement
    beta: FieldVector

    def __post_init__(self):
        if self.alpha.field != self.beta.field:
            raise ParameterError("alpha and beta are over different fields")

    @property
    def field(self) -> PrimeField:
        return self.beta.field


@dataclass(frozen=True)
class SwTag:
    sigma: FieldVector


@dataclass(frozen=True)
class SwResponse:
    mu: FieldElement
    tau: FieldElement

    @property
    def values(self) -> tuple[int, int]:
        return self.mu.value, self.tau.value

    @classmethod
    def of(cls, field: PrimeField, mu: int, tau: int) -> SwResponse:
        return cls(field(int(mu)), field(int(tau)))


class OracleAttackResult(NamedTuple):
    key: SwKey
    prover: ProvingAlgorithm
    queries: int
    checks: int


def _vector(value: EncodedMessage | FieldVector | SwTag | Challenge) -> FieldVector:
    if isinstance(value, EncodedMessage):
        return value.blocks
    if isinstance(value, SwTag):
        return value.sigma
    if isinstance(value, Challenge):
        return value.payload
    return value


def _same_length(*vectors: FieldVector) -> None:
    lengths = {len(v) for v in vectors}
    if len(lengths) != 1:
        raise LengthMismatch(f"Vector lengths differ: {sorted(lengths)}")


def sw_keygen(field: PrimeField, n: int, seed) -> SwKey:
    """Draw alpha and every beta_i uniformly and independently from a seeded generator."""
    rng = random.Random(seed)
    alpha = rng.randrange(field.q)
    beta = tuple(rng.randrange(field.q) for _ in range(n))
    return SwKey(field(alpha), FieldVector(field, beta))


def sw_tag(K: SwKey, M: EncodedMessage | FieldVector) -> SwTag:
    """S = B + alpha*M."""
    blocks = _vector(M)
    _same_length(K.beta, blocks)
    return SwTag(K.beta + blocks.scale(K.alpha))


def sw_respond(M: EncodedMessage | FieldVector, S: SwTag | FieldVector,
               V: Challenge | FieldVector) -> SwResponse:
    blocks, sigma, vector = _vector(M), _vector(S), _vector(V)
    _same_length(blocks, sigma, vector)
    return SwResponse(dot_product(vector, blocks), dot_product(vector, sigma))


def sw_verify(K: SwKey, V: Challenge | FieldVector, r: SwResponse) -> bool:
    """True iff tau = alpha*mu + V.B."""
    vector = _vector(V)
    _same_length(K.beta, vector)
    return r.tau == K.alpha * r.mu + dot_product(vector, K.beta)


def sw_possible_keys(M: EncodedMessage | FieldVector, S: SwTag | FieldVector) -> list[SwKey]:
    """
    The q keys consistent with (M, S), ordered by alpha ascending.
    Enumerating them requires q to be small; callers with large q should use
    sw_acceptable_key_count, which is closed-form.
    """
    blocks, sigma = _vector(M), _vector(S)
    _same_length(blocks, sigma)
    field = blocks.field
    if field.q > DEFAULT_LIMITS.max_enumerate:
        raise TooLargeToEnumerate(f"Possible(M, S) has q={field.q} keys")
    return [SwKey(field(a), sigma - blocks.scale(a)) for a in range(field.q)]


def sw_is_authentic(M, S, V, r: SwResponse) -> bool:
    """Authentic iff mu = V.M and tau = V.S."""
    return r == sw_respond(M, S, V)


def sw_acceptable_key_count(M, S, V, r: SwResponse) -> int:
    """
    Number of keys in Possible(M, S) under which r is acceptable.

    Under key (a, S - aM) the check reads tau - V.S = a*(mu - V.M). If mu = V.M it holds for
    every a when tau = V.S and for none otherwise; if mu != V.M exactly one a solves it.
    """
    authentic = sw_respond(M, S, V)
    if r.mu == authentic.mu:
        return r.mu.field.q if r.tau == authentic.tau else 0
    return 1


def sw_succ_avg(P: ProvingAlgorithm, scheme: SchemeDescriptor, M, S,
                limits: Limits = DEFAULT_LIMITS) -> Fraction:
    """
    Acceptance probability averaged over every challenge and every key of Possible(M, S),
    as an exact fraction over gamma*q.
    """
    gamma = challenge_count(scheme)
    if gamma > limits.max_challenges:
        raise TooLargeToEnumerate(f"gamma={gamma} exceeds the challenge cap {limits.max_challenges}")
    q = scheme.q
    mu_column = response_vector(scheme, _vector(M), limits)[:, 0]
    tau_column = response_vector(scheme, _vector(S), limits)[:, 0]
    accepted = 0
    for ordinal in range(gamma):
        r = P.respond_at(ordinal)
        if r.mu.value != mu_column[ordinal]:
            accepted += 1
        elif r.tau.value == tau_column[ordinal]:
            accepted += q
    return Fraction(accepted, gamma * q)


def next_codeword(M: EncodedMessage) -> EncodedMessage:
    """The codeword of the lexicographically next message, wrapping around."""
    code = M.code
    index = message_index(FieldVector(code.field, code.unencode_values(M.values)))
    return encode(code, message_at(code, (index + 1) % code.message_count))


class SwHonestProver(ProvingAlgorithm):
    """Answers (V.M, V.S) on every challenge."""

    def __init__(self, scheme: SchemeDescriptor, M, S, limits: Limits = DEFAULT_LIMITS):
        super().__init__(scheme)
        self._field = scheme.code.field
        self._mu = response_vector(scheme, _vector(M), limits)[:, 0]
        self._tau = response_vector(scheme, _vector(S), limits)[:, 0]

    def respond_at(self, ordinal: int) -> SwResponse:
        return SwResponse.of(self._field, self._mu[ordinal], self._tau[ordinal])


class SwCorruptProver(SwHonestProver):
    """
    Honest except on a set of ordinals, where one component is replaced by a wrong value.
    component 0 corrupts mu (acceptable under exactly one key), component 1 corrupts tau
    (acceptable under none). rule "increment" adds 1, rule "random" adds a seeded nonzero offset.
    """
    construction = "corrupt-set"

    def __init__(self, scheme: SchemeDescriptor, M, S, ordinals, component: int = 0,
                 rule: str = "increment", seed=None, limits: Limits = DEFAULT_LIMITS):
        super().__init__(scheme, M, S, limits)
        if component not in (0, 1):
            raise InvalidParams(f"component must be 0 (mu) or 1 (tau), got {component}")
        if rule not in ("increment", "random"):
            raise InvalidParams(f"Unknown wrong-value rule {rule!r}")
        self.ordinals = frozenset(ordinals)
        gamma = challenge_count(scheme)
        if any(not 0 <= o < gamma for o in self.ordinals):
            raise InvalidParams(f"Corrupted ordinals must lie in [0, {gamma})")
        self.component = component
        self.rule = rule
        self.seed = seed

    def respond_at(self, ordinal: int) -> SwResponse:
        honest = super().respond_at(ordinal)
        if ordinal not in self.ordinals:
            return honest
        q = self._field.q
        offset = 1 if self.rule == "increment" else random.Random(f"{self.seed}/{ordinal}").randrange(1, q)
        mu, tau = honest.values
        if self.component == 0:
            mu = (mu + offset) % q
        else:
            tau = (tau + offset) % q
        return SwResponse.of(self._field, mu, tau)


class SwKeyedDecoyProver(ProvingAlgorithm):
    """
    Answers mu = V.M' for a decoy M' and tau = a*mu + V.B for a believed key (a, B).
    With the true key every response is acceptable; with a guessed key from Possible(M, S)
    the non-authentic responses are acceptable only under that guess.
    """
    construction = "sw-attack"

    def __init__(self, scheme: SchemeDescriptor, key: SwKey, decoy: EncodedMessage,
                 limits: Limits = DEFAULT_LIMITS):
        super().__init__(scheme)
        self.key = key
        self.decoy = decoy
        self._field = scheme.code.field
        self._mu = response_vector(scheme, decoy.blocks, limits)[:, 0]
        self._vb = response_vector(scheme, key.beta, limits)[:, 0]

    def respond_at(self, ordinal: int) -> SwResponse:
        mu = int(self._mu[ordinal])
        return SwResponse.of(self._field, mu, self.key.alpha.value * mu + int(self._vb[ordinal]))


def sw_guess_prover(M: EncodedMessage, S, alpha_guess: int,
                    scheme: SchemeDescriptor) -> SwKeyedDecoyProver:
    """
    The adversary without a verification oracle: it guesses alpha, derives B from S and
    answers with the next codeword as decoy.
    """
    field = scheme.code.field
    guess = SwKey(field(alpha_guess), _vector(S) - M.blocks.scale(alpha_guess))
    prover = SwKeyedDecoyProver(scheme, guess, next_codeword(M))
    prover.construction = "sw-guess"
    return prover


def _forged_response(M: FieldVector, S: FieldVector, V: FieldVector, alpha: int) -> SwResponse:
    """A non-authentic response acceptable only under the candidate key with this alpha."""
    field = M.field
    mu = dot_product(V, M).value + 1
    tau = alpha * mu + dot_product(V, S - M.scale(alpha)).value
    return SwResponse.of(field, mu, tau)


def _spanning_challenges(scheme: SchemeDescriptor, limits: Limits = DEFAULT_LIMITS) -> list[FieldVector]:
    """Challenges, in ordinal order, whose vectors span the challenge space."""
    q, n = scheme.q, scheme.n
    gamma = challenge_count(scheme)
    rows: list[list[int]] = []
    chosen: list[FieldVector] = []
    for ordinal in range(min(gamma, limits.max_challenges)):
        V = challenge_at(scheme, ordinal).payload
        if matrix_rank(rows + [list(V.values)], q) > len(rows):
            rows.append(list(V.values))
            chosen.append(V)
            if len(rows) == n:
                break
    if len(rows) < n:
        logger.debug("Challenges span only %d of %d dimensions", len(rows), n)
    return chosen


def sw_oracle_attack(M: EncodedMessage, S, oracle: Callable[[FieldVector, SwResponse], bool],
                     scheme: SchemeDescriptor, infer_last: bool = True) -> OracleAttackResult:
    """
    Recover the verifier's key from a verification oracle and build the prover that
    passes every check while storing a different message.

    One forged response per candidate alpha; a non-authentic response is acceptable under exactly one
    key of Possible(M, S), so the first accepted forgery identifies the key. With
    infer_last the final candidate is never queried (at most q-1 queries). Without it all q
    candidates are tried and exactly one must be accepted.

    The forgeries alone cannot tell a key outside Possible(M, S) from one inside it, so the
    oracle is also asked about authentic responses to challenges spanning the challenge
    space. A key (a, B) accepts the authentic response to V iff V.(S - aM - B) = 0; when the
    challenges span F_q^n all of them are accepted only if B = S - aM.

    Raises:
        OracleInconsistent: if no key of Possible(M, S) explains the oracle's answers.
    """
    if scheme.kind != SchemeKind.SW:
        raise ParameterError("The oracle attack targets the keyed scheme")
    field = scheme.code.field
    q = field.q
    if q > DEFAULT_LIMITS.max_enumerate:
        raise TooLargeToEnumerate(f"Probing q={q} candidate keys")
    blocks, sigma = M.blocks, _vector(S)
    V = challenge_at(scheme, 0).payload
    queries = 0
    accepted: list[int] = []
    candidates = range(q - 1) if infer_last else range(q)
    for alpha in candidates:
        queries += 1
        if oracle(V, _forged_response(blocks, sigma, V, alpha)):
            accepted.append(alpha)
            if infer_last:
                break
    if len(accepted) > 1:
        raise OracleInconsistent(f"Forged responses for alphas {accepted} were all accepted")
    if not accepted:
        if not infer_last:
            raise OracleInconsistent("No candidate key was accepted by the oracle")
        accepted.append(q - 1)
    checks = 0
    for W in _spanning_challenges(scheme):
        checks += 1
        if not oracle(W, sw_respond(blocks, sigma, W)):
            raise OracleInconsistent(f"An authentic response to {W.values} was rejected; "
                                     "the oracle's key is not in Possible(M, S)")
    alpha = accepted[0]
    key = SwKey(field(alpha), sigma - blocks.scale(alpha))
    logger.info("Oracle attack recovered alpha=%d after %d queries and %d checks", alpha, queries, checks)
    return OracleAttackResult(key, SwKeyedDecoyProver(scheme, key, next_codeword(M)), queries, checks)


def oracle_from_key(K: SwKey) -> Callable[[FieldVector, SwResponse], bool]:
    """A verification oracle that leaks sw_verify under K."""
    return lambda V, r: sw_verify(K, V, r)


def _hex_values(values) -> str:
    return " ".join(f"{int(v):x}" for v in values)


def save_key_file(K: SwKey, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"q={K.field.q}\nn={len(K.beta)}\nalpha={K.alpha.value:x}\n")
        f.write(f"beta={_hex_values(K.beta.values)}\n")


def save_tag_file(S: SwTag, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"q={S.sigma.field.q}\nn={len(S.sigma)}\n")
        f.write(f"sigma={_hex_values(S.sigma.values)}\n")


def _read_header(path) -> dict[str, str]:
    header = {}
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line and "=" in line:
                key, value = line.split("=", 1)
                header[key.strip()] = value.strip()
    return header


def _parse_vector(field: PrimeField, n: int, text: str, path) -> FieldVector:
    values = tuple(int(v, 16) for v in text.split())
    if len(values) != n:
        raise ParameterError(f"{path}: expected {n} values, got {len(values)}")
    if any(v >= field.q for v in values):
        raise ParameterError(f"{path}: value not below q={field.q}")
    return FieldVector(field, values)


def load_key_file(path) -> SwKey:
    header = _read_header(path)
    try:
        field = PrimeField(int(header["q"]))
        n = int(header["n"])
        alpha = int(header["alpha"], 16)
        beta = _parse_vector(field, n, header["beta"], path)
    except KeyError as e:
        raise ParameterError(f"Key file {path} is missing {e}") from e
    if alpha >= field.q:
        raise ParameterError(f"{path}: alpha not below q={field.q}")
    return SwKey(field(alpha), beta)


def load_tag_file(path) -> SwTag:
    header = _read_header(path)
    try:
        field = PrimeField(int(header["q"]))
        return SwTag(_parse_vector(field, int(header["n"]), header["sigma"], path))
    except KeyError as e:
        raise ParameterError(f"Tag file {path} is missing {e}") from e
