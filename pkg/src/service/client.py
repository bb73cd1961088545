"""
client.py: The verifier side of the wire protocol.
VerifierClient runs one blocking session and records every frame it sends or receives.
RemoteProver adapts a prover daemon to the ProvingAlgorithm interface used by the
extractors, and audit_session runs one audit against a daemon.
"""
from __future__ import annotations

import logging
import random
import socket
from dataclasses import replace
from typing import NamedTuple

from ..analysis import threshold_for
from ..audit import AuditReport, AuditSample, Sampling, audit_decision, omega_for
from ..coding import EncodedMessage
from ..errors import ParameterError, ProtocolError, RemoteProverError
from ..keyed_sw import SwKey, SwResponse, sw_verify
from ..models.config_model import AuditPlan
from ..models.limits_model import DEFAULT_LIMITS, Limits
from ..schemes import (Challenge, ProvingAlgorithm, Response, SchemeDescriptor, SchemeKind,
                       challenge_at, challenge_count, respond)
from .pairstore import PairStore
from .protocol import (FrameType, Hello, decode_error, decode_hello, decode_response,
                       encode_challenge, encode_frame, encode_hello, read_frame_blocking)

logger = logging.getLogger(__name__)

OUTBOUND = "verifier->prover"
INBOUND = "prover->verifier"


class TranscriptEntry(NamedTuple):
    direction: str
    frame_type: FrameType
    data: bytes


class VerifierClient:
    """
    One session with a prover daemon. Sends HELLO on connect, then strictly alternates
    CHALLENGE and RESPONSE. Nothing about the verification outcome is ever sent.
    """

    def __init__(self, endpoint: tuple[str, int], scheme: SchemeDescriptor, timeout: float = 10.0):
        self.endpoint = endpoint
        self.scheme = scheme
        self.timeout = timeout
        self.transcript: list[TranscriptEntry] = []
        self._sock: socket.socket | None = None

    @property
    def connected(self) -> bool:
        return self._sock is not None

    def _send(self, frame_type: FrameType, payload: bytes) -> None:
        data = encode_frame(frame_type, payload)
        self.transcript.append(TranscriptEntry(OUTBOUND, frame_type, data))
        self._sock.sendall(data)

    def _receive(self):
        frame = read_frame_blocking(self._sock)
        self.transcript.append(TranscriptEntry(INBOUND, frame.frame_type,
                                               encode_frame(frame.frame_type, frame.payload)))
        if frame.frame_type == FrameType.ERROR:
            code, message = decode_error(frame.payload)
            raise ProtocolError(f"Prover answered ERROR 0x{code:02x}: {message}", code)
        return frame

    def connect(self) -> None:
        """
        Raises:
            ProtocolError: if the daemon runs a different scheme configuration.
        """
        self._sock = socket.create_connection(self.endpoint, timeout=self.timeout)
        expected = Hello.of(self.scheme)
        try:
            self._send(FrameType.HELLO, encode_hello(expected))
            frame = self._receive()
        except (ConnectionError, OSError):
            self.close()
            raise
        if frame.frame_type != FrameType.HELLO or decode_hello(frame.payload) != expected:
            self.close()
            raise ProtocolError("Prover did not confirm the scheme configuration", 0x01)
        logger.info("Connected to prover at %s:%d", *self.endpoint)

    def challenge(self, c: Challenge) -> tuple[int, ...]:
        """Send one challenge and return the raw response elements."""
        if self._sock is None:
            self.connect()
        self._send(FrameType.CHALLENGE, encode_challenge(c))
        frame = self._receive()
        if frame.frame_type != FrameType.RESPONSE:
            raise ProtocolError(f"Expected RESPONSE, got {frame.frame_type.name}")
        return decode_response(self.scheme, frame.payload)

    def close(self) -> None:
        if self._sock is not None:
            self._sock.close()
            self._sock = None

    def __enter__(self) -> VerifierClient:
        self.connect()
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def check_no_feedback(transcript: list[TranscriptEntry]) -> bool:
    """
    True iff the verifier sent nothing but the opening HELLO and CHALLENGE frames, so the
    prover never learned whether a response was accepted.
    """
    outbound = [entry.frame_type for entry in transcript if entry.direction == OUTBOUND]
    if not outbound:
        return True
    return outbound[0] == FrameType.HELLO and all(t == FrameType.CHALLENGE for t in outbound[1:])


def _as_response(scheme: SchemeDescriptor, values: tuple[int, ...]) -> Response | SwResponse:
    if scheme.kind == SchemeKind.SW:
        return SwResponse.of(scheme.code.field, *values)
    return Response(values)


class RemoteProver(ProvingAlgorithm):
    """
    A prover daemon seen as a proving algorithm. Each ordinal is asked at most once and the
    first answer is pinned, so a daemon that changes its answers still looks deterministic.
    """
    construction = "remote"
    reentrant = False

    def __init__(self, endpoint: tuple[str, int], scheme: SchemeDescriptor, timeout: float = 10.0):
        super().__init__(scheme)
        self.client = VerifierClient(endpoint, scheme, timeout)
        self._answers: dict[int, Response | SwResponse] = {}

    @property
    def transcript(self) -> list[TranscriptEntry]:
        return self.client.transcript

    def respond_at(self, ordinal: int) -> Response | SwResponse:
        if ordinal in self._answers:
            return self._answers[ordinal]
        challenge = challenge_at(self.scheme, ordinal)
        try:
            values = self.client.challenge(challenge)
        except (ConnectionError, OSError) as e:
            self.client.close()
            raise RemoteProverError(f"Remote prover failed after {len(self._answers)} answer(s): {e}",
                                    answered=len(self._answers), transcript=list(self.transcript)) from e
        logger.debug("Ordinal %d -> %s", ordinal, values)
        self._answers[ordinal] = _as_response(self.scheme, values)
        return self._answers[ordinal]

    def close(self) -> None:
        self.client.close()


def _draw_ordinals(gamma: int, t: int, sampling: Sampling, seed) -> list[int]:
    rng = random.Random(str(seed))
    if sampling == Sampling.WITH_REPLACEMENT:
        return [rng.randrange(gamma) for _ in range(t)]
    if t > gamma:
        raise ParameterError(f"Cannot draw t={t} distinct challenges from gamma={gamma}")
    return rng.sample(range(gamma), t)


def run_audit(client: VerifierClient, plan: AuditPlan, source: PairStore | SwKey | EncodedMessage,
              omega: int | None = None, limits: Limits = DEFAULT_LIMITS) -> AuditReport:
    """
    Issue plan.t challenges over an open client and decide.

    source:
        PairStore      records consumed in order; the store's sampling mode applies
        SwKey          fresh challenges, verified with the key (keyed scheme only)
        EncodedMessage fresh challenges, compared with a locally retained copy

    Raises:
        StoreExhausted: if the store holds fewer than t unused records.
        RemoteProverError: if the session breaks; carries the transcript so far.
    """
    scheme = client.scheme
    gamma = challenge_count(scheme)
    sampling = Sampling(plan.sampling)
    keyed = scheme.kind == SchemeKind.SW
    if isinstance(source, PairStore):
        if keyed or not source.matches(scheme):
            raise ParameterError("Pair store does not belong to this scheme configuration")
        if Sampling(source.sampling) != sampling:
            logger.warning("Pair store was drawn %s replacement; plan asks %s",
                           source.sampling, plan.sampling)
            sampling = Sampling(source.sampling)
        records = source.take(plan.t)
        ordinals = [record.ordinal for record in records]
        expected = [record.response for record in records]
    elif isinstance(source, SwKey):
        if not keyed:
            raise ParameterError("A key only verifies the keyed scheme")
        ordinals = _draw_ordinals(gamma, plan.t, sampling, plan.seed)
        expected = None
    elif isinstance(source, EncodedMessage):
        if keyed:
            raise ParameterError("The keyed scheme is verified with its key")
        ordinals = _draw_ordinals(gamma, plan.t, sampling, plan.seed)
        expected = None
    else:
        raise ParameterError(f"Unsupported verification source {type(source).__name__}")
    if omega is None:
        omega = plan.omega if plan.omega is not None else omega_for(threshold_for(scheme, limits))
    failures = []
    for position, ordinal in enumerate(ordinals):
        challenge = challenge_at(scheme, ordinal)
        try:
            values = client.challenge(challenge)
        except (ConnectionError, OSError) as e:
            client.close()
            raise RemoteProverError(f"Audit session broke after {position} response(s): {e}",
                                    answered=position, transcript=list(client.transcript)) from e
        if isinstance(source, SwKey):
            correct = sw_verify(source, challenge, _as_response(scheme, values))
        elif expected is not None:
            correct = expected[position].values == values
        else:
            correct = respond(scheme, source, challenge).values == values
        if not correct:
            failures.append(ordinal)
    t = len(ordinals)
    sample = AuditSample(t, t - len(failures), sampling, gamma, omega)
    report = audit_decision(sample, plan.alpha, plan.confidence)
    if failures:
        logger.warning("%d of %d responses failed verification", len(failures), t)
    return replace(report, failures=tuple(failures))


def audit_session(endpoint: tuple[str, int], scheme: SchemeDescriptor, plan: AuditPlan,
                  source: PairStore | SwKey | EncodedMessage, omega: int | None = None,
                  limits: Limits = DEFAULT_LIMITS) -> AuditReport:
    """One audit over a fresh connection."""
    client = VerifierClient(endpoint, scheme)
    try:
        client.connect()
    except ProtocolError:
        # a refusal from the prover, not a transport failure
        raise
    except (ConnectionError, OSError) as e:
        raise RemoteProverError(f"Cannot reach prover at {endpoint[0]}:{endpoint[1]}: {e}",
                                transcript=list(client.transcript)) from e
    try:
        return run_audit(client, plan, source, omega, limits)
    finally:
        client.close()
