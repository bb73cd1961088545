"""
protocol.py: Binary framing for the challenge-response protocol.
A frame is the magic "POR1", a 1-byte type, a 4-byte big-endian payload length and the
payload. All integers are big-endian; field elements travel as 8-byte values.
"""
from __future__ import annotations

import asyncio
import logging
import socket
import struct
from enum import IntEnum
from typing import NamedTuple, Sequence

from ..algebra import ELEMENT_BYTES, FieldVector
from ..errors import InvalidChallenge, ProtocolError
from ..schemes import Challenge, SchemeDescriptor, SchemeKind, validate_challenge

logger = logging.getLogger(__name__)

MAGIC = b"POR1"
HEADER = struct.Struct(">4sBI")
HELLO = struct.Struct(">BQIII")
MAX_PAYLOAD = 1 << 24


class FrameType(IntEnum):
    HELLO = 0x01
    CHALLENGE = 0x02
    RESPONSE = 0x03
    ERROR = 0x04


class ErrorCode(IntEnum):
    CONFIG_MISMATCH = 0x01
    INVALID_CHALLENGE = 0x02
    PROTOCOL_VIOLATION = 0x03


KIND_CODES = {
    SchemeKind.BASIC: 1,
    SchemeKind.MULTIBLOCK: 2,
    SchemeKind.LC_V1: 3,
    SchemeKind.LC_V2: 4,
    SchemeKind.SW: 5,
}
KINDS_BY_CODE = {code: kind for kind, code in KIND_CODES.items()}


class Frame(NamedTuple):
    frame_type: FrameType
    payload: bytes


class Hello(NamedTuple):
    """Scheme parameters both sides must agree on before the first challenge."""
    kind: SchemeKind
    q: int
    n: int
    k: int
    ell: int | None

    @classmethod
    def of(cls, scheme: SchemeDescriptor) -> Hello:
        return cls(scheme.kind, scheme.q, scheme.n, scheme.code.k, scheme.ell)


def encode_frame(frame_type: FrameType, payload: bytes = b"") -> bytes:
    if len(payload) > MAX_PAYLOAD:
        raise ProtocolError(f"Payload of {len(payload)} bytes is too large")
    return HEADER.pack(MAGIC, int(frame_type), len(payload)) + payload


def parse_header(header: bytes) -> tuple[FrameType, int]:
    """
    Raises:
        ProtocolError: on a bad magic, an unknown type or an oversized payload.
    """
    magic, raw_type, length = HEADER.unpack(header)
    if magic != MAGIC:
        raise ProtocolError(f"Bad frame magic {magic!r}")
    try:
        frame_type = FrameType(raw_type)
    except ValueError as e:
        raise ProtocolError(f"Unknown frame type 0x{raw_type:02x}") from e
    if length > MAX_PAYLOAD:
        raise ProtocolError(f"Frame payload of {length} bytes is too large")
    return frame_type, length


def recv_exactly(sock: socket.socket, size: int) -> bytes:
    """Read exactly `size` bytes from a blocking socket."""
    chunks = []
    remaining = size
    while remaining:
        chunk = sock.recv(remaining)
        if not chunk:
            raise ConnectionError(f"Connection closed with {remaining} of {size} bytes unread")
        chunks.append(chunk)
        remaining -= len(chunk)
    return b"".join(chunks)


def read_frame_blocking(sock: socket.socket) -> Frame:
    frame_type, length = parse_header(recv_exactly(sock, HEADER.size))
    return Frame(frame_type, recv_exactly(sock, length))


async def read_frame(reader: asyncio.StreamReader) -> Frame:
    """
    Raises:
        asyncio.IncompleteReadError: if the peer closes mid-frame or between frames.
        ProtocolError: on a malformed header.
    """
    frame_type, length = parse_header(await reader.readexactly(HEADER.size))
    return Frame(frame_type, await reader.readexactly(length))


def encode_hello(hello: Hello) -> bytes:
    return HELLO.pack(KIND_CODES[SchemeKind(hello.kind)], hello.q, hello.n, hello.k, hello.ell or 0)


def decode_hello(payload: bytes) -> Hello:
    if len(payload) != HELLO.size:
        raise ProtocolError(f"HELLO payload must be {HELLO.size} bytes, got {len(payload)}")
    kind_code, q, n, k, ell = HELLO.unpack(payload)
    if kind_code not in KINDS_BY_CODE:
        raise ProtocolError(f"Unknown scheme kind code {kind_code}", ErrorCode.CONFIG_MISMATCH)
    return Hello(KINDS_BY_CODE[kind_code], q, n, k, ell or None)


def encode_challenge(challenge: Challenge) -> bytes:
    match challenge.kind:
        case SchemeKind.BASIC:
            return struct.pack(">I", challenge.payload - 1)
        case SchemeKind.MULTIBLOCK:
            indices = challenge.payload
            return struct.pack(f">H{len(indices)}I", len(indices), *indices)
    pairs = [(i, v) for i, v in enumerate(challenge.payload.values, start=1) if v]
    return struct.pack(">H", len(pairs)) + b"".join(struct.pack(">IQ", i, v) for i, v in pairs)


def _unpack_exact(fmt: str, payload: bytes, what: str) -> tuple:
    expected = struct.calcsize(fmt)
    if len(payload) != expected:
        raise ProtocolError(f"{what} payload must be {expected} bytes, got {len(payload)}")
    return struct.unpack(fmt, payload)


def decode_challenge(scheme: SchemeDescriptor, payload: bytes) -> Challenge:
    """
    Parse a CHALLENGE payload and check membership in the scheme's challenge space.

    Raises:
        ProtocolError: if the payload is not shaped like a challenge of this scheme.
        InvalidChallenge: if it is well formed but not a member of the challenge space.
    """
    if len(payload) < 2:
        raise ProtocolError("Truncated CHALLENGE payload")
    match scheme.kind:
        case SchemeKind.BASIC:
            (ordinal,) = _unpack_exact(">I", payload, "Basic CHALLENGE")
            challenge = Challenge(scheme.kind, ordinal + 1)
        case SchemeKind.MULTIBLOCK:
            (count,) = struct.unpack(">H", payload[:2])
            indices = _unpack_exact(f">{count}I", payload[2:], "Multiblock CHALLENGE")
            challenge = Challenge(scheme.kind, tuple(indices))
        case _:
            (count,) = struct.unpack(">H", payload[:2])
            if count > scheme.n:
                raise InvalidChallenge(f"{count} nonzero coordinates in a length-{scheme.n} challenge")
            flat = _unpack_exact(">" + "IQ" * count, payload[2:], "Linear CHALLENGE")
            values = [0] * scheme.n
            for index, coefficient in zip(flat[::2], flat[1::2]):
                if not 1 <= index <= scheme.n:
                    raise InvalidChallenge(f"Coordinate {index} outside [1, {scheme.n}]")
                if values[index - 1]:
                    raise InvalidChallenge(f"Coordinate {index} appears twice")
                if not 0 < coefficient < scheme.q:
                    raise InvalidChallenge(f"Coefficient {coefficient} is not a nonzero element of F_{scheme.q}")
                values[index - 1] = coefficient
            challenge = Challenge(scheme.kind, FieldVector(scheme.code.field, tuple(values)))
    validate_challenge(scheme, challenge)
    return challenge


def response_length(scheme: SchemeDescriptor) -> int:
    """Field elements in one RESPONSE: 2 (mu, tau) for sw, else the keyless width."""
    return 2 if scheme.kind == SchemeKind.SW else scheme.response_width


def encode_response(values: Sequence[int]) -> bytes:
    return b"".join(int(v).to_bytes(ELEMENT_BYTES, "big") for v in values)


def decode_response(scheme: SchemeDescriptor, payload: bytes) -> tuple[int, ...]:
    count = response_length(scheme)
    if len(payload) != count * ELEMENT_BYTES:
        raise ProtocolError(f"RESPONSE must carry {count} element(s), got {len(payload)} bytes")
    values = tuple(int.from_bytes(payload[i:i + ELEMENT_BYTES], "big")
                   for i in range(0, len(payload), ELEMENT_BYTES))
    if any(v >= scheme.q for v in values):
        raise ProtocolError(f"RESPONSE element not below q={scheme.q}")
    return values


def encode_error(code: ErrorCode, message: str) -> bytes:
    return bytes([int(code)]) + message.encode("utf-8")


def decode_error(payload: bytes) -> tuple[int, str]:
    if not payload:
        return int(ErrorCode.PROTOCOL_VIOLATION), ""
    return payload[0], payload[1:].decode("utf-8", errors="replace")
