"""
server.py: The prover daemon.
Serves one stored codeword (plus its tag in keyed mode) over the framed protocol. The
daemon never holds the verifier's key and never reports whether an answer was accepted.
Fault plug-ins make it answer wrongly on chosen challenges for testing; they depend only
on the challenge ordinal and a seed, never on arrival order.
"""
from __future__ import annotations

import asyncio
import logging
import random
import threading
from dataclasses import dataclass, field

from ..coding import EncodedMessage
from ..errors import InvalidChallenge, ParameterError, ProtocolError
from ..keyed_sw import SwTag, sw_respond
from ..schemes import Challenge, SchemeDescriptor, SchemeKind, ordinal_of, respond
from .protocol import (ErrorCode, FrameType, Hello, decode_challenge, decode_hello,
                       encode_error, encode_frame, encode_hello, encode_response, read_frame)

logger = logging.getLogger(__name__)


class Behaviour:
    """Honest answers. Subclasses pick ordinals to corrupt or a session length to drop at."""
    drop_after: int | None = None

    def corrupts(self, ordinal: int) -> bool:  # pylint: disable=unused-argument
        return False

    def describe(self) -> str:
        return "honest"


class CorruptOrdinals(Behaviour):
    def __init__(self, ordinals):
        self.ordinals = frozenset(ordinals)

    def corrupts(self, ordinal: int) -> bool:
        return ordinal in self.ordinals

    def describe(self) -> str:
        return f"corrupt:{','.join(str(o) for o in sorted(self.ordinals))}"


class CorruptRate(Behaviour):
    """Corrupts an ordinal when a generator seeded with (seed, ordinal) falls below `rate`."""

    def __init__(self, rate: float, seed: str):
        if not 0 <= rate <= 1:
            raise ParameterError(f"Corruption rate {rate} outside [0, 1]")
        self.rate = rate
        self.seed = seed

    def corrupts(self, ordinal: int) -> bool:
        return random.Random(f"{self.seed}/{ordinal}").random() < self.rate

    def describe(self) -> str:
        return f"rate:{self.rate}:{self.seed}"


class DropAfter(Behaviour):
    """Answers honestly, then closes every session after `count` responses."""

    def __init__(self, count: int):
        if count < 0:
            raise ParameterError(f"Drop count must be non-negative, got {count}")
        self.drop_after = count

    def describe(self) -> str:
        return f"drop:{self.drop_after}"


def parse_fault(spec: str | None) -> Behaviour:
    """
    'corrupt:1,3' | 'rate:0.2:seed' | 'drop:5' | None for honest.

    Raises:
        ParameterError: on an unknown or malformed spec.
    """
    if not spec or spec == "honest":
        return Behaviour()
    name, _, rest = spec.partition(":")
    try:
        match name:
            case "corrupt":
                return CorruptOrdinals(int(o) for o in rest.split(",") if o.strip())
            case "rate":
                rate, _, seed = rest.partition(":")
                return CorruptRate(float(rate), seed or "0")
            case "drop":
                return DropAfter(int(rest))
    except ValueError as e:
        raise ParameterError(f"Malformed fault spec {spec!r}: {e}") from e
    raise ParameterError(f"Unknown fault spec {spec!r}; expected corrupt:, rate: or drop:")


@dataclass(frozen=True)
class ServerState:
    """Read-only after startup and shared by every session."""
    scheme: SchemeDescriptor
    M: EncodedMessage
    tag: SwTag | None = None
    behaviour: Behaviour = field(default_factory=Behaviour)

    def __post_init__(self):
        if self.scheme.kind == SchemeKind.SW and self.tag is None:
            raise ParameterError("The keyed scheme needs the tag")
        if self.M.code != self.scheme.code:
            raise ParameterError("Stored codeword does not belong to the scheme's code")

    @property
    def hello(self) -> Hello:
        return Hello.of(self.scheme)

    def answer(self, challenge: Challenge) -> tuple[int, ...]:
        """The plug-in's response; a corrupted answer has its last element moved by one."""
        if self.scheme.kind == SchemeKind.SW:
            values = list(sw_respond(self.M, self.tag, challenge).values)
        else:
            values = list(respond(self.scheme, self.M, challenge).values)
        ordinal = ordinal_of(self.scheme, challenge)
        if self.behaviour.corrupts(ordinal):
            values[-1] = (values[-1] + 1) % self.scheme.q
            logger.debug("Corrupting ordinal %d", ordinal)
        return tuple(values)


class ProverServer:
    """asyncio stream server; one session per connection, strictly request then response."""

    def __init__(self, state: ServerState, host: str = "127.0.0.1", port: int = 0):
        self.state = state
        self.host = host
        self.port = port
        self._server: asyncio.AbstractServer | None = None
        self._writers: set[asyncio.StreamWriter] = set()

    async def start(self) -> tuple[str, int]:
        self._server = await asyncio.start_server(self._handle, self.host, self.port)
        address = self._server.sockets[0].getsockname()[:2]
        logger.info("Prover listening on %s:%d (%s, behaviour %s)", address[0], address[1],
                    self.state.scheme.kind.value, self.state.behaviour.describe())
        return address

    async def serve_forever(self) -> None:
        if self._server is None:
            await self.start()
        async with self._server:
            await self._server.serve_forever()

    async def close(self) -> None:
        if self._server is None:
            return
        self._server.close()
        for writer in list(self._writers):
            writer.close()
        await self._server.wait_closed()

    @staticmethod
    async def _send(writer: asyncio.StreamWriter, frame_type: FrameType, payload: bytes) -> None:
        writer.write(encode_frame(frame_type, payload))
        await writer.drain()

    async def _fail(self, writer: asyncio.StreamWriter, code: ErrorCode, message: str) -> None:
        logger.error("Session error 0x%02x: %s", int(code), message)
        await self._send(writer, FrameType.ERROR, encode_error(code, message))

    async def _handle(self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter) -> None:
        peer = writer.get_extra_info("peername")
        self._writers.add(writer)
        logger.info("Session opened from %s", peer)
        answered = 0
        try:
            frame = await read_frame(reader)
            if frame.frame_type != FrameType.HELLO:
                await self._fail(writer, ErrorCode.PROTOCOL_VIOLATION, "Expected HELLO")
                return
            if decode_hello(frame.payload) != self.state.hello:
                await self._fail(writer, ErrorCode.CONFIG_MISMATCH,
                                 f"Server runs {self.state.hello}")
                return
            await self._send(writer, FrameType.HELLO, encode_hello(self.state.hello))
            while True:
                drop_after = self.state.behaviour.drop_after
                if drop_after is not None and answered >= drop_after:
                    logger.info("Dropping session from %s after %d responses", peer, answered)
                    return
                try:
                    frame = await read_frame(reader)
                except asyncio.IncompleteReadError as e:
                    if e.partial:
                        raise
                    break
                if frame.frame_type != FrameType.CHALLENGE:
                    await self._fail(writer, ErrorCode.PROTOCOL_VIOLATION,
                                     f"Expected CHALLENGE, got {frame.frame_type.name}")
                    return
                challenge = decode_challenge(self.state.scheme, frame.payload)
                await self._send(writer, FrameType.RESPONSE, encode_response(self.state.answer(challenge)))
                answered += 1
        except InvalidChallenge as e:
            await self._fail(writer, ErrorCode.INVALID_CHALLENGE, str(e))
        except ProtocolError as e:
            await self._fail(writer, ErrorCode(e.code), str(e))
        except (asyncio.IncompleteReadError, ConnectionError) as e:
            logger.warning("Session from %s ended abruptly: %s", peer, e)
        finally:
            self._writers.discard(writer)
            writer.close()
            logger.info("Session from %s closed after %d responses", peer, answered)


def serve(state: ServerState, host: str, port: int) -> None:
    """Run the daemon in the foreground until interrupted."""
    asyncio.run(ProverServer(state, host, port).serve_forever())


class ServerThread(threading.Thread):
    """Runs a ProverServer on its own event loop, for tests and in-process extraction."""

    def __init__(self, state: ServerState, host: str = "127.0.0.1", port: int = 0):
        super().__init__(daemon=True)
        self.state = state
        self.host = host
        self.port = port
        self.address: tuple[str, int] | None = None
        self._ready = threading.Event()
        self._loop: asyncio.AbstractEventLoop | None = None
        self._stopped: asyncio.Event | None = None
        self._error: BaseException | None = None

    def run(self) -> None:
        try:
            asyncio.run(self._main())
        except BaseException as e:  # pylint: disable=broad-except
            self._error = e
            self._ready.set()

    async def _main(self) -> None:
        self._loop = asyncio.get_running_loop()
        self._stopped = asyncio.Event()
        server = ProverServer(self.state, self.host, self.port)
        self.address = await server.start()
        self._ready.set()
        await self._stopped.wait()
        await server.close()

    def start(self) -> None:
        super().start()
        self._ready.wait(timeout=10)
        if self._error is not None:
            raise self._error
        if self.address is None:
            raise RuntimeError("Prover server did not start")

    def stop(self) -> None:
        if self._loop is not None and self._stopped is not None:
            self._loop.call_soon_threadsafe(self._stopped.set)
        self.join(timeout=10)

    def __enter__(self) -> ServerThread:
        self.start()
        return self

    def __exit__(self, *exc) -> None:
        self.stop()
