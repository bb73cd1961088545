"""
pairstore.py: Precomputed challenge-response pairs for bounded-use audits.
Every record is used at most once; the cursor only moves forward and is persisted by
atomic rewrite so an interrupted audit never hands out a consumed pair again.
"""
from __future__ import annotations

import logging
import os
import random
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

from ..algebra import ELEMENT_BYTES
from ..coding import EncodedMessage
from ..errors import ParameterError, StoreExhausted
from ..schemes import Response, SchemeDescriptor, SchemeKind, challenge_at, challenge_count, respond

logger = logging.getLogger(__name__)

SAMPLING = "with"


class PairRecord(NamedTuple):
    ordinal: int
    response: Response


@dataclass
class PairStore:
    """
    Header fields identify the scheme the pairs belong to; `cursor` is the index of the
    next unused record.
    """
    # pylint: disable=too-many-instance-attributes
    scheme: str
    q: int
    n: int
    k: int
    ell: int | None
    seed: str
    records: list[PairRecord] = field(default_factory=list)
    cursor: int = 0
    sampling: str = SAMPLING
    path: Path | None = None

    @property
    def remaining(self) -> int:
        return len(self.records) - self.cursor

    def matches(self, scheme: SchemeDescriptor) -> bool:
        return (self.scheme, self.q, self.n, self.k, self.ell) == \
            (scheme.kind.value, scheme.q, scheme.n, scheme.code.k, scheme.ell)

    def take(self, t: int) -> list[PairRecord]:
        """
        Hand out the next t unused records and advance the cursor, saving the store first
        when it is backed by a file.

        Raises:
            StoreExhausted: if fewer than t records remain.
        """
        if t < 1:
            raise ParameterError(f"t must be positive, got {t}")
        if t > self.remaining:
            raise StoreExhausted(f"Pair store has {self.remaining} unused record(s), {t} requested")
        taken = self.records[self.cursor:self.cursor + t]
        self.cursor += t
        if self.path is not None:
            save_pair_store(self, self.path)
        logger.info("Took %d pair(s); %d remain", t, self.remaining)
        return taken


def precompute_pairs(scheme: SchemeDescriptor, M: EncodedMessage, count: int, seed) -> PairStore:
    """
    Draw `count` challenge ordinals uniformly with replacement and store the authentic
    responses. Keyed schemes are audited with the key instead.
    """
    if count < 1:
        raise ParameterError(f"count must be positive, got {count}")
    if scheme.kind == SchemeKind.SW:
        raise ParameterError("The keyed scheme is audited with its key, not with stored pairs")
    gamma = challenge_count(scheme)
    rng = random.Random(str(seed))
    records = []
    for _ in range(count):
        ordinal = rng.randrange(gamma)
        records.append(PairRecord(ordinal, respond(scheme, M, challenge_at(scheme, ordinal))))
    logger.info("Precomputed %d pair(s) over gamma=%d", count, gamma)
    return PairStore(scheme.kind.value, scheme.q, scheme.n, scheme.code.k, scheme.ell,
                     str(seed), records)


def _hex_response(response: Response) -> str:
    return "".join(f"{v:0{2 * ELEMENT_BYTES}x}" for v in response.values)


def _parse_response(text: str) -> Response:
    step = 2 * ELEMENT_BYTES
    if not text or len(text) % step:
        raise ParameterError(f"Response {text!r} is not a sequence of {ELEMENT_BYTES}-byte elements")
    return Response(tuple(int(text[i:i + step], 16) for i in range(0, len(text), step)))


def save_pair_store(store: PairStore, path: str | Path) -> None:
    """Rewrite the store through a temporary file and an atomic rename."""
    path = Path(path)
    fd, temp_path = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as f:
            f.write(f"scheme={store.scheme}\nq={store.q}\nn={store.n}\nk={store.k}\n")
            f.write(f"ell={store.ell or 0}\nseed={store.seed}\ncount={len(store.records)}\n")
            f.write(f"cursor={store.cursor}\nsampling={store.sampling}\n")
            for record in store.records:
                f.write(f"{record.ordinal} {_hex_response(record.response)}\n")
        os.replace(temp_path, path)
    except BaseException:
        Path(temp_path).unlink(missing_ok=True)
        raise
    store.path = path
    logger.debug("Saved pair store %s at cursor %d", path, store.cursor)


def load_pair_store(path: str | Path) -> PairStore:
    header: dict[str, str] = {}
    records: list[PairRecord] = []
    with open(path, "r", encoding="utf-8") as f:
        for number, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            if "=" in line:
                key, value = line.split("=", 1)
                header[key.strip()] = value.strip()
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ParameterError(f"{path}:{number}: expected '<ordinal> <response-hex>'")
            records.append(PairRecord(int(parts[0]), _parse_response(parts[1])))
    try:
        store = PairStore(header["scheme"], int(header["q"]), int(header["n"]), int(header["k"]),
                          int(header["ell"]) or None, header["seed"], records,
                          int(header["cursor"]), header.get("sampling", SAMPLING), Path(path))
        count = int(header["count"])
    except KeyError as e:
        raise ParameterError(f"Pair store {path} is missing header {e}") from e
    if count != len(records):
        raise ParameterError(f"Pair store {path} declares {count} record(s) but holds {len(records)}")
    if not 0 <= store.cursor <= count:
        raise ParameterError(f"Pair store {path} has cursor {store.cursor} outside [0, {count}]")
    return store
