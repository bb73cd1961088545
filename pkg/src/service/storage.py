"""
storage.py: Blocks files, the prover's copy of an encoded file.
A raw file is cut into message units of k field elements (big-endian, the smallest byte
width holding q-1), each unit is encoded independently and the codewords are written one
per line below a key=value header.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

from ..algebra import FieldVector
from ..coding import EncodedMessage, LinearCode, decode_unencode, encode
from ..errors import ParameterError

logger = logging.getLogger(__name__)


def element_width(q: int) -> int:
    """Bytes per field element in a raw file."""
    return max(1, ((q - 1).bit_length() + 7) // 8)


@dataclass(frozen=True)
class BlocksFile:
    code: LinearCode
    units: tuple[EncodedMessage, ...]
    length: int

    def unit(self, index: int) -> EncodedMessage:
        if not 0 <= index < len(self.units):
            raise ParameterError(f"Unit {index} outside [0, {len(self.units)})")
        return self.units[index]


def chunk_bytes(data: bytes, code: LinearCode) -> list[FieldVector]:
    """
    Split raw bytes into messages of k elements, zero-padding the tail.

    Raises:
        ParameterError: if a chunk encodes a value that is not below q.
    """
    q, k = code.q, code.k
    width = element_width(q)
    unit_bytes = width * k
    padded = data + bytes(-len(data) % unit_bytes) if data else bytes(unit_bytes)
    messages = []
    for start in range(0, len(padded), unit_bytes):
        values = []
        for offset in range(start, start + unit_bytes, width):
            value = int.from_bytes(padded[offset:offset + width], "big")
            if value >= q:
                raise ParameterError(f"Byte offset {offset} holds {value}, which is not below q={q}")
            values.append(value)
        messages.append(FieldVector(code.field, tuple(values)))
    return messages


def encode_file(data: bytes, code: LinearCode) -> BlocksFile:
    units = tuple(encode(code, m) for m in chunk_bytes(data, code))
    logger.info("Encoded %d bytes into %d unit(s) of %d blocks", len(data), len(units), code.n)
    return BlocksFile(code, units, len(data))


def decode_units(blocks: BlocksFile) -> bytes:
    """Recover the raw bytes from intact codewords."""
    width = element_width(blocks.code.q)
    data = b"".join(v.to_bytes(width, "big")
                    for unit in blocks.units
                    for v in decode_unencode(blocks.code, unit).values)
    return data[:blocks.length]


def save_blocks_file(blocks: BlocksFile, path: str | Path) -> None:
    code = blocks.code
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"q={code.q}\nn={code.n}\nk={code.k}\nkind={code.kind}\n")
        f.write(f"units={len(blocks.units)}\nlength={blocks.length}\n")
        for unit in blocks.units:
            f.write(" ".join(f"{v:x}" for v in unit.values) + "\n")
    logger.info("Wrote %s", path)


def load_blocks_file(path: str | Path, code: LinearCode) -> BlocksFile:
    """
    Raises:
        ParameterError: if the header disagrees with the code or a unit is malformed.
        NotACodeword: if a stored unit is not a codeword of the code.
    """
    header: dict[str, str] = {}
    rows: list[tuple[int, ...]] = []
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            if "=" in line:
                key, value = line.split("=", 1)
                header[key.strip()] = value.strip()
            else:
                rows.append(tuple(int(v, 16) for v in line.split()))
    try:
        shape = (int(header["q"]), int(header["n"]), int(header["k"]))
        unit_count, length = int(header["units"]), int(header["length"])
    except KeyError as e:
        raise ParameterError(f"Blocks file {path} is missing header {e}") from e
    if shape != (code.q, code.n, code.k):
        raise ParameterError(f"Blocks file {path} was written for q, n, k = {shape}; "
                             f"the configured code has {(code.q, code.n, code.k)}")
    if len(rows) != unit_count:
        raise ParameterError(f"Blocks file {path} declares {unit_count} unit(s) but holds {len(rows)}")
    for number, row in enumerate(rows):
        if len(row) != code.n or any(v >= code.q for v in row):
            raise ParameterError(f"Unit {number} of {path} is not {code.n} elements below q={code.q}")
    units = tuple(EncodedMessage(FieldVector(code.field, row), code) for row in rows)
    return BlocksFile(code, units, length)
