"""
base64codec.py
This file contains the Base64 text codec and the sextet pipeline that feeds the
watermark: byte stream -> 6-bit values -> MSB-first 2-bit triples (V1, V2, V3).
"""
import base64
import binascii
from typing import NamedTuple

import numpy as np

from vidmark.errors import InvalidBase64

SEXTET_WEIGHTS = np.array([32, 16, 8, 4, 2, 1], dtype=np.uint8)
SEXTET_SHIFTS = np.arange(5, -1, -1, dtype=np.uint8)
TRIPLE_SHIFTS = np.array([4, 2, 0], dtype=np.uint8)


class TwoBitTriple(NamedTuple):
    v1: int
    v2: int
    v3: int


def b64_encode(data: bytes) -> str:
    return base64.b64encode(bytes(data)).decode("ascii")


def b64_decode(text: str) -> bytes:
    """Strict decode: standard alphabet, mandatory canonical padding, no whitespace."""
    try:
        decoded = base64.b64decode(text, validate=True)
    except (binascii.Error, ValueError) as e:
        raise InvalidBase64(f"not valid Base64: {e}")
    # rejects non-zero padding bits and other non-canonical spellings
    canonical = b64_encode(decoded)
    given = text if isinstance(text, str) else bytes(text).decode("ascii")
    if canonical != given:
        raise InvalidBase64("Base64 text is not in canonical padded form")
    return decoded


def sextet_count(byte_count: int) -> int:
    return (8 * byte_count + 5) // 6


def sextets_of(data: bytes) -> np.ndarray:
    """Regroup the bits of `data` (MSB first) into 6-bit values, zero-padding the tail."""
    bits = np.unpackbits(np.frombuffer(bytes(data), dtype=np.uint8))
    count = sextet_count(len(data))
    padded = np.zeros(count * 6, dtype=np.uint8)
    padded[: bits.size] = bits
    return padded.reshape(-1, 6) @ SEXTET_WEIGHTS


def sextets_to_bytes(sextets: np.ndarray, byte_count: int) -> bytes:
    """Inverse of sextets_of: unpack 6-bit values and keep the first byte_count bytes."""
    values = np.asarray(sextets, dtype=np.uint8)
    if sextet_count(byte_count) > values.size:
        raise ValueError(f"{values.size} sextets cannot hold {byte_count} bytes")
    bits = ((values[:, None] >> SEXTET_SHIFTS) & 1).reshape(-1)
    return np.packbits(bits[: byte_count * 8]).tobytes()


def pack_sextets(sextets: np.ndarray) -> bytes:
    """Pack every sextet MSB-first into bytes, zero-padding the last byte."""
    values = np.asarray(sextets, dtype=np.uint8)
    bits = ((values[:, None] >> SEXTET_SHIFTS) & 1).reshape(-1)
    return np.packbits(bits).tobytes()


def split_sextet(s: int) -> TwoBitTriple:
    if not 0 <= s < 64:
        raise ValueError(f"sextet out of range: {s}")
    return TwoBitTriple((s >> 4) & 3, (s >> 2) & 3, s & 3)


def join_triple(triple: TwoBitTriple) -> int:
    v1, v2, v3 = triple
    return (v1 << 4) | (v2 << 2) | v3


def triples_of(sextets: np.ndarray) -> np.ndarray:
    """Vectorized split_sextet: (N,) sextets -> (N, 3) matrix of (v1, v2, v3)."""
    values = np.asarray(sextets, dtype=np.uint8)
    return (values[:, None] >> TRIPLE_SHIFTS) & 3


def sextets_of_triples(triples: np.ndarray) -> np.ndarray:
    values = np.asarray(triples, dtype=np.uint8) & 3
    return (values[:, 0] << 4) | (values[:, 1] << 2) | values[:, 2]
