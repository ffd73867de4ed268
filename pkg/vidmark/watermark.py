"""
watermark.py
This file contains the I-frame watermark: embedding, blind header read,
restoration with the key and checksum verification.

Pixel layout, row-major from the top-left pixel:
    pixels 0..14   the 11-byte PayloadHeader as 15 sextets, written by
                   SUBSTITUTING the 2 LSBs of R, G, B with (v1, v2, v3)
    pixels 15..    sextets_of(watermark), applied by XOR on the 2 LSBs
    remaining      untouched
The original header LSBs travel in the key, so restoration is exact.
"""
import struct
import zlib
from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field, root_validator, validator

from config.logging_config import get_logger
from vidmark.base64codec import (
    b64_decode,
    b64_encode,
    pack_sextets,
    sextet_count,
    sextets_of,
    sextets_of_triples,
    sextets_to_bytes,
    triples_of,
)
from vidmark.container import Mv1Video, RgbFrame
from vidmark.errors import (
    BadMagic,
    BadVersion,
    CapacityError,
    InvalidBase64,
    InvalidKey,
    KeyFrameCountMismatch,
)
from vidmark.parallel import DEFAULT_WORKERS, par_apply, xor_kernel

logger = get_logger(__name__)

HEADER_MAGIC = b"WM"
HEADER_VERSION = 0x01
HEADER_STRUCT = struct.Struct(">2sBII")
HEADER_PIXELS = sextet_count(HEADER_STRUCT.size)
HEADER_BACKUP_SIZE = (HEADER_PIXELS * 6 + 7) // 8
# low bits of the last backup byte past the 15 header sextets, always zero
BACKUP_PADDING_MASK = (1 << (HEADER_BACKUP_SIZE * 8 - HEADER_PIXELS * 6)) - 1
LSB_MASK = 0x03
KEEP_MASK = 0xFC


class PayloadHeader(BaseModel):
    magic: bytes = HEADER_MAGIC
    version: int = HEADER_VERSION
    payload_len: int = Field(ge=0, le=0xFFFFFFFF)
    crc32: int = Field(ge=0, le=0xFFFFFFFF)

    def to_bytes(self) -> bytes:
        return HEADER_STRUCT.pack(self.magic, self.version, self.payload_len, self.crc32)

    @classmethod
    def from_bytes(cls, raw: bytes) -> "PayloadHeader":
        magic, version, payload_len, checksum = HEADER_STRUCT.unpack(raw)
        if magic != HEADER_MAGIC:
            raise BadMagic(f"watermark header magic {magic!r} is not {HEADER_MAGIC!r}")
        if version != HEADER_VERSION:
            raise BadVersion(f"unsupported watermark header version {version}")
        return cls(magic=magic, version=version, payload_len=payload_len, crc32=checksum)


class WatermarkKey(BaseModel):
    """Everything the client needs to restore and verify: the Base64 watermark
    text, one header-LSB backup per I-frame (in I-frame order) and the CRC."""

    base64_text: str
    header_backups: List[bytes]
    crc32: int = Field(ge=0, le=0xFFFFFFFF)

    @validator("base64_text")
    def text_decodes(cls, value):
        # InvalidBase64 is not a ValueError, so it propagates as-is
        b64_decode(value)
        return value

    @validator("header_backups", each_item=True)
    def backup_size(cls, value):
        if len(value) != HEADER_BACKUP_SIZE:
            raise InvalidKey(
                f"header backup must be {HEADER_BACKUP_SIZE} bytes, got {len(value)}"
            )
        if value[-1] & BACKUP_PADDING_MASK:
            raise InvalidKey(f"header backup padding bits are not zero: {value.hex()}")
        return value

    @property
    def watermark(self) -> bytes:
        return b64_decode(self.base64_text)

    def crc_matches(self) -> bool:
        return crc32(self.watermark) == self.crc32


class VerificationReport(BaseModel):
    frame_ordinal: int
    embedded_crc: Optional[int] = None
    computed_crc: int
    match: bool
    error: Optional[str] = None

    @root_validator(skip_on_failure=True)
    def match_follows_crcs(cls, values):
        expected = values["error"] is None and values["embedded_crc"] == values["computed_crc"]
        if values["match"] != expected:
            raise ValueError("match must equal (embedded_crc == computed_crc) with no read error")
        return values


def crc32(data: bytes) -> int:
    """CRC-32/ISO-HDLC (reflected 0x04C11DB7, init and final XOR 0xFFFFFFFF)."""
    return zlib.crc32(bytes(data)) & 0xFFFFFFFF


def required_pixels(watermark_len: int) -> int:
    return HEADER_PIXELS + sextet_count(watermark_len)


def pixel_capacity(pixel_count: int) -> int:
    return max(0, 6 * (pixel_count - HEADER_PIXELS) // 8)


def frame_capacity(frame: RgbFrame) -> int:
    """Largest watermark, in bytes, that fits one copy into the frame."""
    return pixel_capacity(frame.pixel_count)


def _check_capacity(frame: RgbFrame, watermark_len: int, where: str = "frame") -> None:
    needed = required_pixels(watermark_len)
    if needed > frame.pixel_count:
        raise CapacityError(
            f"{where}: a {watermark_len}-byte watermark needs {needed} pixels, "
            f"the {frame.width}x{frame.height} frame has {frame.pixel_count}"
        )


def body_mask(frame: RgbFrame, watermark: bytes) -> np.ndarray:
    """Per-pixel XOR operand: watermark triples from pixel 15 on, zero elsewhere."""
    aux = np.zeros_like(frame.pixels)
    triples = triples_of(sextets_of(watermark))
    aux.reshape(-1, 3)[HEADER_PIXELS : HEADER_PIXELS + len(triples)] = triples
    return aux


def _header_lsbs(frame: RgbFrame) -> np.ndarray:
    return frame.flat[:HEADER_PIXELS] & LSB_MASK


def _write_header_lsbs(frame: RgbFrame, triples: np.ndarray) -> None:
    head = frame.flat[:HEADER_PIXELS]
    frame.flat[:HEADER_PIXELS] = (head & KEEP_MASK) | triples


def _embed(frame: RgbFrame, watermark: bytes, checksum: int, workers: int) -> Tuple[RgbFrame, bytes]:
    backup = pack_sextets(sextets_of_triples(_header_lsbs(frame)))
    marked = par_apply(frame, xor_kernel, body_mask(frame, watermark), workers)
    header = PayloadHeader(payload_len=len(watermark), crc32=checksum).to_bytes()
    _write_header_lsbs(marked, triples_of(sextets_of(header)))
    return marked, backup


def embed_frame(
    frame: RgbFrame, watermark: bytes, workers: int = DEFAULT_WORKERS
) -> Tuple[RgbFrame, WatermarkKey]:
    watermark = bytes(watermark)
    _check_capacity(frame, len(watermark))
    checksum = crc32(watermark)
    marked, backup = _embed(frame, watermark, checksum, workers)
    key = WatermarkKey(
        base64_text=b64_encode(watermark), header_backups=[backup], crc32=checksum
    )
    return marked, key


def read_header(marked: RgbFrame) -> PayloadHeader:
    """Blind read: needs neither the original frame nor the key."""
    if marked.pixel_count < HEADER_PIXELS:
        raise CapacityError(
            f"frame of {marked.pixel_count} pixels cannot hold the {HEADER_PIXELS}-pixel header"
        )
    sextets = sextets_of_triples(_header_lsbs(marked))
    return PayloadHeader.from_bytes(sextets_to_bytes(sextets, HEADER_STRUCT.size))


def _key_watermark(key: WatermarkKey) -> bytes:
    try:
        return key.watermark
    except InvalidBase64 as e:
        raise InvalidKey(f"key text does not decode: {e.message}")


def restore_frame(
    marked: RgbFrame,
    key: WatermarkKey,
    frame_ordinal: int = 0,
    check_header: bool = True,
    workers: int = DEFAULT_WORKERS,
) -> RgbFrame:
    """Undo the embedding: re-XOR the body and put the backed-up header LSBs back."""
    watermark = _key_watermark(key)
    if not 0 <= frame_ordinal < len(key.header_backups):
        raise InvalidKey(
            f"key holds {len(key.header_backups)} header backups, no entry for I-frame {frame_ordinal}"
        )
    _check_capacity(marked, len(watermark), where=f"I-frame {frame_ordinal}")
    if check_header:
        header = read_header(marked)
        if header.payload_len != len(watermark):
            raise InvalidKey(
                f"frame header announces {header.payload_len} watermark bytes, key decodes to {len(watermark)}"
            )

    restored = par_apply(marked, xor_kernel, body_mask(marked, watermark), workers)
    backup = sextets_of(key.header_backups[frame_ordinal])[:HEADER_PIXELS]
    _write_header_lsbs(restored, triples_of(backup))
    return restored


def verify_frame(marked: RgbFrame, key: WatermarkKey, ordinal: int = 0) -> VerificationReport:
    header = read_header(marked)
    computed = crc32(b64_decode(key.base64_text))
    return VerificationReport(
        frame_ordinal=ordinal,
        embedded_crc=header.crc32,
        computed_crc=computed,
        match=header.crc32 == computed,
    )


def embed_video(
    video: Mv1Video, watermark: bytes, workers: int = DEFAULT_WORKERS
) -> Tuple[Mv1Video, WatermarkKey]:
    """Embed one full watermark copy in every I-frame; P/B/D payloads pass through untouched."""
    watermark = bytes(watermark)
    frames = video.i_frames()
    for ordinal, frame in enumerate(frames):
        _check_capacity(frame, len(watermark), where=f"I-frame {ordinal}")

    checksum = crc32(watermark)
    marked_frames = []
    backups = []
    for ordinal, frame in enumerate(frames):
        marked, backup = _embed(frame, watermark, checksum, workers)
        marked_frames.append(marked)
        backups.append(backup)
        logger.debug(f"Embedded {len(watermark)} bytes into I-frame {ordinal}")

    logger.info(f"Watermarked {len(frames)} I-frame(s) with {len(watermark)} bytes, crc32={checksum:08x}")
    key = WatermarkKey(base64_text=b64_encode(watermark), header_backups=backups, crc32=checksum)
    return video.with_i_frames(marked_frames), key


def _verify_or_report(frame: RgbFrame, key: WatermarkKey, ordinal: int, computed: int) -> VerificationReport:
    try:
        return verify_frame(frame, key, ordinal)
    except (BadMagic, BadVersion, CapacityError) as e:
        logger.warning(f"I-frame {ordinal}: header unreadable: {e.name}: {e.message}")
        return VerificationReport(
            frame_ordinal=ordinal, computed_crc=computed, match=False, error=f"{e.name}: {e.message}"
        )


def verify_video(marked: Mv1Video, key: WatermarkKey) -> List[VerificationReport]:
    computed = crc32(b64_decode(key.base64_text))
    reports = [
        _verify_or_report(frame, key, ordinal, computed)
        for ordinal, frame in enumerate(marked.i_frames())
    ]
    for report in reports:
        if not report.match and report.error is None:
            logger.warning(
                f"I-frame {report.frame_ordinal}: embedded crc32 {report.embedded_crc:08x} "
                f"!= computed {report.computed_crc:08x}"
            )
    return reports


def restore_and_verify_video(
    marked: Mv1Video, key: WatermarkKey, workers: int = DEFAULT_WORKERS
) -> Tuple[Mv1Video, List[VerificationReport]]:
    frames = marked.i_frames()
    if len(key.header_backups) != len(frames):
        raise KeyFrameCountMismatch(
            f"key carries {len(key.header_backups)} header backups for {len(frames)} I-frames"
        )
    reports = verify_video(marked, key)
    # headers were already read by verification, a damaged one must not block restoration
    restored = [
        restore_frame(frame, key, ordinal, check_header=False, workers=workers)
        for ordinal, frame in enumerate(frames)
    ]
    return marked.with_i_frames(restored), reports
