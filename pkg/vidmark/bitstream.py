"""
bitstream.py
This file contains the MPEG-1 start-code scanner, the sequence/GOP/picture
header parsers and the I/P/B/D frame indexer.

Indexing is read-only: nothing below the picture header (slice, macroblock,
block) is parsed.
"""
from enum import IntEnum
from typing import Dict, List, NamedTuple, Optional

from pydantic import BaseModel, Field, root_validator

from config.logging_config import get_logger
from vidmark.errors import BadStartCode, InvalidCodingType, InvariantViolation, TruncatedHeader

logger = get_logger(__name__)

START_CODE_PREFIX = b"\x00\x00\x01"
PICTURE_START_CODE = 0x00
SEQUENCE_HEADER_CODE = 0xB3
GROUP_START_CODE = 0xB8

TEMPORAL_REFERENCE_LIMIT = 1 << 10


class StartCodeHit(NamedTuple):
    offset: int
    code: int


class PictureCodingType(IntEnum):
    I = 1  # noqa: E741
    P = 2
    B = 3
    D = 4

    @property
    def kind(self) -> str:
        return self.name

    @classmethod
    def from_bits(cls, value: int) -> "PictureCodingType":
        try:
            return cls(value)
        except ValueError:
            raise InvalidCodingType(
                f"picture coding type {value:03b} is forbidden or reserved"
            )


class PictureRecord(BaseModel):
    offset: int = Field(ge=0)
    temporal_reference: int = Field(ge=0, lt=TEMPORAL_REFERENCE_LIMIT)
    coding_type: PictureCodingType
    gop_index: Optional[int] = None

    class Config:
        allow_mutation = False

    @property
    def kind(self) -> str:
        return self.coding_type.kind


class SequenceHeader(BaseModel):
    offset: int
    horizontal_size: int
    vertical_size: int
    aspect_ratio_code: int
    frame_rate_code: int


class GopHeader(BaseModel):
    offset: int
    drop_frame: bool
    hours: int
    minutes: int
    seconds: int
    pictures: int
    closed_gop: bool
    broken_link: bool


def _empty_counts() -> Dict[str, int]:
    return {kind.name: 0 for kind in PictureCodingType}


class VideoIndex(BaseModel):
    sequence_header_offsets: List[int] = []
    gop_offsets: List[int] = []
    pictures: List[PictureRecord] = []
    counts: Dict[str, int] = Field(default_factory=_empty_counts)
    sequence_headers: List[SequenceHeader] = []
    gop_headers: List[GopHeader] = []
    gops_not_starting_with_i: List[int] = []
    skipped_pictures: int = 0
    diagnostics: List[str] = []

    @root_validator(skip_on_failure=True)
    def counts_cover_pictures(cls, values):
        if sum(values["counts"].values()) != len(values["pictures"]):
            raise ValueError("per-type counts must sum to the number of pictures")
        return values

    @property
    def gop_start_warning(self) -> bool:
        """True when some GOP does not open with an I picture (truncated or odd streams)."""
        return bool(self.gops_not_starting_with_i)

    @property
    def i_frames(self) -> List[PictureRecord]:
        return [p for p in self.pictures if p.coding_type is PictureCodingType.I]


class VideoIndexBuilder:
    """Accumulates structural headers in stream order and checks GOP openings."""

    def __init__(self):
        self.sequence_header_offsets: List[int] = []
        self.sequence_headers: List[SequenceHeader] = []
        self.gop_offsets: List[int] = []
        self.gop_headers: List[GopHeader] = []
        self.pictures: List[PictureRecord] = []
        self.counts = _empty_counts()
        self.gops_not_starting_with_i: List[int] = []
        self.skipped_pictures = 0
        self.diagnostics: List[str] = []
        self._gop_has_picture = False

    @property
    def current_gop(self) -> Optional[int]:
        return len(self.gop_offsets) - 1 if self.gop_offsets else None

    def add_sequence_header(self, offset: int, header: Optional[SequenceHeader] = None):
        self.sequence_header_offsets.append(offset)
        if header is not None:
            self.sequence_headers.append(header)

    def add_gop(self, offset: int, header: Optional[GopHeader] = None):
        self.gop_offsets.append(offset)
        if header is not None:
            self.gop_headers.append(header)
        self._gop_has_picture = False

    def add_picture(self, record: PictureRecord):
        gop_index = self.current_gop
        if gop_index is not None and not self._gop_has_picture:
            self._gop_has_picture = True
            if record.coding_type is not PictureCodingType.I:
                self.gops_not_starting_with_i.append(gop_index)
                self.add_diagnostic(
                    f"GOP {gop_index} starts with a {record.kind} picture at offset {record.offset}"
                )
        self.pictures.append(record.copy(update={"gop_index": gop_index}))
        self.counts[record.kind] += 1

    def skip_picture(self, offset: int, reason: Exception):
        self.skipped_pictures += 1
        self.add_diagnostic(f"picture header at offset {offset} skipped: {reason}")

    def add_diagnostic(self, message: str):
        logger.warning(message)
        self.diagnostics.append(message)

    def build(self) -> VideoIndex:
        return VideoIndex(
            sequence_header_offsets=self.sequence_header_offsets,
            gop_offsets=self.gop_offsets,
            pictures=self.pictures,
            counts=self.counts,
            sequence_headers=self.sequence_headers,
            gop_headers=self.gop_headers,
            gops_not_starting_with_i=self.gops_not_starting_with_i,
            skipped_pictures=self.skipped_pictures,
            diagnostics=self.diagnostics,
        )


def scan_start_codes(stream: bytes) -> List[StartCodeHit]:
    """Return every byte-aligned 00 00 01 xx occurrence in ascending offset order.

    Padding and stuffing are not interpreted; filtering by code is the caller's job.
    """
    data = stream if isinstance(stream, (bytes, bytearray)) else bytes(stream)
    last = len(data) - 4
    hits = []
    pos = data.find(START_CODE_PREFIX)
    while 0 <= pos <= last:
        hits.append(StartCodeHit(pos, data[pos + 3]))
        pos = data.find(START_CODE_PREFIX, pos + 1)
    return hits


def _header_word(stream: bytes, offset: int, code: int, size: int, what: str) -> int:
    if bytes(stream[offset : offset + 4]) != START_CODE_PREFIX + bytes([code]):
        raise BadStartCode(f"no {what} start code at offset {offset}")
    body = stream[offset + 4 : offset + 4 + size]
    if len(body) < size:
        raise TruncatedHeader(
            f"{what} header at offset {offset} needs {size} bytes, {len(body)} available"
        )
    return int.from_bytes(body, "big")


def parse_picture_header(stream: bytes, offset: int) -> PictureRecord:
    """Read temporal_reference (10 bits) and picture_coding_type (3 bits) after 00000100."""
    word = _header_word(stream, offset, PICTURE_START_CODE, 2, "picture")
    coding_type = PictureCodingType.from_bits((word >> 3) & 0x7)
    return PictureRecord(
        offset=offset, temporal_reference=word >> 6, coding_type=coding_type
    )


def pack_picture_header(temporal_reference: int, coding_type: int) -> bytes:
    if not 0 <= temporal_reference < TEMPORAL_REFERENCE_LIMIT:
        raise InvariantViolation(f"temporal_reference {temporal_reference} exceeds 10 bits")
    if not 0 <= coding_type < 8:
        raise InvariantViolation(f"coding_type {coding_type} exceeds 3 bits")
    # vbv_delay is left at 0xFFFF (variable bit rate)
    word = (temporal_reference << 22) | (coding_type << 19) | (0xFFFF << 3)
    return START_CODE_PREFIX + bytes([PICTURE_START_CODE]) + word.to_bytes(4, "big")


def parse_sequence_header(stream: bytes, offset: int) -> SequenceHeader:
    word = _header_word(stream, offset, SEQUENCE_HEADER_CODE, 4, "sequence")
    return SequenceHeader(
        offset=offset,
        horizontal_size=word >> 20,
        vertical_size=(word >> 8) & 0xFFF,
        aspect_ratio_code=(word >> 4) & 0xF,
        frame_rate_code=word & 0xF,
    )


def pack_sequence_header(
    width: int, height: int, aspect_ratio_code: int = 1, frame_rate_code: int = 3
) -> bytes:
    word = (
        ((width & 0xFFF) << 20)
        | ((height & 0xFFF) << 8)
        | ((aspect_ratio_code & 0xF) << 4)
        | (frame_rate_code & 0xF)
    )
    return START_CODE_PREFIX + bytes([SEQUENCE_HEADER_CODE]) + word.to_bytes(4, "big")


def parse_gop_header(stream: bytes, offset: int) -> GopHeader:
    word = _header_word(stream, offset, GROUP_START_CODE, 4, "GOP")
    return GopHeader(
        offset=offset,
        drop_frame=bool(word >> 31),
        hours=(word >> 26) & 0x1F,
        minutes=(word >> 20) & 0x3F,
        seconds=(word >> 13) & 0x3F,
        pictures=(word >> 7) & 0x3F,
        closed_gop=bool((word >> 6) & 1),
        broken_link=bool((word >> 5) & 1),
    )


def pack_gop_header(
    hours: int = 0,
    minutes: int = 0,
    seconds: int = 0,
    pictures: int = 0,
    closed_gop: bool = True,
    broken_link: bool = False,
) -> bytes:
    word = (
        ((hours & 0x1F) << 26)
        | ((minutes & 0x3F) << 20)
        | (1 << 19)  # marker bit
        | ((seconds & 0x3F) << 13)
        | ((pictures & 0x3F) << 7)
        | (int(closed_gop) << 6)
        | (int(broken_link) << 5)
    )
    return START_CODE_PREFIX + bytes([GROUP_START_CODE]) + word.to_bytes(4, "big")


def index_mpeg1(stream: bytes) -> VideoIndex:
    """Build the per-GOP frame index of a raw MPEG-1 video stream.

    Header parse failures never raise: they land in VideoIndex.diagnostics.
    """
    builder = VideoIndexBuilder()
    for hit in scan_start_codes(stream):
        if hit.code == SEQUENCE_HEADER_CODE:
            try:
                builder.add_sequence_header(hit.offset, parse_sequence_header(stream, hit.offset))
            except TruncatedHeader as e:
                builder.add_sequence_header(hit.offset)
                builder.add_diagnostic(f"sequence header at offset {hit.offset}: {e}")
        elif hit.code == GROUP_START_CODE:
            try:
                builder.add_gop(hit.offset, parse_gop_header(stream, hit.offset))
            except TruncatedHeader as e:
                builder.add_gop(hit.offset)
                builder.add_diagnostic(f"GOP header at offset {hit.offset}: {e}")
        elif hit.code == PICTURE_START_CODE:
            try:
                record = parse_picture_header(stream, hit.offset)
            except (TruncatedHeader, InvalidCodingType) as e:
                builder.skip_picture(hit.offset, e)
                continue
            builder.add_picture(record)

    index = builder.build()
    logger.debug(
        f"Indexed {len(index.pictures)} pictures in {len(index.gop_offsets)} GOPs: {index.counts}"
    )
    return index
