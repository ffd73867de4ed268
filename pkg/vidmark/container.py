"""
container.py
This file contains the MV1 mock container: a sequence -> GOP -> picture
hierarchy mirroring MPEG-1 start codes, with raw RGB24 I-frame payloads.

MV1 layout (all integers big-endian):
    "MV1\\0"
    00 00 01 B3  width:u16 height:u16 fps:u8
    per GOP:     00 00 01 B8  gop_number:u32
    per picture: 00 00 01 00  temporal_reference:u16 coding_type:u8 payload_len:u32 payload

Parsing is length-driven, so start-code look-alikes inside payloads are harmless.
"""
import struct
from typing import Iterator, List, NamedTuple, Optional, Tuple, Union

import numpy as np

from config.logging_config import get_logger
from vidmark.bitstream import (
    GROUP_START_CODE,
    PICTURE_START_CODE,
    SEQUENCE_HEADER_CODE,
    START_CODE_PREFIX,
    TEMPORAL_REFERENCE_LIMIT,
    PictureCodingType,
    PictureRecord,
    VideoIndex,
    VideoIndexBuilder,
)
from vidmark.errors import (
    BadMagic,
    BadStartCode,
    GopMustStartWithI,
    InvalidCodingType,
    InvariantViolation,
    SizeMismatch,
    TruncatedFile,
)

logger = get_logger(__name__)

MV1_MAGIC = b"MV1\x00"
SEQUENCE_FIELDS = struct.Struct(">HHB")
GOP_FIELDS = struct.Struct(">I")
PICTURE_FIELDS = struct.Struct(">HBI")
OPAQUE_PAYLOAD_SIZE = 16


class RgbPixel(NamedTuple):
    r: int
    g: int
    b: int


class RgbFrame:
    """A height x width matrix of 8-bit RGB pixels, stored as a (height, width, 3) uint8 array."""

    def __init__(self, pixels: np.ndarray):
        pixels = np.asarray(pixels)
        if pixels.ndim != 3 or pixels.shape[2] != 3:
            raise InvariantViolation(f"pixel matrix must be (height, width, 3), got {pixels.shape}")
        if pixels.dtype != np.uint8:
            raise InvariantViolation(f"pixel channels must be uint8, got {pixels.dtype}")
        if pixels.shape[0] < 1 or pixels.shape[1] < 1:
            raise InvariantViolation("frame needs at least one pixel")
        # `flat` must be a view, not a copy
        self.pixels = np.ascontiguousarray(pixels)

    def __repr__(self) -> str:
        return f"RgbFrame(width={self.width}, height={self.height})"

    def __eq__(self, other):
        if isinstance(other, RgbFrame):
            return np.array_equal(self.pixels, other.pixels)
        return False

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def pixel_count(self) -> int:
        return self.width * self.height

    @property
    def flat(self) -> np.ndarray:
        """Row-major (pixel_count, 3) view."""
        return self.pixels.reshape(-1, 3)

    def pixel(self, index: int) -> RgbPixel:
        r, g, b = (int(c) for c in self.flat[index])
        return RgbPixel(r, g, b)

    def copy(self) -> "RgbFrame":
        return RgbFrame(self.pixels.copy())

    def to_rgb24(self) -> bytes:
        return self.pixels.tobytes()

    @classmethod
    def from_rgb24(cls, data: bytes, width: int, height: int) -> "RgbFrame":
        expected = 3 * width * height
        if len(data) != expected:
            raise SizeMismatch(
                f"RGB24 payload of {len(data)} bytes does not match {width}x{height} ({expected} bytes)"
            )
        pixels = np.frombuffer(bytes(data), dtype=np.uint8).reshape(height, width, 3)
        return cls(pixels.copy())

    @classmethod
    def from_pixels(cls, width: int, height: int, pixels: List[RgbPixel]) -> "RgbFrame":
        return cls(np.array(pixels, dtype=np.uint8).reshape(height, width, 3))


Payload = Union[RgbFrame, bytes]


class Picture:
    def __init__(self, temporal_reference: int, coding_type: PictureCodingType, payload: Payload):
        self.temporal_reference = temporal_reference
        self.coding_type = PictureCodingType(coding_type)
        self.payload = payload

    def __repr__(self) -> str:
        size = len(self.payload) if isinstance(self.payload, bytes) else repr(self.payload)
        return f"Picture(temporal_reference={self.temporal_reference}, coding_type={self.coding_type.kind}, payload={size})"

    def __eq__(self, other):
        if isinstance(other, Picture):
            return (
                self.temporal_reference == other.temporal_reference
                and self.coding_type == other.coding_type
                and self.payload == other.payload
            )
        return False

    @property
    def is_i_frame(self) -> bool:
        return self.coding_type is PictureCodingType.I


class Gop:
    def __init__(self, gop_number: int, pictures: Optional[List[Picture]] = None):
        self.gop_number = gop_number
        self.pictures = pictures if pictures is not None else []

    def __repr__(self) -> str:
        return f"Gop(gop_number={self.gop_number}, pictures={self.pictures})"

    def __eq__(self, other):
        if isinstance(other, Gop):
            return self.gop_number == other.gop_number and self.pictures == other.pictures
        return False


class Mv1Video:
    def __init__(self, width: int, height: int, fps: int, gops: Optional[List[Gop]] = None):
        self.width = width
        self.height = height
        self.fps = fps
        self.gops = gops if gops is not None else []

    def __repr__(self) -> str:
        return f"Mv1Video(width={self.width}, height={self.height}, fps={self.fps}, gops={self.gops})"

    def __eq__(self, other):
        if isinstance(other, Mv1Video):
            return (
                self.width == other.width
                and self.height == other.height
                and self.fps == other.fps
                and self.gops == other.gops
            )
        return False

    def iter_i_frames(self) -> Iterator[Tuple[int, Picture]]:
        """Yield (gop ordinal, picture) for every I picture in stream order."""
        for gop_ordinal, gop in enumerate(self.gops):
            for picture in gop.pictures:
                if picture.is_i_frame:
                    yield gop_ordinal, picture

    def i_frames(self) -> List[RgbFrame]:
        return [picture.payload for _, picture in self.iter_i_frames()]  # type: ignore[misc]

    def with_i_frames(self, frames: List[RgbFrame]) -> "Mv1Video":
        """Return a copy whose I payloads are replaced in order; other payloads are shared untouched."""
        replacements = iter(frames)
        gops = [
            Gop(
                gop.gop_number,
                [
                    Picture(p.temporal_reference, p.coding_type, next(replacements))
                    if p.is_i_frame
                    else p
                    for p in gop.pictures
                ],
            )
            for gop in self.gops
        ]
        return Mv1Video(self.width, self.height, self.fps, gops)

    def validate(self):
        if not (1 <= self.width <= 0xFFFF and 1 <= self.height <= 0xFFFF):
            raise InvariantViolation(f"frame size {self.width}x{self.height} outside u16 range")
        if not 0 <= self.fps <= 0xFF:
            raise InvariantViolation(f"fps code {self.fps} outside u8 range")
        for gop in self.gops:
            if not gop.pictures or not gop.pictures[0].is_i_frame:
                raise InvariantViolation(f"GOP {gop.gop_number} does not start with an I picture")
            for picture in gop.pictures:
                if not 0 <= picture.temporal_reference < TEMPORAL_REFERENCE_LIMIT:
                    raise InvariantViolation(
                        f"temporal reference {picture.temporal_reference} of GOP {gop.gop_number} "
                        f"does not fit in 10 bits"
                    )
                if picture.is_i_frame:
                    frame = picture.payload
                    if not isinstance(frame, RgbFrame) or (frame.width, frame.height) != (
                        self.width,
                        self.height,
                    ):
                        raise InvariantViolation(
                            f"I picture {picture.temporal_reference} of GOP {gop.gop_number} "
                            f"is not a {self.width}x{self.height} RgbFrame"
                        )
                elif not isinstance(picture.payload, (bytes, bytearray)):
                    raise InvariantViolation("P/B/D payloads must be opaque bytes")


def is_mv1(data: bytes) -> bool:
    return bytes(data[:4]) == MV1_MAGIC


def write_mv1(video: Mv1Video) -> bytes:
    video.validate()
    out = bytearray(MV1_MAGIC)
    out += START_CODE_PREFIX + bytes([SEQUENCE_HEADER_CODE])
    out += SEQUENCE_FIELDS.pack(video.width, video.height, video.fps)
    for gop in video.gops:
        out += START_CODE_PREFIX + bytes([GROUP_START_CODE])
        out += GOP_FIELDS.pack(gop.gop_number)
        for picture in gop.pictures:
            payload = (
                picture.payload.to_rgb24()
                if isinstance(picture.payload, RgbFrame)
                else bytes(picture.payload)
            )
            out += START_CODE_PREFIX + bytes([PICTURE_START_CODE])
            out += PICTURE_FIELDS.pack(
                picture.temporal_reference, int(picture.coding_type), len(payload)
            )
            out += payload
    return bytes(out)


class _Mv1Cursor:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    @property
    def exhausted(self) -> bool:
        return self.pos >= len(self.data)

    def take(self, size: int, what: str) -> bytes:
        if self.pos + size > len(self.data):
            raise TruncatedFile(
                f"{what} at offset {self.pos} needs {size} bytes, {len(self.data) - self.pos} left"
            )
        chunk = self.data[self.pos : self.pos + size]
        self.pos += size
        return chunk

    def start_code(self, allowed: Tuple[int, ...]) -> Tuple[int, int]:
        offset = self.pos
        code = self.take(4, "start code")
        if code[:3] != START_CODE_PREFIX or code[3] not in allowed:
            expected = "|".join(f"{c:02X}" for c in allowed)
            raise BadStartCode(f"expected 00 00 01 {{{expected}}} at offset {offset}, found {code.hex()}")
        return offset, code[3]


def _parse_mv1(data: bytes, builder: Optional[VideoIndexBuilder] = None) -> Mv1Video:
    strict = builder is None
    cursor = _Mv1Cursor(bytes(data))
    if cursor.take(4, "magic") != MV1_MAGIC:
        raise BadMagic("not an MV1 file (missing 'MV1\\0' magic)")

    offset, _ = cursor.start_code((SEQUENCE_HEADER_CODE,))
    width, height, fps = SEQUENCE_FIELDS.unpack(cursor.take(SEQUENCE_FIELDS.size, "sequence header"))
    if builder is not None:
        builder.add_sequence_header(offset)
    video = Mv1Video(width, height, fps)

    while not cursor.exhausted:
        offset, code = cursor.start_code(
            (GROUP_START_CODE, PICTURE_START_CODE) if video.gops else (GROUP_START_CODE,)
        )
        if code == GROUP_START_CODE:
            (gop_number,) = GOP_FIELDS.unpack(cursor.take(GOP_FIELDS.size, "GOP header"))
            if strict and video.gops and not video.gops[-1].pictures:
                raise GopMustStartWithI(f"GOP {video.gops[-1].gop_number} has no pictures")
            video.gops.append(Gop(gop_number))
            if builder is not None:
                builder.add_gop(offset)
            continue

        gop = video.gops[-1]
        temporal_reference, coding_bits, payload_len = PICTURE_FIELDS.unpack(
            cursor.take(PICTURE_FIELDS.size, "picture header")
        )
        if coding_bits > 0x7:
            raise InvalidCodingType(f"coding type byte {coding_bits:#04x} at offset {offset} exceeds 3 bits")
        if temporal_reference >= TEMPORAL_REFERENCE_LIMIT:
            raise InvariantViolation(
                f"temporal reference {temporal_reference} at offset {offset} does not fit in 10 bits"
            )
        coding_type = PictureCodingType.from_bits(coding_bits)
        if strict and not gop.pictures and coding_type is not PictureCodingType.I:
            raise GopMustStartWithI(
                f"GOP {gop.gop_number} starts with a {coding_type.kind} picture at offset {offset}"
            )
        raw = cursor.take(payload_len, "picture payload")
        if coding_type is PictureCodingType.I:
            payload: Payload = RgbFrame.from_rgb24(raw, width, height)
        else:
            payload = raw
        gop.pictures.append(Picture(temporal_reference, coding_type, payload))
        if builder is not None:
            builder.add_picture(
                PictureRecord(
                    offset=offset,
                    temporal_reference=temporal_reference,
                    coding_type=coding_type,
                )
            )

    if strict and video.gops and not video.gops[-1].pictures:
        raise GopMustStartWithI(f"GOP {video.gops[-1].gop_number} has no pictures")
    return video


def read_mv1(data: bytes) -> Mv1Video:
    video = _parse_mv1(data)
    logger.debug(f"Read MV1 {video.width}x{video.height} with {len(video.gops)} GOPs")
    return video


def index_mv1(data: bytes) -> VideoIndex:
    """Index the structural headers of an MV1 file; payload bytes are skipped, not scanned."""
    builder = VideoIndexBuilder()
    _parse_mv1(data, builder=builder)
    return builder.build()


def read_dimensions(data: bytes) -> Tuple[int, int]:
    """Frame size of an MV1 file, read from the sequence header only."""
    cursor = _Mv1Cursor(bytes(data))
    if cursor.take(4, "magic") != MV1_MAGIC:
        raise BadMagic("not an MV1 file (missing 'MV1\\0' magic)")
    cursor.start_code((SEQUENCE_HEADER_CODE,))
    width, height, _ = SEQUENCE_FIELDS.unpack(cursor.take(SEQUENCE_FIELDS.size, "sequence header"))
    return width, height


def synth_sample(
    width: int,
    height: int,
    gop_count: int,
    pictures_per_gop: int,
    pattern_seed: int,
    fps: int = 25,
) -> Mv1Video:
    """Deterministic test video: each GOP is one seeded-noise I picture followed by P pictures."""
    if width < 1 or height < 1 or gop_count < 1 or pictures_per_gop < 1:
        raise InvariantViolation(
            f"synth_sample needs positive sizes, got {width}x{height}, {gop_count} GOPs, "
            f"{pictures_per_gop} pictures per GOP"
        )
    rng = np.random.default_rng(pattern_seed)
    gops = []
    for gop_number in range(gop_count):
        pictures = [
            Picture(
                0,
                PictureCodingType.I,
                RgbFrame(rng.integers(0, 256, size=(height, width, 3), dtype=np.uint8)),
            )
        ]
        for temporal_reference in range(1, pictures_per_gop):
            pictures.append(
                Picture(temporal_reference, PictureCodingType.P, rng.bytes(OPAQUE_PAYLOAD_SIZE))
            )
        gops.append(Gop(gop_number, pictures))
    return Mv1Video(width, height, fps, gops)
