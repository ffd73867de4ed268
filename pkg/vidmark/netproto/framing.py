"""
path: vidmark/netproto/framing.py
This file contains the length-prefixed message codec, its asyncio stream
helpers and the VERIFY_REPORT payload codec.

Frame layout: msg_type (1 byte) | payload_len (u32 BE) | payload.
"""
import asyncio
import struct
from typing import Tuple

from pydantic import BaseModel, Field, root_validator, validator

from vidmark.errors import OversizedPayload, Truncated, UnknownType
from vidmark.netproto.constants import FRAME_HEADER, MAX_PAYLOAD, MessageType

VERIFY_REPORT_FIELDS = struct.Struct(">BIIII")

STATUS_OK = 0
STATUS_MISMATCH = 1
STATUS_FORMAT_ERROR = 2


class ProtocolMessage(BaseModel):
    msg_type: MessageType
    payload: bytes = b""

    class Config:
        allow_mutation = False

    @validator("payload")
    def payload_under_cap(cls, value):
        if len(value) > MAX_PAYLOAD:
            raise OversizedPayload(f"payload of {len(value)} bytes exceeds the {MAX_PAYLOAD}-byte cap")
        return value

    @property
    def payload_len(self) -> int:
        return len(self.payload)

    @property
    def text(self) -> str:
        return self.payload.decode("utf-8", errors="replace")


class VerifyReportWire(BaseModel):
    status: int = Field(ge=0, le=2)
    frame_count: int = Field(ge=0, le=0xFFFFFFFF)
    mismatch_count: int = Field(ge=0, le=0xFFFFFFFF)
    embedded_crc: int = Field(0, ge=0, le=0xFFFFFFFF)
    computed_crc: int = Field(0, ge=0, le=0xFFFFFFFF)

    @root_validator(skip_on_failure=True)
    def status_follows_mismatches(cls, values):
        status, mismatches = values["status"], values["mismatch_count"]
        if status == STATUS_OK and mismatches:
            raise ValueError("status ok requires zero mismatches")
        if status == STATUS_MISMATCH and not mismatches:
            raise ValueError("status mismatch requires at least one mismatching frame")
        return values


def _check_frame_header(raw: bytes) -> Tuple[MessageType, int]:
    type_byte, payload_len = FRAME_HEADER.unpack(raw)
    try:
        msg_type = MessageType(type_byte)
    except ValueError:
        raise UnknownType(f"unknown message type 0x{type_byte:02x}")
    if payload_len > MAX_PAYLOAD:
        raise OversizedPayload(
            f"declared payload of {payload_len} bytes exceeds the {MAX_PAYLOAD}-byte cap"
        )
    return msg_type, payload_len


def encode_message(message: ProtocolMessage) -> bytes:
    return FRAME_HEADER.pack(int(message.msg_type), message.payload_len) + message.payload


def decode_message(data: bytes) -> ProtocolMessage:
    """Decode the frame at the start of `data`; bytes past 5 + payload_len are not read."""
    if len(data) < FRAME_HEADER.size:
        raise Truncated(f"frame header needs {FRAME_HEADER.size} bytes, {len(data)} available")
    msg_type, payload_len = _check_frame_header(bytes(data[: FRAME_HEADER.size]))
    end = FRAME_HEADER.size + payload_len
    if len(data) < end:
        raise Truncated(f"frame declares {payload_len} payload bytes, {len(data) - FRAME_HEADER.size} available")
    return ProtocolMessage(msg_type=msg_type, payload=bytes(data[FRAME_HEADER.size : end]))


async def read_message(reader: asyncio.StreamReader) -> ProtocolMessage:
    try:
        header = await reader.readexactly(FRAME_HEADER.size)
    except asyncio.IncompleteReadError as e:
        raise Truncated(f"stream ended after {len(e.partial)} of {FRAME_HEADER.size} frame header bytes")
    msg_type, payload_len = _check_frame_header(header)
    try:
        payload = await reader.readexactly(payload_len)
    except asyncio.IncompleteReadError as e:
        raise Truncated(
            f"stream ended after {len(e.partial)} of {payload_len} {msg_type.name} payload bytes"
        )
    return ProtocolMessage(msg_type=msg_type, payload=payload)


async def write_message(writer: asyncio.StreamWriter, message: ProtocolMessage) -> None:
    writer.write(encode_message(message))
    await writer.drain()


def encode_verify_report(report: VerifyReportWire) -> bytes:
    return VERIFY_REPORT_FIELDS.pack(
        report.status,
        report.frame_count,
        report.mismatch_count,
        report.embedded_crc,
        report.computed_crc,
    )


def decode_verify_report(payload: bytes) -> VerifyReportWire:
    if len(payload) != VERIFY_REPORT_FIELDS.size:
        raise Truncated(
            f"VERIFY_REPORT payload must be {VERIFY_REPORT_FIELDS.size} bytes, got {len(payload)}"
        )
    status, frames, mismatches, embedded, computed = VERIFY_REPORT_FIELDS.unpack(payload)
    return VerifyReportWire(
        status=status,
        frame_count=frames,
        mismatch_count=mismatches,
        embedded_crc=embedded,
        computed_crc=computed,
    )
