from vidmark.netproto.client import FetchSummary, fetch, restore_downloaded
from vidmark.netproto.constants import MAX_PAYLOAD, MessageType
from vidmark.netproto.framing import (
    ProtocolMessage,
    VerifyReportWire,
    decode_message,
    decode_verify_report,
    encode_message,
    encode_verify_report,
    read_message,
    write_message,
)
from vidmark.netproto.keyfile import read_keyfile, write_keyfile
from vidmark.netproto.server import WatermarkServer, serve

__all__ = [
    "FetchSummary",
    "MAX_PAYLOAD",
    "MessageType",
    "ProtocolMessage",
    "VerifyReportWire",
    "WatermarkServer",
    "decode_message",
    "decode_verify_report",
    "encode_message",
    "encode_verify_report",
    "fetch",
    "read_keyfile",
    "read_message",
    "restore_downloaded",
    "serve",
    "write_keyfile",
    "write_message",
]
