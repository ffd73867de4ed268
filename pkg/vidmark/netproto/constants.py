"""
path: vidmark/netproto/constants.py
Wire constants for the watermark distribution protocol.
"""
import struct
from enum import IntEnum

from config.config import vidmark_config


class MessageType(IntEnum):
    REQUEST = 0x01
    VIDEO = 0x02
    KEY = 0x03
    ERROR = 0x04
    VERIFY_REPORT = 0x05


# type byte + u32 big-endian payload length
FRAME_HEADER = struct.Struct(">BI")

MAX_PAYLOAD = int(vidmark_config.get("network.max_payload_bytes", 256 * 1024 * 1024))

KEYFILE_MAGIC = b"WMK1"

DEFAULT_HOST = vidmark_config.get("network.host", "127.0.0.1")
DEFAULT_PORT = vidmark_config.get("network.port", 9471)
REPORT_TIMEOUT = vidmark_config.get("network.report_timeout", 5)
CONNECT_TIMEOUT = vidmark_config.get("network.connect_timeout", 10)
REPORT_HISTORY = vidmark_config.get("network.report_history", 1000)

UNKNOWN_VIDEO_ID = "unknown video id"
