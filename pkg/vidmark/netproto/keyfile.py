"""
path: vidmark/netproto/keyfile.py
Key file codec (all integers big-endian):
    "WMK1" | u32 text_len | Base64 text | u32 frame_count
    | frame_count x (u32 backup_len | backup) | u32 crc32
"""
import struct

from vidmark.errors import BadKeyMagic, CrcFieldMismatch, InvalidBase64, Truncated
from vidmark.netproto.constants import KEYFILE_MAGIC
from vidmark.watermark import WatermarkKey, crc32

U32 = struct.Struct(">I")


def write_keyfile(key: WatermarkKey) -> bytes:
    text = key.base64_text.encode("ascii")
    parts = [KEYFILE_MAGIC, U32.pack(len(text)), text, U32.pack(len(key.header_backups))]
    for backup in key.header_backups:
        parts += [U32.pack(len(backup)), backup]
    parts.append(U32.pack(key.crc32))
    return b"".join(parts)


class _KeyReader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, size: int, what: str) -> bytes:
        chunk = self.data[self.pos : self.pos + size]
        if len(chunk) < size:
            raise Truncated(f"key file ends inside {what} at offset {self.pos}")
        self.pos += size
        return chunk

    def u32(self, what: str) -> int:
        return U32.unpack(self.take(U32.size, what))[0]


def read_keyfile(data: bytes) -> WatermarkKey:
    data = bytes(data)
    reader = _KeyReader(data)
    magic = data[: len(KEYFILE_MAGIC)]
    if len(magic) == len(KEYFILE_MAGIC) and magic != KEYFILE_MAGIC:
        raise BadKeyMagic(f"key file magic {magic!r} is not {KEYFILE_MAGIC!r}")
    reader.take(len(KEYFILE_MAGIC), "magic")

    text = reader.take(reader.u32("text length"), "Base64 text")
    frame_count = reader.u32("frame count")
    backups = [reader.take(reader.u32("backup length"), f"header backup {i}") for i in range(frame_count)]
    stored_crc = reader.u32("crc32")
    if reader.pos != len(data):
        raise Truncated(f"{len(data) - reader.pos} unexpected bytes after the key file crc32")

    try:
        base64_text = text.decode("ascii")
    except UnicodeDecodeError:
        raise InvalidBase64("key text is not ASCII")

    # InvalidBase64 / InvalidKey surface from the model validators
    key = WatermarkKey(base64_text=base64_text, header_backups=backups, crc32=stored_crc)
    computed = crc32(key.watermark)
    if computed != stored_crc:
        raise CrcFieldMismatch(
            f"key file crc32 {stored_crc:08x} does not match the text's crc32 {computed:08x}"
        )
    return key
