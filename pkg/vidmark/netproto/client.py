"""
path: vidmark/netproto/client.py
This file contains the fetching client: request a video, store the marked
video and key, restore and verify, then report back to the server.
"""
import asyncio
import functools
from pathlib import Path
from typing import List, Optional

from pydantic import BaseModel

from config.logging_config import get_logger
from vidmark.container import read_mv1, write_mv1
from vidmark.errors import ConnectionFailed, ProtocolViolation, RemoteError, VidmarkError
from vidmark.netproto.constants import CONNECT_TIMEOUT, MessageType
from vidmark.netproto.framing import (
    STATUS_FORMAT_ERROR,
    STATUS_MISMATCH,
    STATUS_OK,
    ProtocolMessage,
    VerifyReportWire,
    encode_verify_report,
    read_message,
    write_message,
)
from vidmark.netproto.keyfile import read_keyfile
from vidmark.parallel import DEFAULT_WORKERS
from vidmark.watermark import VerificationReport, restore_and_verify_video

logger = get_logger(__name__)


class FetchSummary(BaseModel):
    video_id: str
    status: int
    frame_count: int = 0
    mismatch_count: int = 0
    embedded_crc: Optional[int] = None
    computed_crc: Optional[int] = None
    marked_path: Path
    key_path: Path
    restored_path: Optional[Path] = None
    reports: List[VerificationReport] = []
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.status == STATUS_OK

    def to_wire(self) -> VerifyReportWire:
        return VerifyReportWire(
            status=self.status,
            frame_count=self.frame_count,
            mismatch_count=self.mismatch_count,
            embedded_crc=self.embedded_crc or 0,
            computed_crc=self.computed_crc or 0,
        )

    def line(self) -> str:
        return f"fetch,{self.status},{self.frame_count},{self.mismatch_count}"


def output_paths(output_dir: Path, video_id: str):
    output_dir = Path(output_dir)
    return (
        output_dir / f"{video_id}.marked.mv1",
        output_dir / f"{video_id}.key.wmk",
        output_dir / f"{video_id}.restored.mv1",
    )


def restore_downloaded(
    video_id: str, video_bytes: bytes, key_bytes: bytes, output_dir: Path, workers: int = DEFAULT_WORKERS
) -> FetchSummary:
    """Write the downloaded files, then restore and verify them; format errors become status 2."""
    marked_path, key_path, restored_path = output_paths(output_dir, video_id)
    marked_path.parent.mkdir(parents=True, exist_ok=True)
    marked_path.write_bytes(video_bytes)
    key_path.write_bytes(key_bytes)

    try:
        key = read_keyfile(key_bytes)
        marked = read_mv1(video_bytes)
        restored, reports = restore_and_verify_video(marked, key, workers=workers)
    except VidmarkError as e:
        logger.warning(f"Downloaded {video_id!r} could not be restored: {e.name}: {e.message}")
        return FetchSummary(
            video_id=video_id,
            status=STATUS_FORMAT_ERROR,
            marked_path=marked_path,
            key_path=key_path,
            error=f"{e.name}: {e.message}",
        )

    restored_path.write_bytes(write_mv1(restored))
    failed = [r for r in reports if not r.match]
    if any(r.error is not None for r in reports):
        status = STATUS_FORMAT_ERROR
    elif failed:
        status = STATUS_MISMATCH
    else:
        status = STATUS_OK
    # the first failing frame is the interesting one; otherwise any frame is representative
    shown = failed[0] if failed else (reports[0] if reports else None)
    return FetchSummary(
        video_id=video_id,
        status=status,
        frame_count=len(reports),
        mismatch_count=len(failed),
        embedded_crc=shown.embedded_crc if shown else None,
        computed_crc=shown.computed_crc if shown else key.crc32,
        marked_path=marked_path,
        key_path=key_path,
        restored_path=restored_path,
        reports=reports,
        error=shown.error if shown else None,
    )


def _expect(message: ProtocolMessage, expected: MessageType) -> ProtocolMessage:
    if message.msg_type is MessageType.ERROR:
        raise RemoteError(message.text)
    if message.msg_type is not expected:
        raise ProtocolViolation(f"expected {expected.name}, got {message.msg_type.name}")
    return message


async def fetch(
    host: str,
    port: int,
    video_id: str,
    output_dir: Path,
    workers: int = DEFAULT_WORKERS,
    connect_timeout: float = CONNECT_TIMEOUT,
) -> FetchSummary:
    try:
        reader, writer = await asyncio.wait_for(
            asyncio.open_connection(host, port), timeout=connect_timeout
        )
    except (OSError, asyncio.TimeoutError) as e:
        raise ConnectionFailed(f"cannot connect to {host}:{port}: {e}")

    try:
        await write_message(
            writer, ProtocolMessage(msg_type=MessageType.REQUEST, payload=video_id.encode("utf-8"))
        )
        video = _expect(await read_message(reader), MessageType.VIDEO)
        key = _expect(await read_message(reader), MessageType.KEY)
        logger.info(
            f"Received {video_id!r}: {video.payload_len} video bytes, {key.payload_len} key bytes"
        )

        loop = asyncio.get_running_loop()
        summary = await loop.run_in_executor(
            None,
            functools.partial(
                restore_downloaded, video_id, video.payload, key.payload, output_dir, workers=workers
            ),
        )
        try:
            await write_message(
                writer,
                ProtocolMessage(
                    msg_type=MessageType.VERIFY_REPORT, payload=encode_verify_report(summary.to_wire())
                ),
            )
        except ConnectionError as e:
            logger.warning(f"Could not deliver the verification report: {e}")
        return summary
    except ConnectionError as e:
        raise ConnectionFailed(f"connection to {host}:{port} lost: {e}")
    finally:
        writer.close()
        try:
            await writer.wait_closed()
        except ConnectionError:
            pass
