"""
path: vidmark/netproto/server.py
This file contains the asyncio watermark server.

Per connection: REQUEST(video id) -> VIDEO(marked MV1) -> KEY(key file),
then an optional VERIFY_REPORT from the client. An unknown id is answered
with ERROR("unknown video id"). A failing connection is closed on its own;
the server keeps serving the others.
"""
import asyncio
import functools
from collections import deque
from typing import Deque, Dict, Optional, Tuple

from config.logging_config import get_logger
from vidmark.container import Mv1Video, write_mv1
from vidmark.errors import CapacityError, VidmarkError
from vidmark.netproto.constants import (
    DEFAULT_HOST,
    DEFAULT_PORT,
    REPORT_HISTORY,
    REPORT_TIMEOUT,
    UNKNOWN_VIDEO_ID,
    MessageType,
)
from vidmark.netproto.framing import (
    STATUS_OK,
    ProtocolMessage,
    VerifyReportWire,
    decode_verify_report,
    read_message,
    write_message,
)
from vidmark.netproto.keyfile import write_keyfile
from vidmark.parallel import DEFAULT_WORKERS
from vidmark.watermark import embed_video, frame_capacity

logger = get_logger(__name__)


class WatermarkServer:
    def __init__(
        self,
        video_store: Dict[str, Mv1Video],
        watermark: bytes,
        host: str = DEFAULT_HOST,
        port: int = DEFAULT_PORT,
        workers: int = DEFAULT_WORKERS,
        report_timeout: float = REPORT_TIMEOUT,
        report_history: int = REPORT_HISTORY,
    ):
        if not video_store:
            raise VidmarkError("video store is empty", name="EmptyStore")
        self.video_store = dict(video_store)
        self.watermark = bytes(watermark)
        self.host = host
        self.port = port
        self.workers = workers
        self.report_timeout = report_timeout
        self.reports: Deque[Tuple[str, VerifyReportWire]] = deque(maxlen=report_history)
        self._server: Optional[asyncio.AbstractServer] = None
        self._check_capacity()

    def _check_capacity(self):
        for video_id, video in self.video_store.items():
            for ordinal, frame in enumerate(video.i_frames()):
                if len(self.watermark) > frame_capacity(frame):
                    raise CapacityError(
                        f"video {video_id!r} I-frame {ordinal} holds {frame_capacity(frame)} bytes, "
                        f"watermark has {len(self.watermark)}"
                    )

    @property
    def bound_port(self) -> int:
        """Actual listening port (useful when constructed with port=0)."""
        if self._server is None or not self._server.sockets:
            return self.port
        return self._server.sockets[0].getsockname()[1]

    async def start(self) -> "WatermarkServer":
        self._server = await asyncio.start_server(self._handle_connection, self.host, self.port)
        logger.info(
            f"Serving {len(self.video_store)} video(s) on {self.host}:{self.bound_port}"
        )
        return self

    async def serve_forever(self):
        if self._server is None:
            await self.start()
        async with self._server:
            await self._server.serve_forever()

    async def close(self):
        if self._server is not None:
            self._server.close()
            await self._server.wait_closed()
            logger.info("Server closed")

    async def __aenter__(self) -> "WatermarkServer":
        return await self.start()

    async def __aexit__(self, exc_type, exc, tb):
        await self.close()

    async def _handle_connection(self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter):
        peer = writer.get_extra_info("peername")
        try:
            await self._session(reader, writer, peer)
        except VidmarkError as e:
            logger.error(f"Dropping connection from {peer}: {e.name}: {e.message}")
        except (ConnectionError, asyncio.IncompleteReadError) as e:
            logger.error(f"Connection from {peer} lost: {e}")
        except Exception as e:
            logger.error(f"Unexpected failure serving {peer}: {e}")
        finally:
            writer.close()
            try:
                await writer.wait_closed()
            except ConnectionError:
                pass

    async def _session(self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter, peer):
        request = await read_message(reader)
        if request.msg_type is not MessageType.REQUEST:
            await self._send_error(writer, f"expected REQUEST, got {request.msg_type.name}")
            return

        video_id = request.text
        video = self.video_store.get(video_id)
        if video is None:
            logger.info(f"{peer} requested unknown video {video_id!r}")
            await self._send_error(writer, UNKNOWN_VIDEO_ID)
            return

        loop = asyncio.get_running_loop()
        marked, key = await loop.run_in_executor(
            None, functools.partial(embed_video, video, self.watermark, workers=self.workers)
        )
        await write_message(writer, ProtocolMessage(msg_type=MessageType.VIDEO, payload=write_mv1(marked)))
        await write_message(writer, ProtocolMessage(msg_type=MessageType.KEY, payload=write_keyfile(key)))
        logger.info(f"Sent marked video {video_id!r} and key to {peer}")

        await self._receive_report(reader, video_id, peer)

    async def _receive_report(self, reader: asyncio.StreamReader, video_id: str, peer):
        try:
            message = await asyncio.wait_for(read_message(reader), timeout=self.report_timeout)
        except asyncio.TimeoutError:
            logger.debug(f"No verification report from {peer} within {self.report_timeout}s")
            return
        except VidmarkError as e:
            # clients may close without reporting
            logger.debug(f"No verification report from {peer}: {e.message}")
            return

        if message.msg_type is not MessageType.VERIFY_REPORT:
            logger.warning(f"{peer} sent {message.msg_type.name} where a VERIFY_REPORT was expected")
            return
        report = decode_verify_report(message.payload)
        self.reports.append((video_id, report))
        summary = (
            f"{peer} verified {video_id!r}: status={report.status} frames={report.frame_count} "
            f"mismatches={report.mismatch_count}"
        )
        if report.status == STATUS_OK:
            logger.info(summary)
        else:
            logger.warning(summary)

    async def _send_error(self, writer: asyncio.StreamWriter, text: str):
        await write_message(writer, ProtocolMessage(msg_type=MessageType.ERROR, payload=text.encode("utf-8")))


async def serve(
    video_store: Dict[str, Mv1Video],
    watermark: bytes,
    host: str = DEFAULT_HOST,
    port: int = DEFAULT_PORT,
    workers: int = DEFAULT_WORKERS,
    report_timeout: float = REPORT_TIMEOUT,
    report_history: int = REPORT_HISTORY,
):
    """Run a WatermarkServer until cancelled."""
    server = WatermarkServer(
        video_store,
        watermark,
        host=host,
        port=port,
        workers=workers,
        report_timeout=report_timeout,
        report_history=report_history,
    )
    await server.start()
    try:
        await server.serve_forever()
    finally:
        await server.close()
