"""
conftest.py
This file contains the fixtures for the tests.
"""

import asyncio
import logging
from typing import Callable, Optional

import numpy as np
import pytest
import pytest_asyncio

from vidmark.container import RgbFrame, synth_sample, write_mv1


@pytest.fixture
def clean_logging():
    # Setup: Backup existing handlers
    logger = logging.getLogger()
    backup_handlers = logger.handlers[:]

    yield

    # Teardown: Restore original handlers and configuration
    logger.handlers = backup_handlers


@pytest.fixture
def sample_video():
    """64x64, 3 GOPs of I P P P."""
    return synth_sample(64, 64, 3, 4, 0)


@pytest.fixture
def small_video():
    return synth_sample(16, 16, 2, 2, 7)


@pytest.fixture
def sample_mv1_file(tmp_path, sample_video):
    path = tmp_path / "sample.mv1"
    path.write_bytes(write_mv1(sample_video))
    return path


@pytest.fixture
def watermark_bytes():
    return b"(c) vidmark test watermark \x00\x01\x02\xff"


@pytest.fixture
def watermark_file(tmp_path, watermark_bytes):
    path = tmp_path / "watermark.bin"
    path.write_bytes(watermark_bytes)
    return path


@pytest.fixture
def random_frame():
    def make(width: int, height: int, seed: int = 0) -> RgbFrame:
        rng = np.random.default_rng(seed)
        return RgbFrame(rng.integers(0, 256, size=(height, width, 3), dtype=np.uint8))

    return make


class FaultProxy:
    """TCP relay between a client and an upstream server.

    `mutate(offset, byte)` is applied to every byte of the upstream-to-client
    stream; `offset` counts from the first byte the server sent.
    """

    def __init__(self, upstream_port: int, mutate: Optional[Callable[[int, int], int]] = None):
        self.upstream_port = upstream_port
        self.mutate = mutate
        self.port = 0
        self._server: Optional[asyncio.AbstractServer] = None

    async def start(self):
        self._server = await asyncio.start_server(self._handle, "127.0.0.1", 0)
        self.port = self._server.sockets[0].getsockname()[1]
        return self

    async def close(self):
        if self._server is not None:
            self._server.close()
            await self._server.wait_closed()

    async def _handle(self, client_reader, client_writer):
        up_reader, up_writer = await asyncio.open_connection("127.0.0.1", self.upstream_port)
        await asyncio.gather(
            self._pump(client_reader, up_writer, None),
            self._pump(up_reader, client_writer, self.mutate),
            return_exceptions=True,
        )

    @staticmethod
    async def _pump(reader, writer, mutate):
        offset = 0
        try:
            while True:
                chunk = await reader.read(65536)
                if not chunk:
                    break
                if mutate is not None:
                    chunk = bytes(mutate(offset + i, b) for i, b in enumerate(chunk))
                offset += len(chunk)
                writer.write(chunk)
                await writer.drain()
        finally:
            writer.close()


@pytest_asyncio.fixture
async def fault_proxy():
    proxies = []

    async def make(upstream_port: int, mutate=None) -> FaultProxy:
        proxy = await FaultProxy(upstream_port, mutate).start()
        proxies.append(proxy)
        return proxy

    yield make
    for proxy in proxies:
        await proxy.close()
