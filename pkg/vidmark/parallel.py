"""
parallel.py
This file contains the deterministic row-chunked executor for per-pixel kernels
and the sequential-vs-parallel embedding benchmark.

A kernel receives a block of whole rows of the frame and the matching rows of a
per-pixel auxiliary matrix, and must only combine each pixel with its own
auxiliary value. Workers write disjoint row ranges of a fresh output matrix, so
the result is bit-identical to the sequential path for every worker count.
"""
import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, root_validator, validator

from config.config import vidmark_config
from config.logging_config import get_logger
from vidmark.container import RgbFrame
from vidmark.errors import InvariantViolation

logger = get_logger(__name__)

Kernel = Callable[[np.ndarray, np.ndarray], np.ndarray]

DEFAULT_WORKERS = vidmark_config.get("parallel.workers", 1)


class RowPartition(BaseModel):
    height: int
    worker_count: int
    ranges: List[Tuple[int, int]]

    @root_validator(skip_on_failure=True)
    def ranges_partition_height(cls, values):
        expected_start = 0
        for start, end in values["ranges"]:
            if start != expected_start or end <= start:
                raise ValueError(f"row ranges must be contiguous and ascending: {values['ranges']}")
            expected_start = end
        if expected_start != values["height"]:
            raise ValueError(f"row ranges cover {expected_start} of {values['height']} rows")
        return values


class BenchResult(BaseModel):
    width: int
    height: int
    watermark_bytes: int
    repetitions: int
    workers: List[int]
    median_ms: List[float]
    speedup: List[float]

    @validator("median_ms", each_item=True)
    def times_positive(cls, value):
        if value <= 0:
            raise ValueError("wall times must be positive")
        return value

    def speedup_for(self, workers: int) -> float:
        return self.speedup[self.workers.index(workers)]

    def lines(self) -> List[str]:
        """Machine-readable records: workers,width,height,wm_bytes,median_ms,speedup."""
        return [
            f"{w},{self.width},{self.height},{self.watermark_bytes},{ms:.3f},{s:.3f}"
            for w, ms, s in zip(self.workers, self.median_ms, self.speedup)
        ]

    def summary(self) -> str:
        rows = "\n".join(
            f"  {w:>3} worker(s): {ms:10.3f} ms   x{s:.2f}"
            for w, ms, s in zip(self.workers, self.median_ms, self.speedup)
        )
        return (
            f"Embedding kernel on {self.width}x{self.height}, "
            f"{self.watermark_bytes}-byte watermark, median of {self.repetitions} runs:\n{rows}"
        )


def partition_rows(height: int, workers: int) -> RowPartition:
    """Split [0, height) into near-equal contiguous chunks, at most one per worker."""
    if height < 1 or workers < 1:
        raise InvariantViolation(f"partition_rows needs height >= 1 and workers >= 1, got {height}, {workers}")
    chunks = min(workers, height)
    base, extra = divmod(height, chunks)
    ranges = []
    start = 0
    for i in range(chunks):
        end = start + base + (1 if i < extra else 0)
        ranges.append((start, end))
        start = end
    return RowPartition(height=height, worker_count=chunks, ranges=ranges)


def identity_kernel(pixels: np.ndarray, aux: np.ndarray) -> np.ndarray:
    return pixels.copy()


def xor_kernel(pixels: np.ndarray, aux: np.ndarray) -> np.ndarray:
    return np.bitwise_xor(pixels, aux)


def _aux_for(frame: RgbFrame, aux: Optional[np.ndarray]) -> np.ndarray:
    if aux is None:
        return np.zeros_like(frame.pixels)
    aux = np.asarray(aux)
    if aux.shape[:2] != frame.pixels.shape[:2]:
        raise InvariantViolation(
            f"auxiliary matrix {aux.shape} does not match frame {frame.pixels.shape}"
        )
    return aux


def apply_sequential(frame: RgbFrame, kernel: Kernel, aux: Optional[np.ndarray] = None) -> RgbFrame:
    """Reference path: the kernel applied one row at a time in row-major order."""
    aux = _aux_for(frame, aux)
    out = np.empty_like(frame.pixels)
    for row in range(frame.height):
        out[row : row + 1] = kernel(frame.pixels[row : row + 1], aux[row : row + 1])
    return RgbFrame(out)


def par_apply(
    frame: RgbFrame,
    kernel: Kernel,
    aux: Optional[np.ndarray] = None,
    workers: int = DEFAULT_WORKERS,
) -> RgbFrame:
    """Apply `kernel` over row chunks on a thread pool (fork-join).

    numpy releases the GIL inside its element-wise loops, so threads give real
    parallelism without copying the frame into worker processes.
    """
    aux = _aux_for(frame, aux)
    partition = partition_rows(frame.height, workers)
    pixels = frame.pixels
    out = np.empty_like(pixels)

    def run(rows: Tuple[int, int]) -> None:
        start, end = rows
        out[start:end] = kernel(pixels[start:end], aux[start:end])

    if partition.worker_count == 1:
        run(partition.ranges[0])
    else:
        with ThreadPoolExecutor(max_workers=partition.worker_count) as pool:
            # list() waits for every chunk and re-raises the first worker failure
            list(pool.map(run, partition.ranges))
    return RgbFrame(out)


def bench_embed(
    width: int,
    height: int,
    watermark_size: int,
    worker_list: List[int],
    repetitions: int,
    seed: int = 0,
) -> BenchResult:
    """Time the embedding pixel kernel for each worker count on a synthesized frame.

    Outputs for every worker count are checked bit-identical before any timing.
    """
    # delay import to avoid circular import
    from vidmark.watermark import body_mask, embed_frame

    workers_tested = sorted(set(worker_list) | {1})
    rng = np.random.default_rng(seed)
    frame = RgbFrame(rng.integers(0, 256, size=(height, width, 3), dtype=np.uint8))
    watermark = rng.bytes(watermark_size)

    # raises CapacityError before anything is timed
    reference, _ = embed_frame(frame, watermark, workers=1)
    for workers in workers_tested[1:]:
        marked, _ = embed_frame(frame, watermark, workers=workers)
        if marked != reference:
            raise InvariantViolation(f"{workers}-worker output differs from the sequential output")

    aux = body_mask(frame, watermark)
    medians: Dict[int, float] = {}
    for workers in workers_tested:
        samples = []
        for _ in range(max(1, repetitions)):
            started = time.perf_counter()
            par_apply(frame, xor_kernel, aux, workers)
            samples.append(time.perf_counter() - started)
        medians[workers] = max(statistics.median(samples) * 1000.0, 1e-6)
        logger.debug(f"{workers} worker(s): median {medians[workers]:.3f} ms")

    baseline = medians[1]
    return BenchResult(
        width=width,
        height=height,
        watermark_bytes=watermark_size,
        repetitions=max(1, repetitions),
        workers=workers_tested,
        median_ms=[medians[w] for w in workers_tested],
        speedup=[baseline / medians[w] for w in workers_tested],
    )
