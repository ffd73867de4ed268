# Description: Subcommand handlers behind the vidmark CLI
# Path: api/services/commands.py
import asyncio
from pathlib import Path
from typing import List

from api.services.reports import index_lines, verify_lines
from config.logging_config import get_logger
from vidmark.bitstream import index_mpeg1
from vidmark.container import index_mv1, is_mv1, read_dimensions, read_mv1, synth_sample, write_mv1
from vidmark.netproto import fetch, read_keyfile, serve, write_keyfile
from vidmark.parallel import bench_embed
from vidmark.watermark import embed_video, restore_and_verify_video, verify_video

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_MISMATCH = 1
EXIT_ERROR = 2


def _emit(lines: List[str]):
    for line in lines:
        print(line)


def cmd_index(cfg) -> int:
    data = Path(cfg.input_path).read_bytes()
    if is_mv1(data):
        index = index_mv1(data)
        width, height = read_dimensions(data)
        fmt = "MV1"
    else:
        index = index_mpeg1(data)
        header = index.sequence_headers[0] if index.sequence_headers else None
        width, height = (header.horizontal_size, header.vertical_size) if header else (0, 0)
        fmt = "MPEG-1"
    _emit(index_lines(index, width, height, fmt, porcelain=cfg.porcelain))
    return EXIT_OK


def cmd_make_sample(cfg) -> int:
    video = synth_sample(cfg.width, cfg.height, cfg.gops, cfg.pictures_per_gop, cfg.seed, fps=cfg.fps)
    Path(cfg.output_path).write_bytes(write_mv1(video))
    print(
        f"Wrote {cfg.width}x{cfg.height} sample with {cfg.gops} GOP(s) of "
        f"{cfg.pictures_per_gop} picture(s) to {cfg.output_path}"
    )
    return EXIT_OK


def cmd_embed(cfg) -> int:
    video = read_mv1(Path(cfg.input_path).read_bytes())
    watermark = Path(cfg.watermark_path).read_bytes()
    marked, key = embed_video(video, watermark, workers=cfg.workers)
    Path(cfg.output_path).write_bytes(write_mv1(marked))
    Path(cfg.key_path).write_bytes(write_keyfile(key))
    print(
        f"Embedded {len(watermark)} bytes (crc32 {key.crc32:08x}) into "
        f"{len(key.header_backups)} I-frame(s): {cfg.output_path}, key {cfg.key_path}"
    )
    return EXIT_OK


def cmd_restore(cfg) -> int:
    marked = read_mv1(Path(cfg.input_path).read_bytes())
    key = read_keyfile(Path(cfg.key_path).read_bytes())
    restored, reports = restore_and_verify_video(marked, key, workers=cfg.workers)
    Path(cfg.output_path).write_bytes(write_mv1(restored))
    mismatches = sum(not r.match for r in reports)
    print(f"Restored {len(reports)} I-frame(s) to {cfg.output_path}, {mismatches} mismatch(es)")
    return EXIT_MISMATCH if mismatches else EXIT_OK


def cmd_verify(cfg) -> int:
    marked = read_mv1(Path(cfg.input_path).read_bytes())
    key = read_keyfile(Path(cfg.key_path).read_bytes())
    reports = verify_video(marked, key)
    _emit(verify_lines(reports, porcelain=cfg.porcelain))
    return EXIT_MISMATCH if any(not r.match for r in reports) else EXIT_OK


def cmd_serve(cfg) -> int:
    store = {Path(p).stem: read_mv1(Path(p).read_bytes()) for p in cfg.video_paths}
    watermark = Path(cfg.watermark_path).read_bytes()
    logger.info(f"Loaded videos {sorted(store)} and a {len(watermark)}-byte watermark")
    try:
        asyncio.run(serve(store, watermark, host=cfg.host, port=cfg.port, workers=cfg.workers))
    except KeyboardInterrupt:
        logger.info("Interrupted, shutting down")
    return EXIT_OK


def cmd_fetch(cfg) -> int:
    summary = asyncio.run(
        fetch(cfg.host, cfg.port, cfg.video_id, Path(cfg.output_path), workers=cfg.workers)
    )
    if cfg.porcelain:
        _emit([summary.line()])
        _emit(verify_lines(summary.reports, porcelain=True))
    else:
        print(
            f"Fetched {summary.video_id!r}: status {summary.status}, {summary.frame_count} I-frame(s), "
            f"{summary.mismatch_count} mismatch(es)"
        )
        if summary.error:
            print(f"  {summary.error}")
        for path in (summary.marked_path, summary.key_path, summary.restored_path):
            if path is not None:
                print(f"  wrote {path}")
    return summary.status


def cmd_bench(cfg) -> int:
    result = bench_embed(
        cfg.width, cfg.height, cfg.watermark_size, cfg.bench_workers, cfg.repetitions, seed=cfg.seed
    )
    if cfg.porcelain:
        _emit(result.lines())
    else:
        print(result.summary())
    return EXIT_OK


HANDLERS = {
    "index": cmd_index,
    "make-sample": cmd_make_sample,
    "embed": cmd_embed,
    "restore": cmd_restore,
    "verify": cmd_verify,
    "serve": cmd_serve,
    "fetch": cmd_fetch,
    "bench": cmd_bench,
}
