import argparse
import sys
from pathlib import Path
from typing import List, Optional

from dotenv import load_dotenv
from pydantic import BaseModel, Field, ValidationError, validator

from api.services.commands import EXIT_ERROR, HANDLERS
from config.config import vidmark_config
from config.logging_config import get_logger, initialize_root_logger
from vidmark.errors import VidmarkError
from vidmark.netproto.constants import DEFAULT_HOST, DEFAULT_PORT
from vidmark.parallel import DEFAULT_WORKERS

load_dotenv()

logger = get_logger(__name__)


class CliConfig(BaseModel):
    subcommand: str
    input_path: Optional[Path] = None
    output_path: Optional[Path] = None
    key_path: Optional[Path] = None
    watermark_path: Optional[Path] = None
    video_paths: List[Path] = []
    host: str = DEFAULT_HOST
    port: int = Field(DEFAULT_PORT, ge=0, le=65535)
    workers: int = Field(DEFAULT_WORKERS, ge=1)
    seed: int = 0
    video_id: Optional[str] = None
    porcelain: bool = False
    width: int = Field(vidmark_config.get("sample.width", 64), ge=1, le=0xFFFF)
    height: int = Field(vidmark_config.get("sample.height", 64), ge=1, le=0xFFFF)
    gops: int = Field(vidmark_config.get("sample.gop_count", 3), ge=1)
    pictures_per_gop: int = Field(vidmark_config.get("sample.pictures_per_gop", 4), ge=1)
    fps: int = Field(vidmark_config.get("sample.fps", 25), ge=0, le=255)
    watermark_size: int = Field(vidmark_config.get("bench.watermark_size", 204800), ge=0)
    bench_workers: List[int] = vidmark_config.get("bench.workers", [1, 2, 4])
    repetitions: int = Field(vidmark_config.get("bench.repetitions", 5), ge=1)

    @validator("subcommand")
    def known_subcommand(cls, value):
        if value not in HANDLERS:
            raise ValueError(f"unknown subcommand {value!r}")
        return value

    @validator("bench_workers", each_item=True)
    def positive_workers(cls, value):
        if value < 1:
            raise ValueError("worker counts must be >= 1")
        return value

    @classmethod
    def from_namespace(cls, args: argparse.Namespace) -> "CliConfig":
        values = {k: v for k, v in vars(args).items() if v is not None and k in cls.__fields__}
        return cls(**values)


def _worker_list(text: str) -> List[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vidmark", description="Watermark, distribute and verify MV1 videos"
    )
    sub = parser.add_subparsers(dest="subcommand", metavar="subcommand")

    p = sub.add_parser("index", help="report I/P/B/D pictures of an MPEG-1 or MV1 file")
    p.add_argument("input_path", type=Path)
    p.add_argument("--porcelain", action="store_true")

    p = sub.add_parser("make-sample", help="write a synthetic MV1 video")
    p.add_argument("-o", "--output", dest="output_path", type=Path, required=True)
    p.add_argument("--width", type=int)
    p.add_argument("--height", type=int)
    p.add_argument("--gops", type=int)
    p.add_argument("--pictures-per-gop", dest="pictures_per_gop", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--fps", type=int)

    p = sub.add_parser("embed", help="watermark every I-frame of an MV1 video")
    p.add_argument("input_path", type=Path, metavar="video")
    p.add_argument("watermark_path", type=Path, metavar="watermark")
    p.add_argument("-o", "--output", dest="output_path", type=Path, required=True)
    p.add_argument("-k", "--key", dest="key_path", type=Path, required=True)
    p.add_argument("--workers", type=int)

    p = sub.add_parser("restore", help="remove the watermark using its key")
    p.add_argument("input_path", type=Path, metavar="marked")
    p.add_argument("-k", "--key", dest="key_path", type=Path, required=True)
    p.add_argument("-o", "--output", dest="output_path", type=Path, required=True)
    p.add_argument("--workers", type=int)

    p = sub.add_parser("verify", help="compare embedded and key checksums")
    p.add_argument("input_path", type=Path, metavar="marked")
    p.add_argument("-k", "--key", dest="key_path", type=Path, required=True)
    p.add_argument("--porcelain", action="store_true")

    p = sub.add_parser("serve", help="serve watermarked videos over TCP")
    p.add_argument("--host")
    p.add_argument("--port", type=int)
    p.add_argument("--video", dest="video_paths", type=Path, action="append", required=True)
    p.add_argument("--watermark", dest="watermark_path", type=Path, required=True)
    p.add_argument("--workers", type=int)

    p = sub.add_parser("fetch", help="download, restore and verify a video")
    p.add_argument("--host")
    p.add_argument("--port", type=int)
    p.add_argument("--id", dest="video_id", required=True)
    p.add_argument("-o", "--output", dest="output_path", type=Path, required=True)
    p.add_argument("--workers", type=int)
    p.add_argument("--porcelain", action="store_true")

    p = sub.add_parser("bench", help="time the embedding kernel across worker counts")
    p.add_argument("--workers", dest="bench_workers", type=_worker_list)
    p.add_argument("--width", type=int)
    p.add_argument("--height", type=int)
    p.add_argument("--watermark-size", dest="watermark_size", type=int)
    p.add_argument("--repetitions", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--porcelain", action="store_true")

    return parser


def run(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_ERROR if e.code else 0

    if args.subcommand is None:
        parser.print_help(sys.stderr)
        return EXIT_ERROR
    # frame size defaults come from the sample section except for bench
    if args.subcommand == "bench":
        for name, key in (("width", "bench.width"), ("height", "bench.height")):
            if getattr(args, name) is None:
                setattr(args, name, vidmark_config.get(key))

    try:
        cfg = CliConfig.from_namespace(args)
    except ValidationError as e:
        parser.print_help(sys.stderr)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR

    logger.debug(f"Running {cfg.subcommand} with {cfg}")
    try:
        return HANDLERS[cfg.subcommand](cfg)
    except VidmarkError as e:
        print(f"error: {e.name}: {e.message}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as e:
        print(f"error: {e.__class__.__name__}: {e}", file=sys.stderr)
        return EXIT_ERROR


def main():
    initialize_root_logger()
    sys.exit(run())


if __name__ == "__main__":
    main()
