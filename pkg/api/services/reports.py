# Description: Human and porcelain report rendering for the CLI
# Path: api/services/reports.py
from typing import List

from vidmark.bitstream import PictureCodingType, VideoIndex
from vidmark.watermark import VerificationReport, pixel_capacity


def _hex(value) -> str:
    return "-" if value is None else f"{value:08x}"


def index_lines(index: VideoIndex, width: int, height: int, fmt: str, porcelain: bool = False) -> List[str]:
    capacity = pixel_capacity(width * height)
    i_frames = index.i_frames
    if porcelain:
        lines = [
            f"picture,{p.offset},{'-' if p.gop_index is None else p.gop_index},{p.kind},{p.temporal_reference}"
            for p in index.pictures
        ]
        lines += [f"count,{kind.name},{index.counts[kind.name]}" for kind in PictureCodingType]
        lines += [f"capacity,{ordinal},{capacity}" for ordinal in range(len(i_frames))]
        return lines

    lines = [
        f"{fmt} stream: {len(index.sequence_header_offsets)} sequence header(s), "
        f"{len(index.gop_offsets)} GOP(s), {len(index.pictures)} picture(s)"
    ]
    if index.pictures:
        lines.append(f"{'offset':>10}  {'gop':>4}  type  {'tr':>4}")
        for p in index.pictures:
            gop = "-" if p.gop_index is None else p.gop_index
            lines.append(f"{p.offset:>10}  {gop:>4}  {p.kind:^4}  {p.temporal_reference:>4}")
    lines.append("counts: " + " ".join(f"{k}={v}" for k, v in index.counts.items()))
    if i_frames and width and height:
        lines.append(f"capacity: {capacity} watermark bytes per I-frame ({width}x{height})")
    if index.gop_start_warning:
        lines.append(f"warning: GOP(s) {index.gops_not_starting_with_i} do not start with an I picture")
    lines += [f"diagnostic: {d}" for d in index.diagnostics]
    return lines


def verify_lines(reports: List[VerificationReport], porcelain: bool = False) -> List[str]:
    if porcelain:
        return [
            f"verify,{r.frame_ordinal},{_hex(r.embedded_crc)},{_hex(r.computed_crc)},"
            f"{'ok' if r.match else 'mismatch'}"
            for r in reports
        ]
    lines = []
    for r in reports:
        status = "ok" if r.match else "MISMATCH"
        line = f"I-frame {r.frame_ordinal}: embedded {_hex(r.embedded_crc)} computed {_hex(r.computed_crc)} {status}"
        if r.error:
            line += f" ({r.error})"
        lines.append(line)
    mismatches = sum(not r.match for r in reports)
    lines.append(f"{len(reports)} I-frame(s) checked, {mismatches} mismatch(es)")
    return lines
