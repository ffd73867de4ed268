"""
test_bitstream.py
This file contains the tests for the MPEG-1 start-code scanner and indexer.
"""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vidmark.bitstream import (
    GROUP_START_CODE,
    PICTURE_START_CODE,
    SEQUENCE_HEADER_CODE,
    PictureCodingType,
    StartCodeHit,
    index_mpeg1,
    pack_gop_header,
    pack_picture_header,
    pack_sequence_header,
    parse_gop_header,
    parse_picture_header,
    parse_sequence_header,
    scan_start_codes,
)
from vidmark.errors import BadStartCode, InvalidCodingType, TruncatedHeader

I, P, B, D = (PictureCodingType.I, PictureCodingType.P, PictureCodingType.B, PictureCodingType.D)
PLANTED_CODES = [0x00, 0xB3, 0xB8, 0xB7]


def brute_force_scan(data: bytes):
    """Sliding-window oracle: every offset i with data[i:i+3] == 00 00 01 and a code byte."""
    arr = np.frombuffer(data, dtype=np.uint8)
    if arr.size < 4:
        return []
    hits = np.flatnonzero((arr[:-3] == 0) & (arr[1:-2] == 0) & (arr[2:-1] == 1))
    return [StartCodeHit(int(i), int(arr[i + 3])) for i in hits]


def planted_buffer(rng: np.random.Generator, size: int) -> bytes:
    buf = rng.integers(0, 256, size=size, dtype=np.uint8)
    for pos in rng.integers(0, size - 4, size=int(rng.integers(1, 21))):
        buf[pos : pos + 4] = (0, 0, 1, rng.choice(PLANTED_CODES))
    return buf.tobytes()


def gop_stream(*gops):
    stream = pack_sequence_header(352, 288)
    for kinds in gops:
        stream += pack_gop_header()
        for tr, kind in enumerate(kinds):
            stream += pack_picture_header(tr, kind) + b"\xaa\xbb"
    return stream + bytes([0, 0, 1, 0xB7])


def test_scan_named_start_codes():
    stream = bytes([0, 0, 1, 0xB3, 0, 0, 1, 0xB8, 0, 0, 1, 0x00])
    assert scan_start_codes(stream) == [(0, 0xB3), (4, 0xB8), (8, 0x00)]


def test_scan_empty_stream():
    assert scan_start_codes(b"") == []


def test_scan_overlapping_zero_run():
    assert scan_start_codes(bytes([0, 0, 0, 1, 0xB3])) == [(1, 0xB3)]


def test_scan_ignores_prefix_without_code_byte():
    assert scan_start_codes(bytes([0xFF, 0, 0, 1])) == []


def test_scan_reports_unnamed_codes():
    hits = scan_start_codes(bytes([0, 0, 1, 0x01, 0, 0, 1, 0xB7]))
    assert [h.code for h in hits] == [0x01, 0xB7]


@settings(max_examples=300, deadline=None)
@given(st.binary(max_size=512))
def test_scan_matches_sliding_window_oracle(data):
    assert scan_start_codes(data) == brute_force_scan(data)


def check_planted_buffers(count: int, size: int, seed: int):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        data = planted_buffer(rng, size)
        hits = scan_start_codes(data)
        assert hits == brute_force_scan(data)
        assert all(a.offset < b.offset for a, b in zip(hits, hits[1:]))


def test_scan_matches_oracle_on_planted_buffers():
    check_planted_buffers(count=40, size=4096, seed=1234)


@pytest.mark.slow
def test_scan_matches_oracle_on_thousand_64k_buffers():
    check_planted_buffers(count=1000, size=64 * 1024, seed=2024)


def test_parse_picture_header_i_frame():
    record = parse_picture_header(bytes([0, 0, 1, 0, 0x00, 0x08]), 0)
    assert record.temporal_reference == 0
    assert record.coding_type is I
    assert record.kind == "I"
    assert record.gop_index is None


def test_parse_picture_header_p_frame():
    record = parse_picture_header(b"\xff" + bytes([0, 0, 1, 0, 0x01, 0x50]), 1)
    assert record.offset == 1
    assert record.temporal_reference == 5
    assert record.coding_type is P


def test_parse_picture_header_forbidden_type():
    with pytest.raises(InvalidCodingType):
        parse_picture_header(bytes([0, 0, 1, 0, 0x00, 0x00]), 0)


@pytest.mark.parametrize("bits", [5, 6, 7])
def test_parse_picture_header_reserved_types(bits):
    with pytest.raises(InvalidCodingType):
        parse_picture_header(bytes([0, 0, 1, 0, 0x00, bits << 3]), 0)


def test_parse_picture_header_truncated():
    with pytest.raises(TruncatedHeader):
        parse_picture_header(bytes([0, 0, 1, 0, 0x00]), 0)


def test_parse_picture_header_wrong_code():
    with pytest.raises(BadStartCode):
        parse_picture_header(bytes([0, 0, 1, 0xB3, 0x00, 0x08]), 0)


def test_coding_type_mapping():
    assert {c.value: c.kind for c in PictureCodingType} == {1: "I", 2: "P", 3: "B", 4: "D"}
    for value in (0, 5, 6, 7):
        with pytest.raises(InvalidCodingType):
            PictureCodingType.from_bits(value)


def test_pack_parse_round_trip_exhaustive():
    for tr in range(1024):
        for kind in PictureCodingType:
            record = parse_picture_header(pack_picture_header(tr, kind), 0)
            assert (record.temporal_reference, record.coding_type) == (tr, kind)


def test_sequence_and_gop_headers_round_trip():
    seq = parse_sequence_header(pack_sequence_header(352, 288, 1, 3), 0)
    assert (seq.horizontal_size, seq.vertical_size, seq.aspect_ratio_code, seq.frame_rate_code) == (352, 288, 1, 3)

    gop = parse_gop_header(pack_gop_header(1, 2, 3, 4, closed_gop=False, broken_link=True), 0)
    assert (gop.hours, gop.minutes, gop.seconds, gop.pictures) == (1, 2, 3, 4)
    assert not gop.closed_gop and gop.broken_link and not gop.drop_frame


def test_index_single_gop_counts():
    index = index_mpeg1(gop_stream([I, B, B, P]))
    assert index.counts == {"I": 1, "P": 1, "B": 2, "D": 0}
    assert [p.gop_index for p in index.pictures] == [0, 0, 0, 0]
    assert index.sequence_header_offsets == [0]
    assert len(index.gop_offsets) == 1
    assert index.sequence_headers[0].horizontal_size == 352


def test_index_without_start_codes_is_empty():
    index = index_mpeg1(b"\x12\x34\x56" * 100)
    assert index.pictures == []
    assert index.gop_offsets == []
    assert sum(index.counts.values()) == 0
    assert not index.gop_start_warning


def test_index_two_gops_starting_with_i():
    index = index_mpeg1(gop_stream([I, P, B], [I, B, D]))
    assert not index.gop_start_warning
    assert [p.gop_index for p in index.pictures] == [0, 0, 0, 1, 1, 1]
    assert len(index.i_frames) == 2


def test_index_flags_gop_starting_with_p():
    index = index_mpeg1(gop_stream([I, P], [P, I]))
    assert index.gop_start_warning
    assert index.gops_not_starting_with_i == [1]
    assert index.diagnostics


def test_index_skips_bad_picture_headers():
    stream = gop_stream([I, P]) + bytes([0, 0, 1, 0, 0x00, 0x38]) + bytes([0, 0, 1, 0, 0x00])
    index = index_mpeg1(stream)
    assert len(index.pictures) == 2
    assert index.skipped_pictures == 2
    assert len(index.diagnostics) == 2


def test_index_picture_before_any_gop():
    index = index_mpeg1(pack_picture_header(0, I) + pack_gop_header() + pack_picture_header(0, I))
    assert [p.gop_index for p in index.pictures] == [None, 0]


def test_index_is_deterministic():
    stream = gop_stream([I, B, P], [I, P])
    assert index_mpeg1(stream) == index_mpeg1(stream)


def test_index_named_codes_at_exact_offsets():
    stream = gop_stream([I])
    codes = [(h.offset, h.code) for h in scan_start_codes(stream)]
    assert codes[:3] == [(0, SEQUENCE_HEADER_CODE), (8, GROUP_START_CODE), (16, PICTURE_START_CODE)]
