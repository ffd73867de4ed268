"""
test_watermark.py
This file contains the tests for embedding, restoring and verifying watermarks.
"""
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vidmark.base64codec import b64_encode
from vidmark.container import RgbFrame, synth_sample
from vidmark.errors import (
    BadMagic,
    BadVersion,
    CapacityError,
    InvalidBase64,
    InvalidKey,
    KeyFrameCountMismatch,
)
from vidmark.watermark import (
    HEADER_BACKUP_SIZE,
    HEADER_PIXELS,
    PayloadHeader,
    VerificationReport,
    WatermarkKey,
    crc32,
    embed_frame,
    embed_video,
    frame_capacity,
    read_header,
    restore_and_verify_video,
    restore_frame,
    verify_frame,
    verify_video,
)


def test_crc32_check_value():
    assert crc32(b"123456789") == 0xCBF43926
    assert crc32(b"") == 0


def test_payload_header_layout():
    raw = PayloadHeader(payload_len=10, crc32=0xCBF43926).to_bytes()
    assert raw == b"WM\x01" + bytes([0, 0, 0, 10]) + bytes([0xCB, 0xF4, 0x39, 0x26])
    assert HEADER_PIXELS == 15
    assert HEADER_BACKUP_SIZE == 12


def test_payload_header_rejects_magic_and_version():
    with pytest.raises(BadMagic):
        PayloadHeader.from_bytes(b"XM\x01" + bytes(8))
    with pytest.raises(BadVersion):
        PayloadHeader.from_bytes(b"WM\x02" + bytes(8))


def test_capacity():
    frame = RgbFrame(np.zeros((8, 8, 3), dtype=np.uint8))
    # (64 - 15) pixels x 6 bits
    assert frame_capacity(frame) == 36
    embed_frame(frame, bytes(36))
    with pytest.raises(CapacityError):
        embed_frame(frame, bytes(37))


def test_capacity_of_tiny_frame():
    frame = RgbFrame(np.zeros((2, 2, 3), dtype=np.uint8))
    assert frame_capacity(frame) == 0
    with pytest.raises(CapacityError):
        embed_frame(frame, b"")


def test_embed_restore_round_trip(random_frame):
    frame = random_frame(16, 16, seed=3)
    marked, key = embed_frame(frame, b"hello watermark")
    assert marked != frame
    assert restore_frame(marked, key) == frame
    assert read_header(marked).payload_len == 15


@pytest.mark.parametrize("workers", [1, 3])
def test_embed_restore_transposed_pixel_matrix(workers):
    base = np.random.default_rng(11).integers(0, 256, size=(12, 20, 3), dtype=np.uint8)
    frame = RgbFrame(base.transpose(1, 0, 2))
    assert frame.flat.base is not None
    marked, key = embed_frame(frame, b"hello", workers=workers)
    assert read_header(marked).payload_len == 5
    assert verify_frame(marked, key).match
    expected = RgbFrame(np.ascontiguousarray(base.transpose(1, 0, 2)))
    assert restore_frame(marked, key, workers=workers) == expected


def test_embed_does_not_mutate_input(random_frame):
    frame = random_frame(8, 8, seed=4)
    before = frame.copy()
    embed_frame(frame, b"abc")
    assert frame == before


def test_embedding_is_local(random_frame):
    frame = random_frame(10, 10, seed=5)
    watermark = b"local"
    marked, _ = embed_frame(frame, watermark)
    used = HEADER_PIXELS + 7  # ceil(40 / 6) sextets
    assert np.array_equal(marked.flat[used:], frame.flat[used:])
    delta = np.abs(marked.flat.astype(int) - frame.flat.astype(int))
    assert delta.max() <= 3
    # only the 2 low bits can change
    assert np.array_equal(marked.flat & 0xFC, frame.flat & 0xFC)


def test_header_is_blind_readable(random_frame):
    frame = random_frame(12, 12, seed=6)
    watermark = b"blind"
    marked, key = embed_frame(frame, watermark)
    header = read_header(marked)
    assert header.payload_len == len(watermark)
    assert header.crc32 == crc32(watermark) == key.crc32


def test_zero_length_watermark(random_frame):
    frame = random_frame(4, 4, seed=8)
    marked, key = embed_frame(frame, b"")
    header = read_header(marked)
    assert (header.payload_len, header.crc32) == (0, 0)
    assert key.base64_text == ""
    assert np.array_equal(marked.flat[HEADER_PIXELS:], frame.flat[HEADER_PIXELS:])
    assert restore_frame(marked, key) == frame


def test_involution_randomized():
    rng = np.random.default_rng(2024)
    for _ in range(200):
        width, height = (int(v) for v in rng.integers(4, 40, size=2))
        frame = RgbFrame(rng.integers(0, 256, size=(height, width, 3), dtype=np.uint8))
        size = int(rng.integers(0, frame_capacity(frame) + 1))
        watermark = rng.bytes(size)
        marked, key = embed_frame(frame, watermark, workers=int(rng.integers(1, 5)))
        delta = np.abs(marked.pixels.astype(int) - frame.pixels.astype(int))
        assert delta.max(initial=0) <= 3
        assert restore_frame(marked, key) == frame


@settings(max_examples=50, deadline=None)
@given(
    st.integers(min_value=4, max_value=24),
    st.integers(min_value=4, max_value=24),
    st.data(),
)
def test_involution_property(width, height, data):
    seed = data.draw(st.integers(min_value=0, max_value=2**16))
    frame = RgbFrame(np.random.default_rng(seed).integers(0, 256, size=(height, width, 3), dtype=np.uint8))
    watermark = data.draw(st.binary(max_size=frame_capacity(frame)))
    marked, key = embed_frame(frame, watermark)
    assert restore_frame(marked, key) == frame
    assert verify_frame(marked, key).match


def test_verify_detects_altered_key(random_frame):
    frame = random_frame(16, 16, seed=9)
    marked, key = embed_frame(frame, b"original text")
    altered = WatermarkKey(
        base64_text=b64_encode(b"original texT"), header_backups=key.header_backups, crc32=key.crc32
    )
    report = verify_frame(marked, altered)
    assert not report.match
    assert report.embedded_crc == crc32(b"original text")
    assert report.computed_crc == crc32(b"original texT")


def test_verify_detects_tampered_header(random_frame):
    frame = random_frame(16, 16, seed=10)
    marked, key = embed_frame(frame, b"header check")
    # pixel 10 carries bits of the crc32 field
    marked.flat[10, 0] ^= 0x01
    report = verify_frame(marked, key)
    assert not report.match


def test_tampered_magic_raises(random_frame):
    frame = random_frame(16, 16, seed=11)
    marked, key = embed_frame(frame, b"magic")
    marked.flat[0, 0] ^= 0x01
    with pytest.raises(BadMagic):
        read_header(marked)
    with pytest.raises(BadMagic):
        restore_frame(marked, key)
    restored = restore_frame(marked, key, check_header=False)
    # substitution rewrites both low bits, so the damaged pixel is repaired too
    assert restored == frame


def test_key_validation():
    with pytest.raises(InvalidBase64):
        WatermarkKey(base64_text="T?==", header_backups=[bytes(12)], crc32=0)
    with pytest.raises(InvalidKey):
        WatermarkKey(base64_text="", header_backups=[bytes(11)], crc32=0)
    with pytest.raises(InvalidKey):
        WatermarkKey(base64_text="", header_backups=[bytes(11) + b"\x3f"], crc32=0)
    assert WatermarkKey(base64_text="", header_backups=[bytes(11) + b"\xc0"], crc32=0)


def test_restore_rejects_length_mismatch(random_frame):
    frame = random_frame(16, 16, seed=12)
    marked, key = embed_frame(frame, b"12345")
    longer = WatermarkKey(base64_text=b64_encode(b"123456"), header_backups=key.header_backups, crc32=0)
    with pytest.raises(InvalidKey):
        restore_frame(marked, longer)
    with pytest.raises(InvalidKey):
        restore_frame(marked, key, frame_ordinal=1)


def test_verification_report_invariant():
    VerificationReport(frame_ordinal=0, embedded_crc=1, computed_crc=1, match=True)
    with pytest.raises(ValueError):
        VerificationReport(frame_ordinal=0, embedded_crc=1, computed_crc=2, match=True)
    with pytest.raises(ValueError):
        VerificationReport(frame_ordinal=0, computed_crc=2, match=True, error="BadMagic: x")


def test_embed_video_marks_every_i_frame():
    video = synth_sample(16, 16, 2, 2, 1)
    watermark = b"ten bytes!"
    marked, key = embed_video(video, watermark)
    assert len(key.header_backups) == 2
    for frame in marked.i_frames():
        assert read_header(frame).crc32 == crc32(watermark)
    for old, new in zip(video.gops, marked.gops):
        assert old.pictures[1].payload == new.pictures[1].payload
    assert all(r.match for r in verify_video(marked, key))


def test_embed_video_capacity_error_names_frame():
    video = synth_sample(4, 4, 2, 1, 1)
    with pytest.raises(CapacityError, match="I-frame 0"):
        embed_video(video, bytes(2))


def test_restore_and_verify_video_round_trip(sample_video):
    marked, key = embed_video(sample_video, b"round trip " * 10, workers=3)
    restored, reports = restore_and_verify_video(marked, key)
    assert restored == sample_video
    assert [r.frame_ordinal for r in reports] == [0, 1, 2]
    assert all(r.match for r in reports)


def test_restore_and_verify_video_reports_damaged_frame(sample_video):
    marked, key = embed_video(sample_video, b"damage")
    marked.i_frames()[1].flat[0, 1] ^= 0x02
    restored, reports = restore_and_verify_video(marked, key)
    assert [r.match for r in reports] == [True, False, True]
    assert reports[1].error is not None and reports[1].error.startswith("BadMagic")
    assert restored.i_frames()[0] == sample_video.i_frames()[0]


def test_restore_and_verify_video_frame_count_mismatch(sample_video):
    marked, key = embed_video(sample_video, b"count")
    short = WatermarkKey(base64_text=key.base64_text, header_backups=key.header_backups[:2], crc32=key.crc32)
    with pytest.raises(KeyFrameCountMismatch):
        restore_and_verify_video(marked, short)


def test_header_region_bit_flips_are_detected():
    rng = random.Random(77)
    frame = RgbFrame(np.random.default_rng(77).integers(0, 256, size=(16, 16, 3), dtype=np.uint8))
    marked, key = embed_frame(frame, b"flip detection")
    for _ in range(50):
        pixel, channel, bit = rng.randrange(HEADER_PIXELS), rng.randrange(3), rng.randrange(2)
        if (pixel, channel) == (HEADER_PIXELS - 1, 2):
            # last two bits of the 90 are sextet padding
            continue
        damaged = marked.copy()
        damaged.flat[pixel, channel] ^= 1 << bit
        try:
            header = read_header(damaged)
        except (BadMagic, BadVersion):
            continue
        changed_field = (header.payload_len, header.crc32) != (14, key.crc32)
        assert changed_field


def test_body_pixel_xor_example():
    pixels = np.zeros((4, 5, 3), dtype=np.uint8)
    pixels.reshape(-1, 3)[HEADER_PIXELS] = (200, 100, 50)
    # first sextet of 0xD0 is 0b110100
    marked, _ = embed_frame(RgbFrame(pixels), b"\xd0")
    assert tuple(marked.flat[HEADER_PIXELS]) == (203, 101, 50)


def test_one_byte_watermark_needs_seventeen_pixels():
    with pytest.raises(CapacityError):
        embed_frame(RgbFrame(np.zeros((4, 4, 3), dtype=np.uint8)), b"x")


def test_unmarked_frame_has_no_header():
    # all-zero LSBs spell sextets 0, 0, ... which cannot start "WM"
    with pytest.raises(BadMagic):
        read_header(RgbFrame(np.zeros((4, 4, 3), dtype=np.uint8)))


def test_read_header_needs_fifteen_pixels():
    with pytest.raises(CapacityError):
        read_header(RgbFrame(np.zeros((2, 7, 3), dtype=np.uint8)))
