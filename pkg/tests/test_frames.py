from __future__ import annotations

import json

import numpy as np
import pytest

from crashpipe.frames import (
    Clip,
    GrayFrame,
    ManifestError,
    PgmParseError,
    load_clip,
    load_manifest,
    load_pgm,
    luma_from_rgb,
    pgm_bytes,
    resize_bilinear,
    save_pgm,
)

from conftest import frame_of


def pgm(w: int, h: int, pixels: bytes, maxval: int = 255) -> bytes:
    return f"P5\n{w} {h}\n{maxval}\n".encode() + pixels


class TestLoadPgm:
    def test_two_pixel_file(self):
        f = load_pgm(pgm(2, 1, bytes([0, 255])))
        assert (f.width, f.height) == (2, 1)
        assert f.data.tolist() == [[0.0, 255.0]]

    def test_truncated_raster(self):
        with pytest.raises(PgmParseError, match="truncated"):
            load_pgm(pgm(4, 4, bytes(8)))

    def test_all_zero_320x180(self):
        f = load_pgm(pgm(320, 180, bytes(320 * 180)))
        assert f.data.size == 57600
        assert not f.data.any()

    def test_bad_magic(self):
        with pytest.raises(PgmParseError, match="P5"):
            load_pgm(b"P2\n2 1\n255\n11")

    def test_bad_maxval(self):
        with pytest.raises(PgmParseError, match="maxval"):
            load_pgm(pgm(2, 1, bytes([0, 1]), maxval=65535))

    def test_header_comments_are_skipped(self):
        data = b"P5\n# comment line\n2 1\n# another\n255\n" + bytes([7, 9])
        f = load_pgm(data)
        assert f.data.tolist() == [[7.0, 9.0]]

    def test_round_trip(self, rng):
        f = GrayFrame.from_array(rng.integers(0, 256, (9, 13)).astype(float))
        again = load_pgm(pgm_bytes(f))
        assert np.array_equal(again.data, f.data)


class TestLuma:
    def test_black(self):
        assert luma_from_rgb(0, 0, 0) == 0.0

    def test_white(self):
        assert luma_from_rgb(255, 255, 255) == pytest.approx(255.0, abs=1e-9)

    def test_pure_red(self):
        assert luma_from_rgb(255, 0, 0) == pytest.approx(76.245, abs=1e-9)


class TestResize:
    def test_identity_at_same_size(self, rng):
        f = GrayFrame.from_array(rng.uniform(0, 255, (7, 11)))
        out = resize_bilinear(f, 11, 7)
        assert np.array_equal(out.data, f.data)

    def test_2x2_down_to_1x1_averages(self):
        f = frame_of([[0.0, 100.0], [100.0, 200.0]])
        out = resize_bilinear(f, 1, 1)
        assert out.data[0, 0] == pytest.approx(100.0, abs=1e-12)

    def test_constant_stays_constant(self):
        f = frame_of(np.full((4, 6), 50.0))
        out = resize_bilinear(f, 13, 9)
        assert np.all(out.data == 50.0)

    def test_output_within_input_range(self, rng):
        for _ in range(20):
            h, w = rng.integers(2, 30, 2)
            f = GrayFrame.from_array(rng.uniform(0, 255, (h, w)))
            ow, oh = rng.integers(1, 40, 2)
            out = resize_bilinear(f, int(ow), int(oh))
            assert out.data.min() >= f.data.min() - 1e-12
            assert out.data.max() <= f.data.max() + 1e-12

    def test_rejects_empty_target(self):
        with pytest.raises(ValueError):
            resize_bilinear(frame_of([[1.0]]), 0, 3)


class TestFrameInvariants:
    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError, match=r"\[0, 255\]"):
            frame_of([[300.0]])

    def test_rejects_shape_mismatch(self):
        with pytest.raises(ValueError, match="shape"):
            GrayFrame(width=3, height=2, data=np.zeros((2, 2)))

    def test_data_is_read_only(self):
        f = frame_of([[1.0, 2.0]])
        with pytest.raises(ValueError):
            f.data[0, 0] = 9.0


class TestClip:
    def test_needs_two_frames(self):
        with pytest.raises(ValueError, match="at least 2"):
            Clip(frames=[frame_of([[0.0]])], fps=20.0, id="x")

    def test_rejects_mixed_dimensions(self):
        with pytest.raises(ValueError, match="expected"):
            Clip(frames=[frame_of([[0.0]]), frame_of([[0.0, 1.0]])], fps=20.0, id="x")

    def test_rejects_bad_fps(self):
        f = frame_of([[0.0]])
        with pytest.raises(ValueError, match="fps"):
            Clip(frames=[f, f], fps=0.0, id="x")


class TestManifest:
    def write_clip(self, tmp_path, pixels_list):
        names = []
        for i, px in enumerate(pixels_list):
            name = f"f{i}.pgm"
            (tmp_path / name).write_bytes(px)
            names.append(name)
        mpath = tmp_path / "manifest.json"
        mpath.write_text(json.dumps({"id": "vid", "fps": 10, "frames": names}))
        return mpath

    def test_load_clip_preserves_order(self, tmp_path):
        frames = [pgm(2, 1, bytes([i, i])) for i in (3, 1, 2)]
        clip = load_clip(load_manifest(self.write_clip(tmp_path, frames)))
        assert clip.id == "vid"
        assert clip.fps == 10
        assert [f.data[0, 0] for f in clip.frames] == [3.0, 1.0, 2.0]

    def test_missing_file_names_index(self, tmp_path):
        mpath = tmp_path / "manifest.json"
        mpath.write_text(json.dumps({"id": "vid", "fps": 10, "frames": ["a.pgm", "nope.pgm"]}))
        (tmp_path / "a.pgm").write_bytes(pgm(1, 1, bytes([0])))
        with pytest.raises(ManifestError, match="frame 1"):
            load_clip(load_manifest(mpath))

    def test_dimension_mismatch_names_index(self, tmp_path):
        frames = [pgm(2, 1, bytes([0, 0])), pgm(1, 1, bytes([0]))]
        with pytest.raises(ManifestError, match="frame 1"):
            load_clip(load_manifest(self.write_clip(tmp_path, frames)))

    def test_manifest_requires_keys(self, tmp_path):
        mpath = tmp_path / "m.json"
        mpath.write_text(json.dumps({"fps": 10, "frames": ["a.pgm"]}))
        with pytest.raises(ManifestError, match="'id'"):
            load_manifest(mpath)

    def test_save_pgm_round_trip(self, tmp_path, rng):
        f = GrayFrame.from_array(rng.integers(0, 256, (5, 4)).astype(float))
        save_pgm(f, tmp_path / "x.pgm")
        assert np.array_equal(load_pgm((tmp_path / "x.pgm").read_bytes()).data, f.data)
