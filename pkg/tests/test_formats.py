import numpy as np
import pytest

from deskrover.formats import (
    FormatError,
    read_pfm,
    read_png_gray,
    write_pfm,
    write_png,
)


class TestPfm:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        data = rng.normal(size=(7, 11)).astype(np.float32)
        path = tmp_path / "x.pfm"
        write_pfm(path, data)
        assert np.array_equal(read_pfm(path), data)

    def test_round_trip_with_inf(self, tmp_path):
        data = np.array([[1.0, np.inf], [0.5, -1.0]], dtype=np.float32)
        path = tmp_path / "x.pfm"
        write_pfm(path, data)
        assert np.array_equal(read_pfm(path), data)

    def test_header(self, tmp_path):
        path = tmp_path / "x.pfm"
        write_pfm(path, np.zeros((2, 3), dtype=np.float32))
        raw = path.read_bytes()
        assert raw.startswith(b"Pf\n3 2\n-1.0\n")

    def test_scanlines_bottom_up(self, tmp_path):
        data = np.array([[1.0, 2.0], [3.0, 4.0]], dtype=np.float32)
        path = tmp_path / "x.pfm"
        write_pfm(path, data)
        payload = path.read_bytes().split(b"\n", 3)[3]
        first_row = np.frombuffer(payload[:8], dtype="<f4")
        assert np.array_equal(first_row, [3.0, 4.0])

    def test_rejects_garbage(self, tmp_path):
        path = tmp_path / "bad.pfm"
        path.write_bytes(b"not a pfm at all")
        with pytest.raises(FormatError):
            read_pfm(path)

    def test_rejects_truncated(self, tmp_path):
        path = tmp_path / "x.pfm"
        write_pfm(path, np.zeros((4, 4), dtype=np.float32))
        raw = path.read_bytes()
        path.write_bytes(raw[:-8])
        with pytest.raises(FormatError):
            read_pfm(path)


class TestPng:
    def test_gray_round_trip(self, tmp_path):
        rng = np.random.default_rng(1)
        img = rng.integers(0, 256, size=(16, 24), dtype=np.uint8)
        path = tmp_path / "x.png"
        write_png(path, img)
        assert np.array_equal(read_png_gray(path), img)

    def test_requires_uint8(self, tmp_path):
        with pytest.raises(FormatError):
            write_png(tmp_path / "x.png", np.zeros((4, 4), dtype=np.float32))
