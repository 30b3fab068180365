import gzip

import numpy as np
import pytest

from mnist_export.idx import (
    IdxFormatError,
    read_idx,
    read_images,
    read_labels,
    write_idx,
)


def test_image_round_trip(tmp_path):
    images = np.arange(2 * 4 * 3, dtype=np.uint8).reshape(2, 4, 3)
    path = tmp_path / "imgs"
    write_idx(path, images)
    assert np.array_equal(read_images(path), images)


def test_label_round_trip(tmp_path):
    labels = np.array([3, 1, 4, 1, 5], dtype=np.uint8)
    path = tmp_path / "labels"
    write_idx(path, labels)
    assert np.array_equal(read_labels(path), labels)


def test_header_bytes(tmp_path):
    path = tmp_path / "imgs"
    write_idx(path, np.zeros((2, 3, 5), dtype=np.uint8))
    raw = path.read_bytes()
    assert raw[:4] == bytes([0, 0, 0x08, 3])
    assert raw[4:16] == (2).to_bytes(4, "big") + (3).to_bytes(4, "big") + (5).to_bytes(4, "big")
    assert len(raw) == 16 + 30


def test_gzip_transparent(tmp_path):
    labels = np.array([7, 2], dtype=np.uint8)
    plain = tmp_path / "labels"
    write_idx(plain, labels)
    packed = tmp_path / "labels.gz"
    packed.write_bytes(gzip.compress(plain.read_bytes()))
    assert np.array_equal(read_labels(packed), labels)


def test_corrupted_magic(tmp_path):
    path = tmp_path / "bad"
    write_idx(path, np.zeros(3, dtype=np.uint8))
    raw = bytearray(path.read_bytes())
    raw[2] = 0x0D
    path.write_bytes(bytes(raw))
    with pytest.raises(IdxFormatError, match="magic"):
        read_idx(path)


def test_truncated_data(tmp_path):
    path = tmp_path / "short"
    write_idx(path, np.zeros(10, dtype=np.uint8))
    path.write_bytes(path.read_bytes()[:-3])
    with pytest.raises(IdxFormatError, match="needs 10 bytes"):
        read_idx(path)


def test_truncated_header(tmp_path):
    path = tmp_path / "stub"
    path.write_bytes(bytes([0, 0, 0x08, 2, 0, 0]))
    with pytest.raises(IdxFormatError, match="dimension header"):
        read_idx(path)


def test_wrong_dimensionality(tmp_path):
    path = tmp_path / "flat"
    write_idx(path, np.zeros(6, dtype=np.uint8))
    with pytest.raises(IdxFormatError, match="3 dimensions"):
        read_images(path)
    write_idx(path, np.zeros((2, 3), dtype=np.uint8))
    with pytest.raises(IdxFormatError, match="1 dimension"):
        read_labels(path)
