import struct

import numpy as np
import pytest

from georag_extractor.format import (
    MAGIC,
    crc64_ecma,
    normalize_rows,
    wrap_longitude,
    write_gallery_file,
    write_query_file,
)


def test_crc_catalogue_check_value():
    assert crc64_ecma(b"123456789") == 0x6C40DF5F0B497347


def test_crc_chaining():
    assert crc64_ecma(b"world", crc64_ecma(b"hello ")) == crc64_ecma(b"hello world")


def test_normalize_rows_unit_norm():
    vecs = normalize_rows(np.random.default_rng(0).standard_normal((10, 7)) * 5)
    assert vecs.dtype == np.dtype("<f4")
    assert np.allclose(np.linalg.norm(vecs.astype(np.float64), axis=1), 1.0, atol=1e-6)


def test_normalize_rejects_zero_rows():
    with pytest.raises(ValueError, match="zero-norm"):
        normalize_rows(np.zeros((2, 4)))


@pytest.mark.parametrize("lon,expected", [(300.0, -60.0), (-180.0, 180.0), (10.0, 10.0)])
def test_wrap_longitude(lon, expected):
    assert wrap_longitude(lon) == expected


def test_gallery_header_layout(tmp_path):
    path = tmp_path / "g.bin"
    vectors = np.eye(4)[:3]
    checksum = write_gallery_file(path, vectors, [(1.0, 2.0), (3.0, 4.0), (5.0, 6.0)], [10, 20, 30])
    raw = path.read_bytes()
    assert raw[:8] == MAGIC
    version, dim = struct.unpack_from("<II", raw, 8)
    count, stored = struct.unpack_from("<QQ", raw, 16)
    assert (version, dim, count) == (1, 4, 3)
    assert stored == checksum == crc64_ecma(raw[32:])
    assert len(raw) == 32 + 3 * 4 * 4 + 3 * 16 + 3 * 8


def test_gallery_sorted_by_id(tmp_path):
    path = tmp_path / "g.bin"
    write_gallery_file(path, np.eye(3), [(1.0, 1.0), (2.0, 2.0), (3.0, 3.0)], [30, 10, 20])
    raw = path.read_bytes()
    ids = np.frombuffer(raw, dtype="<u8", count=3, offset=32 + 3 * 3 * 4 + 3 * 16)
    assert list(ids) == [10, 20, 30]


def test_gallery_rejects_bad_coordinates(tmp_path):
    with pytest.raises(ValueError, match="latitude"):
        write_gallery_file(tmp_path / "g.bin", np.eye(2), [(95.0, 0.0), (0.0, 0.0)], [1, 2])


def test_gallery_rejects_duplicate_ids(tmp_path):
    with pytest.raises(ValueError, match="unique"):
        write_gallery_file(tmp_path / "g.bin", np.eye(2), [(0.0, 0.0), (1.0, 1.0)], [7, 7])


def test_query_file_with_labels(tmp_path):
    path = tmp_path / "q.bin"
    write_query_file(path, np.eye(3)[:2], labels=["a", "b"])
    raw = path.read_bytes()
    _, dim = struct.unpack_from("<II", raw, 8)
    count, _ = struct.unpack_from("<QQ", raw, 16)
    assert (dim, count) == (3, 2)
    assert len(raw) == 32 + 2 * 3 * 4
    assert (tmp_path / "q.bin.ids").read_text() == "a\nb\n"
