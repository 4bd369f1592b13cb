import numpy as np
import pytest

from mvpb.cache import (FORMAT_VERSION, CacheVersionError, load_basis, load_or_assemble,
                        read_container, save_basis, write_container)
from mvpb.velocity import build_basis


def test_container_roundtrip(tmp_path, rng):
    arrays = {"a": rng.standard_normal((3, 4)), "z": rng.standard_normal(5) + 1j * rng.standard_normal(5)}
    p = write_container(tmp_path / "x.bin", {"k": 1}, arrays, "abc")
    meta, back = read_container(p, expect_hash="abc")
    assert meta == {"k": 1}
    for k in arrays:
        assert back[k].dtype == arrays[k].dtype
        assert np.array_equal(back[k], arrays[k])


def test_hash_mismatch(tmp_path):
    p = write_container(tmp_path / "x.bin", {}, {"a": np.zeros(2)}, "abc")
    with pytest.raises(CacheVersionError):
        read_container(p, expect_hash="def")


def test_version_mismatch(tmp_path):
    p = write_container(tmp_path / "x.bin", {}, {"a": np.zeros(2)})
    data = p.read_bytes().replace(f" {FORMAT_VERSION}\n".encode(), f" {FORMAT_VERSION + 1}\n".encode(), 1)
    p.write_bytes(data)
    with pytest.raises(CacheVersionError):
        read_container(p)
    (tmp_path / "junk.bin").write_bytes(b"hello\n")
    with pytest.raises(CacheVersionError):
        read_container(tmp_path / "junk.bin")


def test_basis_roundtrip(tmp_path):
    b = build_basis(4, 16)
    c = load_basis(save_basis(tmp_path / "b.bin", b))
    assert np.array_equal(c.radial_nodes, b.radial_nodes)
    assert (c.l_max, c.n_radial, c.R_max) == (b.l_max, b.n_radial, b.R_max)


def test_operator_cache_hit_is_identical(tmp_path):
    b = build_basis(4, 16)
    op1, hit1 = load_or_assemble(b, directory=tmp_path)
    op2, hit2 = load_or_assemble(b, directory=tmp_path)
    assert (hit1, hit2) == (False, True)
    for m in b.m_sectors:
        assert np.array_equal(op1.L(m), op2.L(m))
    op3, hit3 = load_or_assemble(b, directory=tmp_path, use_cache=False)
    assert not hit3
