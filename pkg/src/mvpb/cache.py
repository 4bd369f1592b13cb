"""Versioned cache container: a JSON header line followed by raw float64 data.

Layout::

    MVPB-CACHE <format version>\\n
    <one-line JSON: metadata, config hash, array table>\\n
    <little-endian float64 payload, arrays back to back>

Complex arrays are stored as interleaved real/imaginary float64 pairs.
"""
from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path

import numpy as np

FORMAT_VERSION = 1
MAGIC = "MVPB-CACHE"
CACHE_ENV = "MVPB_CACHE_DIR"


class CacheVersionError(RuntimeError):
    pass


def config_hash(obj) -> str:
    blob = json.dumps(obj, sort_keys=True, default=float).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def cache_dir(default: str | os.PathLike | None = None) -> Path:
    d = os.environ.get(CACHE_ENV) or default or Path.home() / ".cache" / "mvpb"
    return Path(d)


def write_container(path, meta: dict, arrays: dict[str, np.ndarray], chash: str = "") -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    table, offset, chunks = [], 0, []
    for name, arr in arrays.items():
        a = np.asarray(arr)
        cplx = np.iscomplexobj(a)
        data = (a.astype(np.complex128).view(np.float64) if cplx else a.astype(np.float64))
        raw = np.ascontiguousarray(data, dtype="<f8").tobytes()
        table.append({"name": name, "shape": list(a.shape), "complex": cplx,
                      "offset": offset, "nbytes": len(raw)})
        offset += len(raw)
        chunks.append(raw)
    header = {"meta": meta, "config_hash": chash, "arrays": table}
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(f"{MAGIC} {FORMAT_VERSION}\n".encode())
        fh.write((json.dumps(header, sort_keys=True) + "\n").encode())
        for c in chunks:
            fh.write(c)
    os.replace(tmp, path)
    return path


def read_container(path, expect_hash: str | None = None) -> tuple[dict, dict]:
    with open(path, "rb") as fh:
        first = fh.readline().decode().split()
        if len(first) != 2 or first[0] != MAGIC:
            raise CacheVersionError(f"{path}: not a cache container")
        if int(first[1]) != FORMAT_VERSION:
            raise CacheVersionError(f"{path}: format version {first[1]} != {FORMAT_VERSION}")
        header = json.loads(fh.readline().decode())
        payload = fh.read()
    if expect_hash is not None and header["config_hash"] != expect_hash:
        raise CacheVersionError(f"{path}: config hash mismatch")
    arrays = {}
    for ent in header["arrays"]:
        buf = np.frombuffer(payload, dtype="<f8", count=ent["nbytes"] // 8, offset=ent["offset"])
        a = buf.view(np.complex128) if ent["complex"] else buf
        arrays[ent["name"]] = a.reshape(ent["shape"]).copy()
    return header["meta"], arrays


# ---------------------------------------------------------------------- basis / operator

def save_basis(path, basis) -> Path:
    meta = {"l_max": basis.l_max, "n_radial": basis.n_radial, "R_max": basis.R_max,
            "rule": basis.rule, "m_sectors": list(basis.m_sectors)}
    return write_container(path, meta, {"nodes": basis.radial_nodes,
                                        "weights": basis.radial_weights}, config_hash(meta))


def load_basis(path):
    from .velocity import VelocityBasis
    meta, arr = read_container(path)
    return VelocityBasis(meta["l_max"], tuple(meta["m_sectors"]), arr["nodes"], arr["weights"],
                         meta["R_max"], meta["rule"])


def operator_key(basis, normalization: str) -> dict:
    return {"l_max": basis.l_max, "n_radial": basis.n_radial, "R_max": basis.R_max,
            "rule": basis.rule, "m_sectors": list(basis.m_sectors),
            "normalization": normalization, "format": FORMAT_VERSION}


def save_operator(path, op) -> Path:
    key = operator_key(op.basis, op.normalization)
    arrays = {"nodes": op.basis.radial_nodes, "weights": op.basis.radial_weights,
              "kl": np.stack(op.K_blocks), "nu": op.nu_diag}
    return write_container(path, key, arrays, config_hash(key))


def load_or_assemble(basis, normalization: str = "consistent", directory=None,
                     use_cache: bool = True):
    """Operator from cache when the config hash matches, else assemble and store."""
    from .collision import assemble_L
    key = operator_key(basis, normalization)
    h = config_hash(key)
    path = cache_dir(directory) / f"operator-{h}.bin"
    if use_cache and path.exists():
        try:
            _, arr = read_container(path, expect_hash=h)
            return assemble_L(basis, normalization, kl=arr["kl"], subtract_singularity=False), True
        except CacheVersionError:
            pass
    op = assemble_L(basis, normalization)
    if use_cache:
        save_operator(path, op)
    return op, False
