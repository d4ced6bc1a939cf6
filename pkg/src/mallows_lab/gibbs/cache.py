"""On-disk sample cache.

File layout: one header line ``# mallows-lab-cache v1 <json>\\n`` carrying the
sampler parameters and the array shape, followed by the ``R x N`` samples as
raw little-endian float64 rows.  Files are named by the SHA-256 of the
canonical parameter JSON.  Conditional means are not stored; they are
recomputed from the spins and the coupling band on load.
"""

from __future__ import annotations

import hashlib
import json
import os
import shutil
from pathlib import Path

import numpy as np

from ..assoc import ReplicaEnsemble
from .couplings import Band
from .sampler import local_fields
from .spins import RealLaw, conditional_mean

MAGIC = "# mallows-lab-cache v1 "


def default_cache_dir() -> Path:
    root = os.environ.get("MALLOWS_LAB_CACHE")
    if root:
        return Path(root)
    return Path(os.environ.get("XDG_CACHE_HOME", Path.home() / ".cache")) / "mallows-lab"


def cache_key(settings) -> str:
    blob = json.dumps(settings.describe(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def cache_path(cache_dir, settings) -> Path:
    return Path(cache_dir) / f"{cache_key(settings)}.bin"


def save_ensemble(cache_dir, settings, ens: ReplicaEnsemble) -> Path:
    path = cache_path(cache_dir, settings)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = dict(settings.describe(), shape=list(ens.values.shape), meta=_jsonable(ens.meta))
    tmp = path.with_suffix(".tmp")
    with open(tmp, "wb") as fh:
        fh.write((MAGIC + json.dumps(header, sort_keys=True) + "\n").encode())
        fh.write(np.ascontiguousarray(ens.values, dtype="<f8").tobytes())
    tmp.replace(path)
    return path


def read_cache_file(path):
    with open(path, "rb") as fh:
        line = fh.readline().decode()
        if not line.startswith(MAGIC):
            raise ValueError(f"{path} is not a mallows-lab cache file")
        header = json.loads(line[len(MAGIC) :])
        data = np.frombuffer(fh.read(), dtype="<f8")
    return header, data.reshape(header["shape"]).astype(float)


def load_ensemble(cache_dir, settings, band: Band) -> ReplicaEnsemble | None:
    path = cache_path(cache_dir, settings)
    if not path.exists():
        return None
    header, values = read_cache_file(path)
    cond = None
    if not isinstance(settings.spin_space, RealLaw):
        ext = None
        if settings.exterior_left or settings.exterior_right:
            from .sampler import exterior_field

            ext = exterior_field(settings.coupling, settings.size, settings.exterior_left, settings.exterior_right)
        cond = conditional_mean(settings.spin_space.kind, local_fields(values, band, ext))
    ext_used = bool(settings.exterior_left or settings.exterior_right)
    meta = dict(header.get("meta", {}), cache_hit=str(path))
    return ReplicaEnsemble(
        values,
        groups=np.repeat(np.arange(settings.replicas), settings.windows),
        cond_mean=cond,
        known_mean=None if ext_used else settings.spin_space.known_mean,
        periodic=settings.boundary == "periodic",
        meta=meta,
    )


def clear_cache(cache_dir=None) -> int:
    """Delete every cache file; returns how many were removed."""
    root = Path(cache_dir) if cache_dir is not None else default_cache_dir()
    if not root.exists():
        return 0
    files = list(root.glob("*.bin"))
    for f in files:
        f.unlink()
    for leftover in root.glob("*.tmp"):
        leftover.unlink()
    if not any(root.iterdir()):
        shutil.rmtree(root)
    return len(files)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj
