"""Deterministic on-disk artifacts.

Artifacts are zip archives of ``.npy`` members (readable by ``np.load``) plus
a JSON header serialized as a byte array under the key ``__header__``.
``np.savez`` stamps current timestamps into the zip, which breaks the
byte-identical-rerun guarantee, so members are written manually with a fixed
timestamp here.
"""

from __future__ import annotations

import io
import json
import zipfile
from pathlib import Path

import numpy as np

_EPOCH = (1980, 1, 1, 0, 0, 0)
_HEADER_KEY = "__header__"


def save_artifact(path: str | Path, header: dict, arrays: dict[str, np.ndarray]) -> None:
    """Write ``arrays`` plus a JSON ``header`` to ``path`` with stable bytes."""
    if _HEADER_KEY in arrays:
        raise ValueError(f"array name {_HEADER_KEY!r} is reserved")
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    members = dict(arrays)
    members[_HEADER_KEY] = np.frombuffer(header_bytes, dtype=np.uint8)
    with zipfile.ZipFile(path, "w", compression=zipfile.ZIP_DEFLATED) as zf:
        for name in sorted(members):
            buf = io.BytesIO()
            np.lib.format.write_array(buf, np.ascontiguousarray(members[name]))
            info = zipfile.ZipInfo(name + ".npy", date_time=_EPOCH)
            info.compress_type = zipfile.ZIP_DEFLATED
            zf.writestr(info, buf.getvalue())


def load_artifact(path: str | Path) -> tuple[dict, dict[str, np.ndarray]]:
    """Read an artifact written by :func:`save_artifact`."""
    with np.load(path) as npz:
        arrays = {name: npz[name] for name in npz.files}
    header_raw = arrays.pop(_HEADER_KEY, None)
    if header_raw is None:
        raise ValueError(f"{path}: not a recognized artifact (missing header)")
    header = json.loads(header_raw.tobytes().decode("utf-8"))
    return header, arrays
