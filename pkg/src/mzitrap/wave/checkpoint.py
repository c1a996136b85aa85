"""Binary checkpoints of spinor fields and CSV density marginals.

Layout of a checkpoint file::

    8 bytes   magic  b"MZISPNR1"
    4 bytes   header length H, unsigned little-endian
    H bytes   UTF-8 JSON header
    rest      complex128 little-endian samples, C order, shape (2, *counts)

The header holds ``counts``, ``extents``, ``centers``, ``time``,
``components`` (``["1", "2"]``: first block is state ``|1>``), ``dtype``
(``"<c16"``), ``order`` (``"C"``) and free-form ``metadata``.
"""

from __future__ import annotations

import csv
import json
import struct
from pathlib import Path
from typing import Union

import numpy as np

from .grid import Grid, SpinorField

__all__ = ["MAGIC", "save_checkpoint", "load_checkpoint", "export_marginals"]

MAGIC = b"MZISPNR1"
_DTYPE = "<c16"

PathLike = Union[str, Path]


def save_checkpoint(path: PathLike, state: SpinorField) -> None:
    header = {
        **state.grid.describe(),
        "time": state.time,
        "components": ["1", "2"],
        "dtype": _DTYPE,
        "order": "C",
        "metadata": {k: v for k, v in state.metadata.items() if _jsonable(v)},
    }
    raw = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(raw)))
        fh.write(raw)
        fh.write(np.ascontiguousarray(state.psi, dtype=_DTYPE).tobytes(order="C"))


def load_checkpoint(path: PathLike) -> SpinorField:
    """Read a file written by :func:`save_checkpoint`.

    Raises
    ------
    ValueError
        On a wrong magic, unsupported dtype or truncated data.
    """
    data = Path(path).read_bytes()
    if data[:8] != MAGIC:
        raise ValueError("not a spinor checkpoint (bad magic)")
    (size,) = struct.unpack("<I", data[8:12])
    header = json.loads(data[12:12 + size].decode("utf-8"))
    if header.get("dtype") != _DTYPE or header.get("order") != "C":
        raise ValueError("unsupported checkpoint dtype or order")
    if header.get("components") != ["1", "2"]:
        raise ValueError("unsupported component order")
    grid = Grid(tuple(header["counts"]), tuple(header["extents"]), tuple(header["centers"]))
    body = data[12 + size:]
    expected = 2 * int(np.prod(grid.shape)) * 16
    if len(body) != expected:
        raise ValueError(f"checkpoint body has {len(body)} bytes, expected {expected}")
    psi = np.frombuffer(body, dtype=_DTYPE).reshape((2,) + grid.shape).copy()
    state = SpinorField(grid, psi, float(header["time"]))
    state.metadata.update(header.get("metadata", {}))
    return state


def export_marginals(path: PathLike, state: SpinorField) -> None:
    """Write ``|psi_1|^2`` and ``|psi_2|^2`` marginals along every axis as CSV.

    Columns: ``axis, coord_m, density1_per_m, density2_per_m``.
    """
    grid = state.grid
    dens = state.density()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["axis", "coord_m", "density1_per_m", "density2_per_m"])
        for ax in range(grid.ndim):
            others = tuple(i + 1 for i in range(grid.ndim) if i != ax)
            cell = grid.cell_volume / grid.spacings[ax]
            marg = dens.sum(axis=others) * cell if others else dens
            for x, d1, d2 in zip(grid.axis(ax), marg[0], marg[1]):
                w.writerow(["xyz"[ax] if grid.ndim == 3 else "z",
                            f"{x:.17g}", f"{d1:.17g}", f"{d2:.17g}"])


def _jsonable(v) -> bool:
    try:
        json.dumps(v)
        return True
    except (TypeError, ValueError):
        return False
