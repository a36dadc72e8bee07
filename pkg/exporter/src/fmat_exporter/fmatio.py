"""Writer for the FMAT interchange format.

Layout: magic bytes ``FMAT``, little-endian u32 version (1), u64 rows,
u64 cols, then rows*cols IEEE-754 float32 little-endian values row-major.
Row ids go to a sibling JSONL index at ``<path>.index.jsonl`` with one
``{"row": n, "id": s}`` object per line. This mirrors the consumer side's
reader; only the format is shared, not code.
"""

import json
import struct

import numpy as np

MAGIC = b"FMAT"
VERSION = 1
INDEX_SUFFIX = ".index.jsonl"


def write_fmat(values: np.ndarray, row_ids, path) -> None:
    values = np.ascontiguousarray(values, dtype="<f4")
    if values.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {values.shape}")
    if len(row_ids) != values.shape[0]:
        raise ValueError("row ids misaligned with matrix rows")
    if not np.all(np.isfinite(values)):
        raise ValueError("refusing to write non-finite values")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<IQQ", VERSION, values.shape[0], values.shape[1]))
        fh.write(values.tobytes())
    with open(str(path) + INDEX_SUFFIX, "w", encoding="utf-8") as fh:
        for n, rid in enumerate(row_ids):
            fh.write(json.dumps({"row": n, "id": str(rid)}) + "\n")
