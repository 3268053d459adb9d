"""Flat array-dictionary checkpoints with atomic writes.

A checkpoint is an .npz of named float64 arrays.  Nested structures (network
parameters, optimizer moments) are stored under dotted key prefixes by the
caller.  Writes go to a temporary file in the same directory and are renamed
into place, so a crash never leaves a truncated checkpoint behind.
"""

import os
import tempfile

import numpy as np

from .errors import CheckpointError


def save_arrays(path, arrays):
    for key, value in arrays.items():
        if not np.all(np.isfinite(value)):
            raise CheckpointError(f"refusing to save non-finite array {key!r}")
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".npz.tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            np.savez(f, **{k: np.asarray(v) for k, v in arrays.items()})
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_arrays(path):
    if not os.path.exists(path):
        raise CheckpointError(f"checkpoint not found: {path}")
    try:
        with np.load(path) as data:
            return {k: data[k].copy() for k in data.files}
    except CheckpointError:
        raise
    except Exception as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}")


def split_prefix(arrays, prefix):
    """Sub-dictionary under 'prefix.' with the prefix stripped."""
    head = prefix + "."
    return {k[len(head):]: v for k, v in arrays.items() if k.startswith(head)}


def join_prefix(arrays, prefix):
    return {f"{prefix}.{k}": v for k, v in arrays.items()}
