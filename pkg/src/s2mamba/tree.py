"""Generic traversal of parameter containers.

Parameter sets are plain dataclasses whose fields are numpy arrays, nested
dataclasses, or lists thereof. These helpers give the optimizer, the
checkpoint writer and the finite-difference checker a single flat view with
stable, declaration-ordered paths.
"""

from __future__ import annotations

import dataclasses

import numpy as np


def iter_arrays(obj, prefix=""):
    """Yield (path, array) pairs in deterministic declaration order."""
    if isinstance(obj, np.ndarray):
        yield prefix, obj
    elif dataclasses.is_dataclass(obj):
        for f in dataclasses.fields(obj):
            sub = prefix + "." + f.name if prefix else f.name
            yield from iter_arrays(getattr(obj, f.name), sub)
    elif isinstance(obj, (list, tuple)):
        for i, item in enumerate(obj):
            yield from iter_arrays(item, f"{prefix}[{i}]")
    # scalars / config values are not parameters


def flatten(obj):
    """List of (path, array) pairs."""
    return list(iter_arrays(obj))


def map_arrays(fn, obj):
    """Rebuild the same structure with fn applied to every array."""
    if isinstance(obj, np.ndarray):
        return fn(obj)
    if dataclasses.is_dataclass(obj):
        kwargs = {
            f.name: map_arrays(fn, getattr(obj, f.name))
            for f in dataclasses.fields(obj)
        }
        return type(obj)(**kwargs)
    if isinstance(obj, list):
        return [map_arrays(fn, item) for item in obj]
    if isinstance(obj, tuple):
        return tuple(map_arrays(fn, item) for item in obj)
    return obj


def zeros_like(obj):
    return map_arrays(np.zeros_like, obj)


def copy(obj):
    return map_arrays(np.copy, obj)


def add_in_place(target, other):
    """target += other, arrays matched by position."""
    for (_, dst), (_, src) in zip(iter_arrays(target), iter_arrays(other)):
        dst += src


def num_params(obj):
    return sum(int(a.size) for _, a in iter_arrays(obj))
