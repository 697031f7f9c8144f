"""Small shared numeric helpers."""

from __future__ import annotations

import os

import numpy as np

from .errors import DataError


def open_for_read(path: str):
    """Open a text file, mapping OS errors onto DataError."""
    try:
        return open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot open {path!r}: {exc}") from exc

_GOLD = np.uint64(0x9E3779B97F4A7C15)
_INV53 = 1.0 / (1 << 53)


def worker_count() -> int:
    """Worker cap from GCOMB_THREADS (0 or unset means auto)."""
    raw = os.environ.get("GCOMB_THREADS", "0")
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n <= 0:
        n = os.cpu_count() or 1
    return max(1, n)


def mix64(x: np.ndarray | np.uint64) -> np.ndarray | np.uint64:
    """SplitMix64 finalizer; uint64 in, uint64 out, vectorized.

    Relies on modular uint64 arithmetic, so overflow is the point."""
    x = np.uint64(x) if np.isscalar(x) else x.astype(np.uint64, copy=True)
    with np.errstate(over="ignore"):
        x ^= x >> np.uint64(30)
        x *= np.uint64(0xBF58476D1CE4E5B9)
        x ^= x >> np.uint64(27)
        x *= np.uint64(0x94D049BB133111EB)
        x ^= x >> np.uint64(31)
    return x

def hash_unit(key: np.ndarray) -> np.ndarray:
    """Map uint64 keys to uniform floats in [0, 1)."""
    return (mix64(key) >> np.uint64(11)) * _INV53


def stream_keys(seed: int, salt: int, count: int) -> np.ndarray:
    """Independent uint64 stream keys for simulations 0..count-1."""
    with np.errstate(over="ignore"):
        base = mix64(
            np.uint64(seed & 0xFFFFFFFFFFFFFFFF)
            ^ mix64(np.uint64(salt & 0xFFFFFFFFFFFFFFFF) + _GOLD)
        )
        keys = base + np.arange(count, dtype=np.uint64) * _GOLD
    return mix64(keys)


def ragged_arcs(indptr: np.ndarray, nodes: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Concatenated arc indices for ``nodes`` plus per-node counts."""
    counts = (indptr[nodes + 1] - indptr[nodes]).astype(np.int64)
    total = int(counts.sum())
    if total == 0:
        return np.empty(0, dtype=np.int64), counts
    starts = indptr[nodes]
    reps = np.repeat(starts - (np.cumsum(counts) - counts), counts)
    return reps + np.arange(total, dtype=np.int64), counts


def segment_sums(values: np.ndarray, counts: np.ndarray) -> np.ndarray:
    """Sum ``values`` in consecutive segments of the given lengths."""
    offsets = np.zeros(counts.shape[0], dtype=np.int64)
    np.cumsum(counts[:-1], out=offsets[1:])
    padded = np.concatenate([values, [values.dtype.type(0)]])
    return np.add.reduceat(padded, offsets) * (counts > 0)
