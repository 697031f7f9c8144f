"""Deterministic seed derivation.

Every randomized component receives a seed derived from a single master
seed plus string labels, so whole pipelines are reproducible end to end
and independent sub-tasks (greedy runs, simulations, episodes) can run
concurrently without sharing RNG state.  Python's builtin ``hash`` is
salted per process and must not be used here.
"""

from __future__ import annotations

import hashlib


def derive_seed(master: int, *labels: object) -> int:
    """Map (master seed, labels...) to a stable 64-bit seed."""
    h = hashlib.blake2b(digest_size=8)
    h.update(str(int(master)).encode())
    for lab in labels:
        h.update(b"\x1f")
        h.update(str(lab).encode())
    return int.from_bytes(h.digest(), "little")
