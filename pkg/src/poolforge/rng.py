"""Deterministic seed fan-out.

All randomness in the toolkit flows from a single top-level seed. Child
seeds are derived per (topic, purpose, round) by hashing the master seed
together with string labels, so adding or reordering work units never
shifts the random streams of unrelated units.

Splitting rule: ``child = sha256("{master}|{label}|{label}|...") mod 2**63``.
"""

import hashlib

import numpy as np


def child_seed(master: int, *labels) -> int:
    """Derive a child seed from a master seed and a label path."""
    key = "|".join([str(int(master))] + [str(l) for l in labels])
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") % (2**63)


def child_rng(master: int, *labels) -> np.random.Generator:
    """Generator seeded via :func:`child_seed`."""
    return np.random.default_rng(child_seed(master, *labels))
