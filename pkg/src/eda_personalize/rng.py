"""Deterministic, platform-independent random number derivation.

Every random choice in this package flows through :func:`derive_rng`, which
keys a 64-bit counter-based Philox generator with a ``SeedSequence`` built
from the base seed plus a path of context labels (subject id, question,
budget, replica, purpose tag). Philox streams are reproducible across
operating systems and numpy versions, so two runs with the same base seed
and the same context path draw identical values no matter where they run.

Strings are folded into the entropy pool as the first 8 bytes of their
SHA-256 digest; integers are used as-is.
"""

from __future__ import annotations

import hashlib

import numpy as np


def _as_entropy(part: int | str) -> int:
    if isinstance(part, bool):  # bool is an int subclass; reject to avoid surprises
        raise TypeError("rng context parts must be int or str, not bool")
    if isinstance(part, int):
        return part & 0xFFFFFFFFFFFFFFFF
    if isinstance(part, str):
        digest = hashlib.sha256(part.encode("utf-8")).digest()
        return int.from_bytes(digest[:8], "little")
    raise TypeError(f"rng context parts must be int or str, got {type(part).__name__}")


def derive_rng(*parts: int | str) -> np.random.Generator:
    """Return a Philox generator keyed by the given context path."""
    if not parts:
        raise ValueError("derive_rng needs at least one context part")
    entropy = [_as_entropy(p) for p in parts]
    key = np.random.SeedSequence(entropy).generate_state(2, np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def derive_seed(*parts: int | str) -> int:
    """Collapse a context path to a single reproducible 63-bit seed."""
    entropy = [_as_entropy(p) for p in parts]
    return int(np.random.SeedSequence(entropy).generate_state(1, np.uint64)[0] >> 1)


def subset_fingerprint(start_indices) -> str:
    """Order-independent hex fingerprint of a set of window start indices.

    Used to assert that the ssl and scratch arms of one experiment cell
    really trained on the same sampled windows.
    """
    joined = ",".join(str(int(s)) for s in sorted(int(i) for i in start_indices))
    return hashlib.sha256(joined.encode("ascii")).hexdigest()[:16]
