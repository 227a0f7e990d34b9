"""Counter-based random streams.

Every draw in a run is addressed by ``(master_seed, stream_id)`` where the
stream id is a 64-bit hash of ``(domain, n, replicate)``.  The pair is used
as the Philox key, so a stream yields the same numbers no matter which
thread consumes it or in what order streams are opened.
"""

from __future__ import annotations

import hashlib

import numpy as np

DOMAINS = ("dev", "val", "tune")
_MASK64 = (1 << 64) - 1


def stream_id(domain: str, n: int = 0, replicate: int = 0) -> int:
    if domain not in DOMAINS:
        raise ValueError(f"unknown stream domain {domain!r}")
    digest = hashlib.sha256(f"{domain}:{int(n)}:{int(replicate)}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


def generator(master_seed: int, stream: int) -> np.random.Generator:
    key = np.array([int(master_seed) & _MASK64, int(stream) & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def stream_generator(master_seed: int, domain: str, n: int = 0, replicate: int = 0) -> np.random.Generator:
    return generator(master_seed, stream_id(domain, n, replicate))


def derived_seed(*parts) -> int:
    """Stable 64-bit seed from arbitrary printable parts (bootstrap, strategy seeds)."""
    text = ":".join(str(p) for p in parts)
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "little")
