"""Deterministic seed derivation: every random draw in the pipeline flows
from one base seed through named sub-streams."""

import hashlib


def derive_seed(base: int, *names: str) -> int:
    """Stable 64-bit sub-seed for the given stream names."""
    payload = f"{base}|" + "|".join(names)
    digest = hashlib.sha256(payload.encode()).digest()
    return int.from_bytes(digest[:8], "big")
