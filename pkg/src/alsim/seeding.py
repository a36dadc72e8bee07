"""Deterministic derivation of named random substreams from one master seed.

One experiment seed fans out into independent generators for parameter
initialisation, batch shuffling, stratified sampling, and every randomized
acquisition call. The derivation rule is fixed so that runs reproduce across
platforms and processes:

    child_entropy = sha256("alsim|<master>|<name>|<name>|...") -> first 16 bytes
    generator     = numpy PCG64 seeded with SeedSequence(child_entropy)

Names are joined with "|" after str() conversion, so integers and strings can
be mixed (e.g. ``derive_rng(seed, "train", iteration)``).
"""

import hashlib

import numpy as np


def derive_seed(master: int, *names) -> int:
    """Return a 128-bit integer entropy value for the named substream."""
    tag = "|".join(["alsim", str(master), *[str(n) for n in names]])
    digest = hashlib.sha256(tag.encode("utf-8")).digest()
    return int.from_bytes(digest[:16], "little")


def derive_rng(master: int, *names) -> np.random.Generator:
    """Return a fresh PCG64 generator for the named substream of ``master``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(derive_seed(master, *names))))
