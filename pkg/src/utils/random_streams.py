"""
Deterministic random streams.

Every random draw in the package comes from a Philox (counter-based)
generator keyed by the run seed plus a tuple of labels, so a sample can be
replayed on its own from (seed, suite, sample index).
"""

import hashlib
from typing import Union

import numpy as np
from numpy.random import Generator, Philox, SeedSequence

Label = Union[int, str]


def _label_words(label: Label) -> int:
    if isinstance(label, (int, np.integer)):
        return int(label) & 0xFFFFFFFF
    digest = hashlib.sha256(str(label).encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "little")


def make_seed(seed: int, *labels: Label) -> SeedSequence:
    """Seed sequence for a run seed and a path of labels"""
    if seed < 0:
        raise ValueError("seed must be non-negative")
    entropy = [seed & 0xFFFFFFFF, (seed >> 32) & 0xFFFFFFFF]
    entropy.extend(_label_words(label) for label in labels)
    return SeedSequence(entropy)


def derive_rng(seed: int, *labels: Label) -> Generator:
    """Independent counter-based generator for (seed, labels...)"""
    return Generator(Philox(make_seed(seed, *labels)))


def stream_seed(seed: int, *labels: Label) -> int:
    """64-bit integer identifying a derived stream, recorded in reports for replay"""
    state = make_seed(seed, *labels).generate_state(2, dtype=np.uint32)
    return int(state[0]) | (int(state[1]) << 32)
