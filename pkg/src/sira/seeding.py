"""Deterministic random-stream derivation.

All randomness in the package flows through named substreams split off a
single 64-bit root seed with a fixed counter scheme:

    SeedSequence(seed, spawn_key=(purpose, index...))

Purpose codes are module-level constants below. Round-indexed streams
append the round number, experiment streams append the grid index. The
scheme guarantees that results depend only on (seed, purpose, index),
never on scheduling order or worker count, and that distinct purposes
never share a stream.

Generators use the counter-based Philox bit generator, which is cheap to
spawn in bulk and stable across platforms.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError

STREAM_VALUATIONS = 0
STREAM_OPPONENTS = 1
STREAM_TIES = 2
STREAM_EXPERIMENT = 3

_SEED_MAX = 2**64


def check_seed(seed: int) -> int:
    """Validate that seed is a 64-bit unsigned integer and return it."""
    if not isinstance(seed, (int, np.integer)) or isinstance(seed, bool):
        raise ConfigError(f"seed must be an integer, got {seed!r}")
    if not 0 <= seed < _SEED_MAX:
        raise ConfigError(f"seed out of range [0, 2**64): {seed}")
    return int(seed)


def substream(seed: int, *key: int) -> np.random.Generator:
    """Return the generator for the substream named by the key tuple."""
    check_seed(seed)
    seq = np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(seq))


def child_seed(seed: int, *key: int) -> int:
    """Derive a 64-bit child seed, used to key nested engine runs."""
    check_seed(seed)
    seq = np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in key))
    return int(seq.generate_state(1, dtype=np.uint64)[0])


def fresh_seed() -> int:
    """Draw a root seed from OS entropy (for CLI runs without --seed)."""
    return int(np.random.SeedSequence().generate_state(1, dtype=np.uint64)[0])
