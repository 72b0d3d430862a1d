"""Counter-based splittable random source shared by every sampler.

All randomness is a pure function of (master seed, replication index,
position), built from the splitmix64 finalizer over 64-bit keys:

* replication r gets ``rep_key = mix64(master + (r+1) * GAMMA)``;
* the r-th key stream and the r-th tree get domain-separated sub-keys;
* the i-th data key is ``u01(mix64(keys_key + i * GAMMA))``;
* tree nodes carry heap-style keys (root = tree_key, children
  ``2k+1`` / ``2k+2`` mod 2^64) and an unoccupied node's fresh pivot is
  ``u01(mix64(node_key))``.

Because draws are keyed by position rather than by draw order, results
are bit-reproducible regardless of traversal order, worker count, or
how far a tree is extended: refining the pruning width only adds nodes,
it never changes the values already drawn.

The numba kernels reimplement these few lines with the same wrapping
semantics; a test asserts bit-equality between the two paths.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MASK64 = 0xFFFFFFFFFFFFFFFF
GAMMA = 0x9E3779B97F4A7C15  # golden-ratio increment of splitmix64

# default master seed for bare invocations (documented in the CLI help)
DEFAULT_SEED = 0x5EEDC0DE20120126


def mix64(z: int) -> int:
    """splitmix64 finalizer: a bijective 64-bit mixer."""
    z = (z + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def u01(bits: int) -> float:
    """Map 64 random bits to a double strictly inside (0, 1)."""
    return ((bits >> 11) + 0.5) * 2.0**-53


def derive(key: int, index: int) -> int:
    """index-th sub-key of a key (domain separation / splitting)."""
    return mix64((key + (index + 1) * GAMMA) & MASK64)


def left_key(key: int) -> int:
    return (key + key + 1) & MASK64


def right_key(key: int) -> int:
    return (key + key + 2) & MASK64


def node_uniform(node_key: int) -> float:
    """Fresh pivot position for an unoccupied tree node."""
    return u01(mix64(node_key))


@dataclass(frozen=True)
class ReplicationStream:
    """Deterministic random source for one replication.

    ``key(i)`` is the i-th data key; ``tree_key`` seeds the node-keyed
    draws of the limit-series evaluation on the same probability space.
    """

    master_seed: int
    rep: int

    @property
    def rep_key(self) -> int:
        return derive(self.master_seed & MASK64, self.rep)

    @property
    def keys_key(self) -> int:
        return derive(self.rep_key, 0)

    @property
    def tree_key(self) -> int:
        return derive(self.rep_key, 1)

    def key(self, i: int) -> float:
        return u01(mix64((self.keys_key + i * GAMMA) & MASK64))

    def keys(self, n: int) -> list[float]:
        return [self.key(i) for i in range(n)]


# vectorized counterparts on uint64 arrays (wrapping is numpy's native
# unsigned behaviour, identical to the masked scalar arithmetic above)

_G = np.uint64(GAMMA)


def mix64_vec(z: np.ndarray) -> np.ndarray:
    z = z + np.uint64(0x9E3779B97F4A7C15)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def u01_vec(bits: np.ndarray) -> np.ndarray:
    return ((bits >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


def rep_keys_vec(master_seed: int, reps: np.ndarray) -> np.ndarray:
    """rep_key for an array of replication indices."""
    return mix64_vec(
        np.uint64(master_seed & MASK64) + (reps.astype(np.uint64) + np.uint64(1)) * _G
    )


def derive_vec(keys: np.ndarray, index: int) -> np.ndarray:
    return mix64_vec(keys + np.uint64(((index + 1) * GAMMA) & MASK64))


def data_keys_vec(keys_keys: np.ndarray, n: int) -> np.ndarray:
    """(reps, n) array of data keys for an array of per-rep key streams."""
    idx = np.arange(n, dtype=np.uint64) * _G
    return u01_vec(mix64_vec(keys_keys[:, None] + idx[None, :]))
