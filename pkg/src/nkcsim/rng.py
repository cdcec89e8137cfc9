"""Per-run random streams derived from a master seed.

Each run gets its own PCG64 generator seeded by a 64-bit BLAKE2b digest of
``(master_seed, cell_id, run_index)``. Streams never depend on execution
order, so results are identical for any number of workers.
"""
from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass

import numpy as np

GENERATOR_ID = "numpy.PCG64 seeded by blake2b-64(master_seed, cell_id, run_index)"

_U64 = (1 << 64) - 1


def derive_seed(master_seed: int, cell_id: str, run_index: int) -> int:
    if not 0 <= master_seed <= _U64:
        raise ValueError(f"master seed must be an unsigned 64-bit integer, got {master_seed}")
    h = hashlib.blake2b(digest_size=8, person=b"nkcsim-run")
    h.update(struct.pack("<Q", master_seed))
    h.update(cell_id.encode("utf-8"))
    h.update(b"\x00")
    h.update(struct.pack("<Q", run_index))
    return int.from_bytes(h.digest(), "little")


def run_stream(master_seed: int, cell_id: str, run_index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(derive_seed(master_seed, cell_id, run_index)))


@dataclass(frozen=True)
class RngPolicy:
    master_seed: int
    cell_id: str | None = None  # None: derived from the task configuration

    def stream(self, cell_id: str, run_index: int) -> np.random.Generator:
        return run_stream(self.master_seed, cell_id, run_index)
