"""Vectorized E-step machinery shared by the Model 1 family.

A table's entries are laid out in canonical (e, f) order as one flat
parameter vector theta. For every sentence pair we precompute the slot
index of each (target row, source position) cell, so an E-step is a
gather, a column normalization, and a bincount scatter per chunk of
pairs.

Expected counts are accumulated per fixed-size chunk and the chunk
results are merged in ascending chunk order. The chunk size never
depends on the worker count, so results are bitwise identical no matter
how many processes run the chunks.
"""

from __future__ import annotations

import math
from multiprocessing import get_context
from typing import Optional, Protocol

import numpy as np

from .corpus import Bitext
from .errors import NumericError
from .ttable import NULL_ID, TranslationTable

CHUNK_PAIRS = 1024


class PriorProvider(Protocol):
    def matrix(self, m: int, n: int, use_null: bool) -> np.ndarray: ...


class PackedCorpus:
    """Per-pair slot indices of a bitext against a fixed table support."""

    def __init__(self, bitext: Bitext, table: TranslationTable, use_null: bool):
        self.use_null = use_null
        row_slots: dict[int, dict[int, int]] = {}
        row_keys: list[int] = []
        row_starts: list[int] = []
        slot = 0
        for e in sorted(table.rows):
            fs = sorted(table.rows[e])
            row_keys.append(e)
            row_starts.append(slot)
            row_slots[e] = {f: slot + k for k, f in enumerate(fs)}
            slot += len(fs)
        self.n_slots = slot
        self.miss = slot  # uncovered cells gather probability 0.0
        self.row_keys = row_keys
        self.row_starts = np.asarray(row_starts, dtype=np.int64)
        self.row_fs = {e: sorted(table.rows[e]) for e in row_keys}

        empty: dict[int, int] = {}
        self.pairs = bitext.pairs
        self.pair_idx: list[np.ndarray] = []
        self.pair_shape: list[tuple[int, int]] = []
        miss = self.miss
        for pair in bitext.pairs:
            src = pair.source_ids
            rows: list[int] = list(pair.target_ids)
            if use_null:
                rows.append(NULL_ID)
            cells: list[int] = []
            for e in rows:
                srow = row_slots.get(e, empty)
                get = srow.get
                cells.extend(get(f, miss) for f in src)
            idx = np.asarray(cells, dtype=np.int64)
            self.pair_idx.append(idx)
            self.pair_shape.append((len(rows), pair.m))

    def __len__(self) -> int:
        return len(self.pair_idx)

    def theta_from(self, table: TranslationTable) -> np.ndarray:
        theta = np.empty(self.n_slots + 1)
        pos = 0
        for e in self.row_keys:
            row = table.rows[e]
            for f in self.row_fs[e]:
                theta[pos] = row[f]
                pos += 1
        theta[self.miss] = 0.0
        return theta

    def table_from(self, theta: np.ndarray) -> TranslationTable:
        rows: dict[int, dict[int, float]] = {}
        values = theta.tolist()
        pos = 0
        for e in self.row_keys:
            fs = self.row_fs[e]
            rows[e] = dict(zip(fs, values[pos : pos + len(fs)]))
            pos += len(fs)
        return TranslationTable(rows)

    def normalize_counts(self, counts: np.ndarray, floor: float) -> np.ndarray:
        """M-step: floor expected counts, renormalize each target row."""
        floored = np.maximum(counts, floor)
        row_sums = np.add.reduceat(floored, self.row_starts)
        lengths = np.diff(np.append(self.row_starts, self.n_slots))
        theta = np.empty(self.n_slots + 1)
        theta[: self.n_slots] = floored / np.repeat(row_sums, lengths)
        theta[self.miss] = 0.0
        return theta


def chunk_bounds(n_pairs: int) -> list[tuple[int, int]]:
    return [(lo, min(lo + CHUNK_PAIRS, n_pairs)) for lo in range(0, n_pairs, CHUNK_PAIRS)]


def _chunk_counts(
    packed: PackedCorpus,
    theta: np.ndarray,
    lo: int,
    hi: int,
    prior: Optional[PriorProvider],
    log_eps: float,
) -> tuple[np.ndarray, float]:
    """Expected counts and log-likelihood contribution of pairs [lo, hi)."""
    ll = 0.0
    idx_parts: list[np.ndarray] = []
    gamma_parts: list[np.ndarray] = []
    use_null = packed.use_null
    for k in range(lo, hi):
        idx = packed.pair_idx[k]
        rows, m = packed.pair_shape[k]
        probs = theta[idx].reshape(rows, m)
        if prior is not None:
            n = rows - 1 if use_null else rows
            probs = probs * prior.matrix(m, n, use_null)
        denom = probs.sum(axis=0)
        if denom.min() <= 0.0:
            j = int(np.argmin(denom))
            f = packed.pairs[k].source_ids[j]
            raise NumericError(
                f"pair {k + 1}: source token id {f} at position {j} has zero "
                "total probability under the table"
            )
        gamma = probs / denom
        ll += float(np.log(denom).sum()) + log_eps
        if prior is None:
            ll -= m * math.log(rows)
        idx_parts.append(idx)
        gamma_parts.append(gamma.reshape(-1))
    if not idx_parts:
        return np.zeros(packed.n_slots), ll
    counts = np.bincount(
        np.concatenate(idx_parts),
        weights=np.concatenate(gamma_parts),
        minlength=packed.n_slots + 1,
    )
    return counts[: packed.n_slots], ll


_POOL_STATE: tuple | None = None


def _pool_init(packed, prior, log_eps):
    global _POOL_STATE
    _POOL_STATE = (packed, prior, log_eps)


def _pool_chunk(args):
    lo, hi, theta = args
    packed, prior, log_eps = _POOL_STATE
    return _chunk_counts(packed, theta, lo, hi, prior, log_eps)


class EStepRunner:
    """Runs chunked E-steps, optionally over a process pool.

    The pool is created lazily on the first parallel call and must be
    closed via the context-manager protocol or close().
    """

    def __init__(
        self,
        packed: PackedCorpus,
        prior: Optional[PriorProvider] = None,
        log_eps: float = 0.0,
        jobs: int = 1,
    ):
        self.packed = packed
        self.prior = prior
        self.log_eps = log_eps
        self.jobs = max(1, jobs)
        self.bounds = chunk_bounds(len(packed))
        self._pool = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def close(self):
        if self._pool is not None:
            self._pool.close()
            self._pool.join()
            self._pool = None

    def expected_counts(self, theta: np.ndarray) -> tuple[np.ndarray, float]:
        if self.jobs > 1 and len(self.bounds) > 1:
            if self._pool is None:
                ctx = get_context("fork")
                self._pool = ctx.Pool(
                    processes=self.jobs,
                    initializer=_pool_init,
                    initargs=(self.packed, self.prior, self.log_eps),
                )
            tasks = [(lo, hi, theta) for lo, hi in self.bounds]
            chunksize = max(1, len(tasks) // self.jobs)
            results = self._pool.map(_pool_chunk, tasks, chunksize=chunksize)
        else:
            results = [
                _chunk_counts(self.packed, theta, lo, hi, self.prior, self.log_eps)
                for lo, hi in self.bounds
            ]
        total = np.zeros(self.packed.n_slots)
        ll = 0.0
        for counts, part_ll in results:  # ascending chunk order
            total += counts
            ll += part_ll
        return total, ll
