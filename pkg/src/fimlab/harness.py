"""Deterministic replication runner.

Every replication is a pure function of its index (random numbers come from
``stream_for(seed, ..., index, role)``), results are returned in index
order, and reductions happen afterwards in that order. The worker count
therefore never changes the output.
"""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .exceptions import FimlabError, ReplicationFailure

RECOVERABLE = (FimlabError, ValueError, ArithmeticError, np.linalg.LinAlgError)


@dataclass(frozen=True)
class Failed:
    """Marker returned in place of a replication result."""

    index: int
    kind: str
    message: str = ""


class Guarded:
    """Wrap a replication function so recoverable errors become ``Failed``."""

    def __init__(self, fn):
        self.fn = fn

    def __call__(self, index):
        try:
            return self.fn(index)
        except RECOVERABLE as exc:
            return Failed(index, type(exc).__name__, str(exc))


def resolve_threads(threads):
    if threads is None or threads == 0:
        return os.cpu_count() or 1
    if threads < 0:
        raise ValueError("threads must be non-negative")
    return int(threads)


def parallel_map(fn, indices, threads=1):
    """Ordered map of a picklable callable over ``indices``."""
    indices = list(indices)
    threads = resolve_threads(threads)
    if threads <= 1 or len(indices) < 2:
        return [fn(i) for i in indices]
    chunk = max(1, len(indices) // (threads * 8))
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, indices, chunksize=chunk))


def replicate(fn, count, threads=1, max_failure_rate=0.01, label="replications"):
    """Run ``fn(0..count-1)``; split successes from failures.

    Returns ``(results, failures)`` where ``results`` keeps index order and
    ``failures`` is a list of ``Failed`` markers.

    Raises:
        ReplicationFailure: if the failed fraction exceeds ``max_failure_rate``.
    """
    out = parallel_map(Guarded(fn), range(count), threads)
    ok = [r for r in out if not isinstance(r, Failed)]
    bad = [r for r in out if isinstance(r, Failed)]
    if count and len(bad) > max_failure_rate * count:
        kinds = failure_counts(bad)
        raise ReplicationFailure(
            f"{len(bad)} of {count} {label} failed ({kinds})", failures=len(bad), total=count
        )
    return ok, bad


def failure_counts(failures):
    counts = {}
    for f in failures:
        counts[f.kind] = counts.get(f.kind, 0) + 1
    return dict(sorted(counts.items()))
