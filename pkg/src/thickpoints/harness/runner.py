"""Replica execution with deterministic seed splitting.

Each replica draws its generator from SeedSequence([master_seed, replica]),
a counter-based derivation, so results are independent of worker count and
execution order; merging sorts by replica index first.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor, ThreadPoolExecutor

import numpy as np

from .stats import EstimatorSummary


def replica_rng(master_seed, replica):
    return np.random.default_rng(np.random.SeedSequence([master_seed, replica]))


def _run_chunk(args):
    config, setup, fn, replicas = args
    state = setup(config) if setup is not None else None
    out = []
    for rep in replicas:
        rng = replica_rng(config.seed, rep)
        try:
            out.append((rep, fn(state, config, rep, rng)))
        except Exception as exc:
            raise RuntimeError(
                f"replica {rep} failed under master seed {config.seed}: {exc}"
            ) from exc
    return out


def run_replicas(config, fn, setup=None, n_replicas=None):
    """Evaluate fn(state, config, replica, rng) for every replica.

    Returns results ordered by replica index.  executor "serial" runs in
    process; "thread"/"process" split replicas into per-worker chunks.  A
    worker failure surfaces the failing replica seed for exact replay.
    """
    n = config.replicas if n_replicas is None else n_replicas
    replicas = list(range(n))
    if not replicas:
        return []
    workers = max(1, config.workers)
    if config.executor == "serial" or workers == 1:
        chunks = [replicas]
    else:
        size = (len(replicas) + workers - 1) // workers
        chunks = [replicas[i:i + size] for i in range(0, len(replicas), size)]
    jobs = [(config, setup, fn, chunk) for chunk in chunks]
    results = []
    if config.executor == "process" and len(chunks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for part in pool.map(_run_chunk, jobs):
                results.extend(part)
    elif config.executor == "thread" and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for part in pool.map(_run_chunk, jobs):
                results.extend(part)
    else:
        for job in jobs:
            results.extend(_run_chunk(job))
    results.sort(key=lambda pair: pair[0])
    return [value for _, value in results]


def summarize(values):
    return EstimatorSummary.from_values(np.asarray(list(values), dtype=float))
