"""Hierarchical Bayesian logistic regression across independent groups.

M regression groups share a fixed Gaussian hyperprior on their coefficient
vectors.  With the hyperprior fixed, the group coefficients are
conditionally independent, so a Gibbs sweep may update all groups
concurrently.  Two worker mappings are offered:

* COARSE  workers are spread across groups (static round-robin by group
          index); each group's likelihood runs single-worker.
* FINE    groups are processed sequentially; each group's likelihood is
          row-parallel across the policy's workers.

Each group consumes an independent uniform stream keyed by
(master seed, group index), so draws never depend on the mapping, the
worker count, or scheduling order -- with one worker the two modes are
bit-identical, and a single group's chain reproduces `sampler.run_chain`
run on the same stream.

The per-sweep `neval` knob issues extra full log-likelihood evaluations
per group before its update, mimicking samplers that touch the group's
data several times per iteration (the data-reuse axis of the mapping
trade-off).  It consumes no randomness and therefore never changes draws.
"""

from __future__ import annotations

import statistics
import time
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import parallel
from .glm import DesignMatrix, ExecPlan, GlmWorkspace, Strategy, loglike, synthetic_logistic
from .perf import BenchRecord
from .rng import BufferKind, DeviateBuffer
from .sampler import ChainConfig, GaussianPrior, SliceStats, slice_sample_coord

__all__ = [
    "MappingMode", "MappingPolicy", "HbDataset", "HbState",
    "synthetic_hb_dataset", "hb_sweep", "hb_benchmark",
]


class MappingMode(Enum):
    COARSE = "coarse"
    FINE = "fine"


@dataclass(frozen=True)
class MappingPolicy:
    mode: MappingMode
    workers: int = 1
    neval: int = 1

    def __post_init__(self):
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.neval < 1:
            raise ValueError("neval must be >= 1")


class HbDataset:
    """M design matrices sharing K; group sizes may differ."""

    def __init__(self, groups: list[DesignMatrix]):
        if not groups:
            raise ValueError("need at least one group")
        k = groups[0].n_cols
        for m, g in enumerate(groups):
            if g.n_cols != k:
                raise ValueError(f"group {m} has {g.n_cols} columns, expected {k}")
        self.groups = list(groups)

    @property
    def m_groups(self) -> int:
        return len(self.groups)

    @property
    def n_cols(self) -> int:
        return self.groups[0].n_cols

    @property
    def n_rows_total(self) -> int:
        return sum(g.n_rows for g in self.groups)


def synthetic_hb_dataset(m_groups: int, n_cols: int, navg: int, seed: int = 0,
                         prior: GaussianPrior | None = None):
    """Uniform-size groups with beta_m drawn from the hyperprior.

    Returns (HbDataset, betas_true) with betas_true of shape (M, K).
    """
    if prior is None:
        prior = GaussianPrior.isotropic(n_cols)
    groups = []
    betas = np.empty((m_groups, n_cols))
    for m in range(m_groups):
        ss = np.random.SeedSequence(seed, spawn_key=(m,))
        gen = np.random.default_rng(ss)
        beta_m = prior.mu + prior.sigma * gen.standard_normal(n_cols)
        child_seed = int(gen.integers(2 ** 63))
        data, _ = synthetic_logistic(navg, n_cols, seed=child_seed, beta=beta_m)
        groups.append(data)
        betas[m] = beta_m
    return HbDataset(groups), betas


class HbState:
    """Per-group workspaces and RNG streams persisting across sweeps."""

    def __init__(self, ds: HbDataset, prior: GaussianPrior, seed: int = 0,
                 buffer_capacity: int = 8192):
        if prior.mu.shape != (ds.n_cols,):
            raise ValueError("prior dimension does not match dataset")
        self.workspaces = [GlmWorkspace(g, prior.mu) for g in ds.groups]
        self.buffers = [DeviateBuffer(BufferKind.UNIFORM01, buffer_capacity, seed, owner=(m,))
                        for m in range(ds.m_groups)]
        self.total_evals = 0

    @property
    def betas(self) -> list[np.ndarray]:
        return [ws.beta_current.copy() for ws in self.workspaces]


def _sweep_group(group: DesignMatrix, ws: GlmWorkspace, buf: DeviateBuffer,
                 prior: GaussianPrior, policy: MappingPolicy, cfg: ChainConfig,
                 inner_plan: ExecPlan) -> int:
    stats = SliceStats()
    for _ in range(policy.neval - 1):
        loglike(group, ws.beta_current, inner_plan)
    for k in range(group.n_cols):
        slice_sample_coord(ws, group, prior, k, buf, cfg, inner_plan, stats=stats)
    return stats.evals


def hb_sweep(ds: HbDataset, state: HbState, prior: GaussianPrior,
             policy: MappingPolicy, slice_width: float = 1.0,
             slice_max_steps: int = 50) -> list[np.ndarray]:
    """One Gibbs sweep: every group's coefficient vector updated once.

    Returns the post-sweep coefficient vectors (copies).
    """
    cfg = ChainConfig(n_iter=1, n_burnin=0, slice_width=slice_width,
                      slice_max_steps=slice_max_steps)
    if policy.mode is MappingMode.COARSE:
        inner = ExecPlan(Strategy.PLF, workers=1)
        assignment = [list(range(ds.m_groups))[w::policy.workers]
                      for w in range(policy.workers)]

        def task(groups):
            def run():
                evals = 0
                for m in groups:
                    evals += _sweep_group(ds.groups[m], state.workspaces[m],
                                          state.buffers[m], prior, policy, cfg, inner)
                return evals
            return run

        per_worker = parallel.run_region([task(g) for g in assignment])
        state.total_evals += sum(per_worker)
    else:
        inner = ExecPlan(Strategy.PLF, workers=policy.workers)
        for m in range(ds.m_groups):
            state.total_evals += _sweep_group(ds.groups[m], state.workspaces[m],
                                              state.buffers[m], prior, policy, cfg, inner)
    return state.betas


def hb_benchmark(ds: HbDataset, prior: GaussianPrior, policies: list[MappingPolicy],
                 n_sweeps: int = 3, reps: int = 3, seed: int = 0,
                 clock_ghz: float = 2.6, slice_width: float = 1.0) -> list[BenchRecord]:
    """Time hb_sweep under each policy; one record per policy.

    Every repetition restarts from a fresh state with the same seed, so the
    draw streams are identical across repetitions and across policies with
    equivalent schedules (only the timings vary).  The declared `evals` is
    n_sweeps * neval (the per-group full-likelihood passes), making cpr a
    cycles-per-group-row throughput figure.
    """
    records = []
    for policy in policies:
        walls = []
        for _ in range(reps):
            state = HbState(ds, prior, seed=seed)
            t0 = time.perf_counter()
            for _ in range(n_sweeps):
                hb_sweep(ds, state, prior, policy, slice_width=slice_width)
            walls.append(time.perf_counter() - t0)
        label = f"hb/{policy.mode.value}/neval{policy.neval}"
        records.append(BenchRecord.from_wall(
            label=label, n_rows=ds.n_rows_total, n_cols=ds.n_cols,
            workers=policy.workers, n_chunks=1,
            wall_seconds=statistics.median(walls),
            evals=n_sweeps * policy.neval, clock_ghz=clock_ghz))
    return records
