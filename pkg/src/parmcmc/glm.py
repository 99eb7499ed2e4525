"""Logistic-regression log-likelihood and gradient kernels.

The same two reductions,

    L(beta)   = -sum_n [ (1 - y_n) t_n + log(1 + exp(-t_n)) ],  t_n = x_n . beta
    g(beta)   = X' gf,   gf_n = y_n - 1 / (1 + exp(-t_n)),

are offered under interchangeable execution strategies that differ only in
how work is laid out over workers and caches:

* SOM          sequence of maps: a full-length X.beta intermediate is
               materialized in one parallel region, a second region runs the
               transcendental reduction over it.
* MOS          map of sequences: one region; each worker walks its rows one
               at a time with scalar math (the fully fused, cache-oblivious
               reference shape).
* PLF          partial loop fusion: one region; each worker runs the whole
               map sequence over its contiguous row block with private
               accumulators.
* PLF_CHUNKED  PLF with each worker's block processed in n_chunks
               cache-sized pieces (chunked matvec -> fused transcendental ->
               chunked transposed matvec), still merging once per worker.
* SHARDED      PLF over per-shard private row-block copies, the portable
               essence of a socket-local data split.

All strategies produce the same values up to floating-point reassociation
(<= 1e-8 relative), and a fixed plan on fixed input is bit-deterministic:
blocks are static, worker accumulators are private, and merges happen in
ascending worker order.

The differential-update fast path (GlmWorkspace / diff_loglike /
commit_update) maintains X.beta so a single-coordinate change costs O(N)
instead of O(N*K), reading only the touched column of an eagerly built
transposed copy of X.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.special import expit

from . import parallel
from .instrumentation import counters

__all__ = [
    "Strategy", "ExecPlan", "DesignMatrix", "Shard", "ShardedMatrix",
    "GradResult", "GlmWorkspace", "make_sharded", "loglike", "loglike_grad",
    "diff_loglike", "commit_update", "load_design_csv", "synthetic_logistic",
]


class Strategy(Enum):
    SOM = "som"
    MOS = "mos"
    PLF = "plf"
    PLF_CHUNKED = "plf_chunked"
    SHARDED = "sharded"


@dataclass(frozen=True)
class ExecPlan:
    """How an evaluation maps onto workers (and chunks, for PLF_CHUNKED)."""

    strategy: Strategy = Strategy.PLF
    workers: int = 1
    n_chunks: int = 1

    def __post_init__(self):
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")
        if self.n_chunks < 1:
            raise ValueError(f"n_chunks must be >= 1, got {self.n_chunks}")


class DesignMatrix:
    """Row-major N x K observation matrix with a binary response vector.

    Immutable after construction and safely shareable read-only across
    workers; the constructor copies and validates.
    """

    def __init__(self, x, y):
        x = np.ascontiguousarray(x, dtype=np.float64)
        y = np.ascontiguousarray(y, dtype=np.float64)
        if x.ndim != 2:
            raise ValueError(f"x must be 2-D, got shape {x.shape}")
        if x.shape[0] < 1 or x.shape[1] < 1:
            raise ValueError(f"need N >= 1 and K >= 1, got shape {x.shape}")
        if y.shape != (x.shape[0],):
            raise ValueError(f"y has shape {y.shape}, expected ({x.shape[0]},)")
        if not np.isfinite(x).all():
            raise ValueError("x contains non-finite entries")
        if not np.isin(y, (0.0, 1.0)).all():
            raise ValueError("y entries must be exactly 0 or 1")
        self.x = x
        self.y = y
        self.x.setflags(write=False)
        self.y.setflags(write=False)

    @property
    def n_rows(self) -> int:
        return self.x.shape[0]

    @property
    def n_cols(self) -> int:
        return self.x.shape[1]


@dataclass(frozen=True)
class Shard:
    """One contiguous row block, privately allocated."""

    x: np.ndarray
    y: np.ndarray
    row_offset: int


class ShardedMatrix:
    """Row partition of a DesignMatrix into per-shard private copies."""

    def __init__(self, shards: list[Shard], n_cols: int):
        self.shards = shards
        self._n_cols = n_cols

    @property
    def n_shards(self) -> int:
        return len(self.shards)

    @property
    def n_rows(self) -> int:
        return sum(s.x.shape[0] for s in self.shards)

    @property
    def n_cols(self) -> int:
        return self._n_cols


def make_sharded(data: DesignMatrix, n_shards: int) -> ShardedMatrix:
    """Copy contiguous, near-equal row blocks into per-shard allocations.

    Sizes differ by at most one row; the larger shards come first.
    """
    if not 1 <= n_shards <= data.n_rows:
        raise ValueError(f"n_shards must be in [1, {data.n_rows}], got {n_shards}")
    shards = []
    for start, stop in parallel.partition(data.n_rows, n_shards):
        # explicit copies: each shard owns its block, never the master array
        shards.append(Shard(
            x=data.x[start:stop].copy(),
            y=data.y[start:stop].copy(),
            row_offset=start,
        ))
    return ShardedMatrix(shards, data.n_cols)


@dataclass
class GradResult:
    """Log-likelihood value and its gradient."""

    f: float
    g: np.ndarray


# ---------------------------------------------------------------------------
# scalar/vector kernels shared by the strategies
# ---------------------------------------------------------------------------

# analytic flops per row (mul/add/div/exp/log each count 1); see instrumentation
_TR_FLOPS = 6        # (1-y)*t, softplus split, accumulate
_TR_GRAD_FLOPS = 8   # adds the sigmoid and its subtraction
_DIFF_FLOPS = 8      # fused axpy + transcendental


def _nll_sum(t: np.ndarray, y: np.ndarray) -> float:
    """sum_n (1-y)t + log(1+exp(-t)), negated.

    log(1+exp(-t)) splits into max(-t,0) + log1p(exp(-|t|)) so every lane
    stays in exact arithmetic range; the expression is straight-line over
    contiguous data.
    """
    a = np.abs(t)
    s_abs = a.sum()
    np.negative(a, out=a)
    np.exp(a, out=a)
    np.log1p(a, out=a)
    s_t = t.sum()
    return -(s_t - np.dot(y, t) + 0.5 * (s_abs - s_t) + a.sum())


def _nll_row(t: float, y: float) -> float:
    if t >= 0.0:
        lse = math.log1p(math.exp(-t))
    else:
        lse = -t + math.log1p(math.exp(t))
    return -((1.0 - y) * t + lse)


def _sigmoid_row(t: float) -> float:
    if t >= 0.0:
        return 1.0 / (1.0 + math.exp(-t))
    e = math.exp(t)
    return e / (1.0 + e)


def _check_beta(beta, n_cols: int) -> np.ndarray:
    beta = np.ascontiguousarray(beta, dtype=np.float64)
    if beta.shape != (n_cols,):
        raise ValueError(f"beta has shape {beta.shape}, expected ({n_cols},)")
    if not np.isfinite(beta).all():
        raise ValueError("beta contains non-finite entries")
    return beta


def _chunk_bounds(start: int, stop: int, n_chunks: int) -> list[tuple[int, int]]:
    """Split [start, stop) into n_chunks pieces; the last absorbs the remainder.

    n_chunks is clamped to the block's row count.
    """
    size = stop - start
    if size == 0:
        return []
    n_chunks = min(n_chunks, size)
    base = size // n_chunks
    bounds = [(start + i * base, start + (i + 1) * base) for i in range(n_chunks)]
    bounds[-1] = (bounds[-1][0], stop)
    return bounds


def _merge_scalar(partials) -> float:
    """Fold worker partials in ascending worker index (one merge per worker)."""
    counters.add_merges(len(partials))
    acc = 0.0
    for p in partials:
        acc += p
    return acc


def _merge_grad(partials, n_cols: int) -> GradResult:
    counters.add_merges(len(partials))
    f = 0.0
    g = np.zeros(n_cols)
    for pf, pg in partials:
        f += pf
        g += pg
    return GradResult(f, g)


# ---------------------------------------------------------------------------
# log-likelihood strategies
# ---------------------------------------------------------------------------

def loglike(data, beta, plan: ExecPlan = ExecPlan()) -> float:
    """L(beta) under the plan's strategy; value is strategy-invariant.

    `data` may be a DesignMatrix or a ShardedMatrix (the latter always
    evaluates shard-wise).
    """
    beta = _check_beta(beta, data.n_cols)
    counters.add_flops(data.n_rows * (2 * data.n_cols + _TR_FLOPS))
    if isinstance(data, ShardedMatrix):
        return _loglike_sharded(data, beta, plan)
    if plan.strategy is Strategy.SOM:
        return _loglike_som(data, beta, plan)
    if plan.strategy is Strategy.MOS:
        return _loglike_mos(data, beta, plan)
    if plan.strategy is Strategy.SHARDED:
        view = make_sharded(data, min(plan.workers, data.n_rows))
        return _loglike_sharded(view, beta, plan)
    return _loglike_plf(data, beta, plan)  # PLF; PLF_CHUNKED via chunk bounds


def _loglike_som(data: DesignMatrix, beta, plan) -> float:
    n = data.n_rows
    xbeta = np.empty(n)
    blocks = parallel.partition(n, plan.workers)

    def la_task(a, b):
        def run():
            xbeta[a:b] = data.x[a:b] @ beta
        return run

    parallel.run_region([la_task(a, b) for a, b in blocks])

    def tr_task(a, b):
        def run():
            return _nll_sum(xbeta[a:b], data.y[a:b])
        return run

    partials = parallel.run_region([tr_task(a, b) for a, b in blocks])
    return _merge_scalar(partials)


def _loglike_mos(data: DesignMatrix, beta, plan) -> float:
    x, y = data.x, data.y

    def task(a, b):
        def run():
            acc = 0.0
            for i in range(a, b):
                acc += _nll_row(float(np.dot(x[i], beta)), y[i])
            return acc
        return run

    blocks = parallel.partition(data.n_rows, plan.workers)
    partials = parallel.run_region([task(a, b) for a, b in blocks])
    return _merge_scalar(partials)


def _loglike_plf(data: DesignMatrix, beta, plan) -> float:
    x, y = data.x, data.y
    chunked = plan.strategy is Strategy.PLF_CHUNKED

    def task(a, b):
        def run():
            acc = 0.0
            pieces = _chunk_bounds(a, b, plan.n_chunks) if chunked else ([(a, b)] if b > a else [])
            for ca, cb in pieces:
                acc += _nll_sum(x[ca:cb] @ beta, y[ca:cb])
            return acc
        return run

    blocks = parallel.partition(data.n_rows, plan.workers)
    partials = parallel.run_region([task(a, b) for a, b in blocks])
    return _merge_scalar(partials)


def _loglike_sharded(view: ShardedMatrix, beta, plan) -> float:
    assign = [view.shards[w::plan.workers] for w in range(plan.workers)]

    def task(shards):
        def run():
            acc = 0.0
            for s in shards:
                acc += _nll_sum(s.x @ beta, s.y)
            return acc
        return run

    partials = parallel.run_region([task(sh) for sh in assign])
    return _merge_scalar(partials)


# ---------------------------------------------------------------------------
# gradient strategies
# ---------------------------------------------------------------------------

def loglike_grad(data, beta, plan: ExecPlan = ExecPlan()) -> GradResult:
    """L(beta) and its gradient X' (y - sigmoid(X beta)); strategy-invariant."""
    beta = _check_beta(beta, data.n_cols)
    counters.add_flops(data.n_rows * (4 * data.n_cols + _TR_GRAD_FLOPS))
    if isinstance(data, ShardedMatrix):
        return _grad_sharded(data, beta, plan)
    if plan.strategy is Strategy.SOM:
        return _grad_som(data, beta, plan)
    if plan.strategy is Strategy.MOS:
        return _grad_mos(data, beta, plan)
    if plan.strategy is Strategy.SHARDED:
        view = make_sharded(data, min(plan.workers, data.n_rows))
        return _grad_sharded(view, beta, plan)
    return _grad_plf(data, beta, plan)


def _block_fg(x, y, beta) -> tuple[float, np.ndarray]:
    """Fused f partial and gradient partial for one contiguous row block."""
    t = x @ beta
    f = _nll_sum(t, y)
    gf = y - expit(t)
    return f, x.T @ gf


def _grad_som(data: DesignMatrix, beta, plan) -> GradResult:
    n = data.n_rows
    xbeta = np.empty(n)
    blocks = parallel.partition(n, plan.workers)

    def la_task(a, b):
        def run():
            xbeta[a:b] = data.x[a:b] @ beta
        return run

    parallel.run_region([la_task(a, b) for a, b in blocks])

    def tr_task(a, b):
        def run():
            t = xbeta[a:b]
            f = _nll_sum(t, data.y[a:b])
            gf = data.y[a:b] - expit(t)
            return f, data.x[a:b].T @ gf
        return run

    partials = parallel.run_region([tr_task(a, b) for a, b in blocks])
    return _merge_grad(partials, data.n_cols)


def _grad_mos(data: DesignMatrix, beta, plan) -> GradResult:
    x, y = data.x, data.y

    def task(a, b):
        def run():
            f = 0.0
            g = np.zeros(data.n_cols)
            for i in range(a, b):
                t = float(np.dot(x[i], beta))
                f += _nll_row(t, y[i])
                g += (y[i] - _sigmoid_row(t)) * x[i]
            return f, g
        return run

    blocks = parallel.partition(data.n_rows, plan.workers)
    partials = parallel.run_region([task(a, b) for a, b in blocks])
    return _merge_grad(partials, data.n_cols)


def _grad_plf(data: DesignMatrix, beta, plan) -> GradResult:
    x, y = data.x, data.y
    chunked = plan.strategy is Strategy.PLF_CHUNKED

    def task(a, b):
        def run():
            f = 0.0
            g = np.zeros(data.n_cols)
            pieces = _chunk_bounds(a, b, plan.n_chunks) if chunked else ([(a, b)] if b > a else [])
            for ca, cb in pieces:
                pf, pg = _block_fg(x[ca:cb], y[ca:cb], beta)
                f += pf
                g += pg
            return f, g
        return run

    blocks = parallel.partition(data.n_rows, plan.workers)
    partials = parallel.run_region([task(a, b) for a, b in blocks])
    return _merge_grad(partials, data.n_cols)


def _grad_sharded(view: ShardedMatrix, beta, plan) -> GradResult:
    assign = [view.shards[w::plan.workers] for w in range(plan.workers)]

    def task(shards):
        def run():
            f = 0.0
            g = np.zeros(view.n_cols)
            for s in shards:
                pf, pg = _block_fg(s.x, s.y, beta)
                f += pf
                g += pg
            return f, g
        return run

    partials = parallel.run_region([task(sh) for sh in assign])
    return _merge_grad(partials, view.n_cols)


# ---------------------------------------------------------------------------
# differential update
# ---------------------------------------------------------------------------

class GlmWorkspace:
    """Maintained X.beta plus the transposed copy backing column access.

    The transpose is built eagerly (X is immutable, so it never refreshes).
    Quiescence invariant: xbeta equals a fresh X.beta_current to 1e-10 per
    element whenever no commit is in flight; `validate` checks it.
    """

    def __init__(self, data: DesignMatrix, beta0, build_transpose: bool = True):
        beta0 = _check_beta(beta0, data.n_cols)
        self.beta_current = beta0.copy()
        self.xbeta = data.x @ beta0
        self.xt = np.ascontiguousarray(data.x.T) if build_transpose else None
        self._shape = (data.n_rows, data.n_cols)

    @property
    def n_rows(self) -> int:
        return self._shape[0]

    @property
    def n_cols(self) -> int:
        return self._shape[1]

    def validate(self, data: DesignMatrix, tol: float = 1e-10) -> float:
        """Max |xbeta - X.beta_current|; raises if above tol."""
        err = float(np.max(np.abs(self.xbeta - data.x @ self.beta_current)))
        if err > tol:
            raise AssertionError(f"workspace desynchronized: max error {err:g} > {tol:g}")
        return err


def _check_coord(ws: GlmWorkspace, k: int) -> None:
    if ws.xt is None:
        raise ValueError("workspace has no transposed copy; build with build_transpose=True")
    if not 0 <= k < ws.n_cols:
        raise IndexError(f"coordinate {k} out of range [0, {ws.n_cols})")


def diff_loglike(ws: GlmWorkspace, data: DesignMatrix, k: int, delta_beta_k: float,
                 plan: ExecPlan = ExecPlan()) -> float:
    """L at beta_current with coordinate k shifted by delta, touching only column k.

    Reads the maintained X.beta and one contiguous row of the transpose;
    never mutates the workspace.
    """
    _check_coord(ws, k)
    if not math.isfinite(delta_beta_k):
        raise ValueError("delta_beta_k must be finite")
    if data.n_rows != ws.n_rows or data.n_cols != ws.n_cols:
        raise ValueError("workspace/data shape mismatch")
    counters.add_flops(ws.n_rows * _DIFF_FLOPS)
    xk = ws.xt[k]
    y = data.y

    def task(a, b):
        def run():
            return _nll_sum(ws.xbeta[a:b] + delta_beta_k * xk[a:b], y[a:b])
        return run

    blocks = parallel.partition(ws.n_rows, plan.workers)
    partials = parallel.run_region([task(a, b) for a, b in blocks])
    return _merge_scalar(partials)


def commit_update(ws: GlmWorkspace, k: int, delta_beta_k: float,
                  plan: ExecPlan = ExecPlan()) -> None:
    """Materialize a coordinate move: xbeta += delta * X_k, beta_k += delta.

    Exclusive access assumed; restores the quiescence invariant on return.
    The O(N) axpy is memory-bound, so it runs unpartitioned regardless of
    plan.workers.
    """
    _check_coord(ws, k)
    if not math.isfinite(delta_beta_k):
        raise ValueError("delta_beta_k must be finite")
    if delta_beta_k != 0.0:
        ws.xbeta += delta_beta_k * ws.xt[k]
    ws.beta_current[k] += delta_beta_k
    counters.add_flops(2 * ws.n_rows)


# ---------------------------------------------------------------------------
# input formats
# ---------------------------------------------------------------------------

def load_design_csv(path) -> DesignMatrix:
    """Read `K covariate columns + one 0/1 response column` plain CSV."""
    rows: list[list[float]] = []
    with open(path, newline="") as fh:
        for i, row in enumerate(csv.reader(fh)):
            if not row or all(not c.strip() for c in row):
                continue
            vals = []
            for j, cell in enumerate(row):
                try:
                    vals.append(float(cell))
                except ValueError:
                    raise ValueError(
                        f"{path}: row {i + 1}, column {j + 1}: not a number: {cell!r}")
            rows.append(vals)
    if not rows:
        raise ValueError(f"{path}: no data rows")
    width = len(rows[0])
    for i, r in enumerate(rows):
        if len(r) != width:
            raise ValueError(f"{path}: row {i + 1}: expected {width} columns, got {len(r)}")
    if width < 2:
        raise ValueError(f"{path}: need at least one covariate column plus a response column")
    arr = np.asarray(rows)
    y = arr[:, -1]
    bad = np.nonzero((y != 0.0) & (y != 1.0))[0]
    if bad.size:
        raise ValueError(
            f"{path}: row {bad[0] + 1}, column {width}: response must be 0 or 1, got {y[bad[0]]!r}")
    return DesignMatrix(arr[:, :-1], y)


def synthetic_logistic(n_rows: int, n_cols: int, seed: int = 0,
                       beta=None, beta_scale: float = 1.0):
    """Seeded synthetic instance: X ~ N(0,1), y ~ Bernoulli(sigmoid(X beta)).

    Returns (DesignMatrix, beta_true).
    """
    gen = np.random.default_rng(seed)
    x = gen.standard_normal((n_rows, n_cols))
    if beta is None:
        beta = gen.normal(0.0, beta_scale, n_cols)
    else:
        beta = _check_beta(beta, n_cols)
    y = (gen.random(n_rows) < expit(x @ beta)).astype(np.float64)
    return DesignMatrix(x, y), np.asarray(beta, dtype=np.float64)
