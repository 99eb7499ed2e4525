import numpy as np
import pytest

from parmcmc.glm import synthetic_logistic
from parmcmc.hb import (HbDataset, HbState, MappingMode, MappingPolicy,
                        hb_benchmark, hb_sweep, synthetic_hb_dataset)
from parmcmc.rng import BufferKind, DeviateBuffer
from parmcmc.sampler import ChainConfig, GaussianPrior, run_chain


def tiny_setup(m=4, k=3, navg=200, seed=0):
    ds, betas_true = synthetic_hb_dataset(m, k, navg, seed=seed)
    prior = GaussianPrior.isotropic(k)
    return ds, betas_true, prior


def run_sweeps(ds, prior, policy, n_sweeps, seed=9):
    state = HbState(ds, prior, seed=seed)
    betas = None
    for _ in range(n_sweeps):
        betas = hb_sweep(ds, state, prior, policy)
    return betas, state


# ---------------------------------------------------------------------------
# dataset plumbing
# ---------------------------------------------------------------------------

def test_synthetic_dataset_shapes():
    ds, betas = tiny_setup(m=5, k=4, navg=50)[0:2]
    assert ds.m_groups == 5 and ds.n_cols == 4
    assert all(g.n_rows == 50 for g in ds.groups)
    assert betas.shape == (5, 4)
    assert ds.n_rows_total == 250


def test_dataset_rejects_mismatched_k():
    a, _ = synthetic_logistic(10, 3, seed=1)
    b, _ = synthetic_logistic(10, 4, seed=2)
    with pytest.raises(ValueError):
        HbDataset([a, b])
    with pytest.raises(ValueError):
        HbDataset([])


def test_policy_validation():
    with pytest.raises(ValueError):
        MappingPolicy(MappingMode.COARSE, workers=0)
    with pytest.raises(ValueError):
        MappingPolicy(MappingMode.FINE, neval=0)


# ---------------------------------------------------------------------------
# mapping equivalences
# ---------------------------------------------------------------------------

def test_coarse_equals_fine_with_one_worker_bitwise():
    ds, _, prior = tiny_setup(seed=3)
    bc, _ = run_sweeps(ds, prior, MappingPolicy(MappingMode.COARSE, workers=1), 15)
    bf, _ = run_sweeps(ds, prior, MappingPolicy(MappingMode.FINE, workers=1), 15)
    for a, b in zip(bc, bf):
        assert np.array_equal(a, b)


def test_coarse_draws_do_not_depend_on_worker_count():
    ds, _, prior = tiny_setup(seed=4)
    b1, _ = run_sweeps(ds, prior, MappingPolicy(MappingMode.COARSE, workers=1), 12)
    b3, _ = run_sweeps(ds, prior, MappingPolicy(MappingMode.COARSE, workers=3), 12)
    for a, b in zip(b1, b3):
        assert np.array_equal(a, b)


def test_neval_does_not_change_draws():
    ds, _, prior = tiny_setup(seed=5)
    b1, s1 = run_sweeps(ds, prior, MappingPolicy(MappingMode.FINE, neval=1), 8)
    b10, s10 = run_sweeps(ds, prior, MappingPolicy(MappingMode.FINE, neval=10), 8)
    for a, b in zip(b1, b10):
        assert np.array_equal(a, b)


def test_group_chain_decomposes_to_single_group_chains():
    # fixed hyperprior: each group's HB chain must equal an independent
    # run_chain fed the identical spawned stream
    ds, _, prior = tiny_setup(m=2, k=3, navg=120, seed=6)
    n_sweeps = 10
    betas, _ = run_sweeps(ds, prior, MappingPolicy(MappingMode.COARSE, workers=2),
                          n_sweeps, seed=17)
    for m in range(ds.m_groups):
        solo = run_chain(ds.groups[m], prior,
                         ChainConfig(n_iter=n_sweeps, n_burnin=0),
                         rng=DeviateBuffer(BufferKind.UNIFORM01, seed=17, owner=(m,)))
        assert np.array_equal(solo.draws[-1], betas[m])


def _batch_means_se(samples: np.ndarray, n_batches: int = 10) -> np.ndarray:
    """Autocorrelation-aware standard error of the mean via batch means."""
    usable = (samples.shape[0] // n_batches) * n_batches
    batches = samples[:usable].reshape(n_batches, -1, *samples.shape[1:]).mean(axis=1)
    return batches.std(axis=0, ddof=1) / np.sqrt(n_batches)


def test_fine_worker_count_statistical_invariance():
    ds, _, prior = tiny_setup(m=3, k=3, navg=400, seed=7)
    means, ses = [], []
    for workers in (1, 4):
        state = HbState(ds, prior, seed=23)
        kept = []
        for t in range(460):
            betas = hb_sweep(ds, state, prior, MappingPolicy(MappingMode.FINE, workers=workers))
            if t >= 60:
                kept.append(np.stack(betas))
        kept = np.stack(kept)
        means.append(kept.mean(axis=0))
        ses.append(_batch_means_se(kept))
    gap = np.abs(means[0] - means[1])
    bound = 3.0 * np.sqrt(ses[0] ** 2 + ses[1] ** 2)
    assert np.all(gap <= bound), (gap, bound)


# ---------------------------------------------------------------------------
# benchmark grid
# ---------------------------------------------------------------------------

def test_benchmark_grid_complete_and_positive():
    ds, _, prior = tiny_setup(m=3, k=3, navg=100, seed=8)
    policies = [MappingPolicy(mode, workers=w, neval=ne)
                for mode in (MappingMode.COARSE, MappingMode.FINE)
                for w in (1, 2) for ne in (1, 10)]
    records = hb_benchmark(ds, prior, policies, n_sweeps=2, reps=2, seed=1)
    assert len(records) == len(policies)
    labels = {(r.label, r.workers) for r in records}
    assert ("hb/coarse/neval1", 1) in labels and ("hb/fine/neval10", 2) in labels
    for r in records:
        assert r.cpr > 0 and np.isfinite(r.cpr)
        assert r.wall_seconds > 0
        assert r.n_rows == ds.n_rows_total
        assert r.cpr == pytest.approx(2.6e9 * r.wall_seconds / (r.evals * r.n_rows))


def test_benchmark_reruns_reproduce_draw_streams():
    ds, _, prior = tiny_setup(m=3, k=3, navg=80, seed=9)
    policy = MappingPolicy(MappingMode.COARSE, workers=2, neval=2)
    finals = []
    for _ in range(2):
        state = HbState(ds, prior, seed=31)
        for _ in range(4):
            betas = hb_sweep(ds, state, prior, policy)
        finals.append(np.stack(betas))
    np.testing.assert_array_equal(finals[0], finals[1])
