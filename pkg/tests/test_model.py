import numpy as np
import pytest

from ringlasso.exceptions import DimensionMismatch
from ringlasso.model import (FitReport, MultiTaskDataset, PopTruth, Task, augment, check_coef,
                             empirical_cov, empirical_risk, lpq_norm, population_risk,
                             sparsity_summary, sup_norm_gap)
from ringlasso.spectra import nuclear_norm


def _dataset(rng, n=3, m=7, p=4):
    return MultiTaskDataset.from_arrays(rng.normal(size=(n, m, p)), rng.normal(size=(n, m)))


def test_task_validation():
    with pytest.raises(DimensionMismatch):
        Task(np.ones((3, 2)), np.ones(4))
    with pytest.raises(ValueError):
        Task(np.array([[np.nan]]), np.ones(1))
    t = Task(np.ones((3, 2)), np.ones(3))
    with pytest.raises(ValueError):
        t.design[0, 0] = 5.0  # read-only


def test_dataset_shapes_and_mismatch():
    rng = np.random.default_rng(0)
    ds = _dataset(rng)
    assert (ds.n, ds.p, ds.rows) == (3, 4, [7, 7, 7])
    with pytest.raises(DimensionMismatch):
        MultiTaskDataset((Task(np.ones((2, 2)), np.ones(2)), Task(np.ones((2, 3)), np.ones(2))))
    with pytest.raises(DimensionMismatch):
        check_coef(np.zeros((3, 4)), ds)


def test_variable_task_lengths():
    rng = np.random.default_rng(1)
    ds = MultiTaskDataset((Task(rng.normal(size=(3, 2)), rng.normal(size=3)),
                           Task(rng.normal(size=(5, 2)), rng.normal(size=5))))
    assert ds.rows == [3, 5]
    assert empirical_risk(np.zeros((2, 2)), ds) == pytest.approx(
        sum(float(t.response @ t.response) for t in ds.tasks))


def test_augment():
    np.testing.assert_array_equal(augment(np.array([2.0, 3.0])), [-1.0, 2.0, 3.0])
    assert augment(np.zeros((2, 3))).shape == (3, 3)


def test_lpq_norm_special_cases():
    B = np.array([[3.0, 4.0], [0.0, 0.0], [1.0, -1.0]])
    assert lpq_norm(B, 2, 1) == pytest.approx(5 + np.sqrt(2))
    assert lpq_norm(B, 1, 1) == pytest.approx(np.abs(B).sum())
    assert lpq_norm(B, 2, 2) == pytest.approx(np.linalg.norm(B))
    assert lpq_norm(B, 2, 1, axis="columns") == pytest.approx(
        np.linalg.norm(B[:, 0]) + np.linalg.norm(B[:, 1]))
    with pytest.raises(ValueError):
        lpq_norm(B, 0.5, 1)


def test_group_norm_over_rotations_dominates_trace_norm():
    rng = np.random.default_rng(2)
    B = rng.normal(size=(4, 6))
    tn = nuclear_norm(B)
    for _ in range(200):
        U, _ = np.linalg.qr(rng.normal(size=(4, 4)))
        assert lpq_norm(U @ B, 2, 1) >= tn - 1e-9
    Ul, _, _ = np.linalg.svd(B, full_matrices=False)
    assert lpq_norm(Ul.T @ B, 2, 1) == pytest.approx(tn, rel=1e-10)


def test_population_risk_and_sup_gap():
    beta = np.array([[1.0], [2.0]])
    S = np.eye(3)
    truth = PopTruth(beta, 1.0, (S,), 1.0)
    # augmented (-1, 1, 2): quadratic form with identity = 6
    assert population_risk(beta, truth) == pytest.approx(6.0)
    ds = MultiTaskDataset.from_arrays([np.eye(2)], [np.zeros(2)])
    S_hat = empirical_cov(ds.tasks[0])
    assert sup_norm_gap(ds, truth) == pytest.approx(np.max(np.abs(S_hat - S)))
    # perturbed single entry
    bumped = S_hat.copy()
    bumped[1, 1] += 0.3
    truth2 = PopTruth(beta, 1.0, (bumped,), 1.0)
    assert sup_norm_gap(ds, truth2) == pytest.approx(0.3)


def test_rough_approximation_inequality():
    rng = np.random.default_rng(3)
    ds = _dataset(rng, n=1, m=20, p=3)
    S_hat = empirical_cov(ds.tasks[0])
    Sigma = np.eye(4)
    delta = np.max(np.abs(S_hat - Sigma))
    for _ in range(200):
        b = rng.normal(size=4)
        assert abs(b @ (Sigma - S_hat) @ b) <= delta * np.abs(b).sum() ** 2 + 1e-12


def test_sparsity_summary():
    z = sparsity_summary(np.zeros((3, 2)))
    assert z.rank == 0 and list(z.counts) == [0, 0]
    e = sparsity_summary(np.eye(3))
    assert list(e.counts) == [1, 1, 1] and e.rank == 3
    rng = np.random.default_rng(4)
    B = rng.normal(size=(5, 4)) * (rng.random((5, 4)) > 0.5)
    s = sparsity_summary(B, threshold=0)
    np.testing.assert_array_equal(s.counts, (B != 0).sum(axis=0))
    np.testing.assert_array_equal(s.row_support, np.flatnonzero((B != 0).any(axis=1)))


def test_fit_report_to_dict_is_plain():
    r = FitReport(objective=[np.float64(1.0)], kkt_residual=np.array([0.5]),
                  info={"mu": np.array([1.0, np.inf])})
    d = r.to_dict()
    assert d["kkt_residual"] == [0.5] and isinstance(d["objective"][0], float)
