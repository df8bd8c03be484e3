import numpy as np
import pytest

from oracles import grid_min_1d, lassoes_lbfgsb, lassoes_objective_ref
from ringlasso.lassoes import (LassoesOptions, fit_lassoes, lassoes_kkt_residual,
                               lassoes_objective, select_lambda_lassoes)
from ringlasso.model import MultiTaskDataset
from ringlasso.simgen import SimConfig, gen_decay

ONE_D = MultiTaskDataset.from_arrays([np.ones((2, 1))], [np.ones(2)])


def _random(seed, n=4, m=10, p=5):
    rng = np.random.default_rng(seed)
    return MultiTaskDataset.from_arrays(rng.normal(size=(n, m, p)), rng.normal(size=(n, m)))


@pytest.mark.parametrize("alpha,lam,expected", [(1, 1.0, 0.75), (1, 4.0, 0.0), (2, 1.0, 2 / 3)])
def test_one_dimensional_cases(alpha, lam, expected):
    B, rep = fit_lassoes(ONE_D, LassoesOptions(alpha=alpha, lam=lam, norm_mode="plain"))
    grid = grid_min_1d(lambda b: 2 * (1 - b) ** 2 + lam * np.abs(b) ** alpha)
    assert B[0, 0] == pytest.approx(expected, abs=1e-8)
    assert B[0, 0] == pytest.approx(grid, abs=2e-6)
    assert rep.converged


def test_augmented_mode_shifts_the_optimum():
    # 2(1-b)^2 + (1+b)^2 -> b = 1/3
    B, _ = fit_lassoes(ONE_D, LassoesOptions(alpha=2, lam=1.0, norm_mode="augmented"))
    assert B[0, 0] == pytest.approx(1 / 3, abs=1e-8)


def test_lambda_zero_is_least_squares():
    ds = _random(0)
    B, rep = fit_lassoes(ds, LassoesOptions(lam=0.0))
    for i, t in enumerate(ds.tasks):
        ols = np.linalg.lstsq(t.design, t.response, rcond=None)[0]
        np.testing.assert_allclose(B[:, i], ols, atol=1e-8)
    assert np.max(rep.kkt_residual) <= 1e-8


@pytest.mark.parametrize("alpha", [1.0, 1.5, 2.0, 3.0])
@pytest.mark.parametrize("mode", ["plain", "augmented"])
def test_matches_smooth_reformulation_oracle(alpha, mode):
    ds = _random(int(alpha * 10))
    opts = LassoesOptions(alpha=alpha, lam=3.0, norm_mode=mode)
    B, rep = fit_lassoes(ds, opts)
    Bo = lassoes_lbfgsb(ds, 3.0, alpha, opts.offset)
    f, fo = lassoes_objective(B, ds, opts), lassoes_objective_ref(Bo, ds, 3.0, alpha, opts.offset)
    assert f <= fo * (1 + 1e-8)
    assert f == pytest.approx(fo, rel=1e-6)
    assert np.max(rep.kkt_residual) < 1e-5


def test_objective_trace_nonincreasing():
    ds = _random(3)
    _, rep = fit_lassoes(ds, LassoesOptions(alpha=2.5, lam=2.0))
    obj = np.array(rep.objective)
    assert np.all(np.diff(obj) <= 1e-10 * np.abs(obj[:-1]))


def test_tasks_are_fitted_independently():
    ds = _random(4)
    opts = LassoesOptions(alpha=3.0, lam=1.0)
    B, _ = fit_lassoes(ds, opts)
    for i, t in enumerate(ds.tasks):
        Bi, _ = fit_lassoes(MultiTaskDataset((t,)), opts)
        np.testing.assert_array_equal(Bi[:, 0], B[:, i])


def test_kkt_residual_examples():
    opts = LassoesOptions(alpha=1, lam=1.0, norm_mode="plain")
    assert lassoes_kkt_residual(np.array([[0.75]]), ONE_D, opts)[0] <= 1e-6
    assert lassoes_kkt_residual(np.array([[0.85]]), ONE_D, opts)[0] > 0.1


def test_select_lambda_no_crossing_for_zero_response():
    rng = np.random.default_rng(5)
    ds = MultiTaskDataset.from_arrays(rng.normal(size=(3, 8, 4)), np.zeros((3, 8)))
    path = select_lambda_lassoes(ds, 3.0, np.geomspace(100, 0.1, 6))
    assert not path.crossed and path.index == 5
    assert np.all(path.g == 0)


def test_select_lambda_matches_cold_start_and_g_monotone():
    ds, _ = gen_decay(SimConfig(n=20, p=20, m=25, seed=1))
    grid = np.geomspace(200, 0.05, 12)
    warm = select_lambda_lassoes(ds, 3.0, grid)
    cold = select_lambda_lassoes(ds, 3.0, grid, warm_start=False)
    assert warm.crossed and warm.index == cold.index
    assert np.all(np.diff(warm.g) >= -1e-9 * np.max(warm.g))


def test_select_lambda_rejects_bad_arguments():
    with pytest.raises(ValueError):
        select_lambda_lassoes(ONE_D, 2.0, [3, 2, 1])
    with pytest.raises(ValueError):
        select_lambda_lassoes(ONE_D, 3.0, [1, 2, 3])


def test_options_validation():
    with pytest.raises(ValueError):
        LassoesOptions(alpha=0.5)
    with pytest.raises(ValueError):
        LassoesOptions(norm_mode="weird")
