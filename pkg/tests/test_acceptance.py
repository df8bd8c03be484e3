"""Acceptance suite: eleven end-to-end criteria at their stated tolerances.

Each criterion prints one ``PASS``/``FAIL`` line (collected again in the
pytest terminal summary).  Run on its own with::

    pytest tests/test_acceptance.py -v
    python tests/test_acceptance.py
"""

import math
import sys
import time
import warnings
from contextlib import contextmanager
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from oracles import (fista, grid_min_1d, lassoes_lbfgsb, lassoes_objective_ref,  # noqa: E402
                     nuclear, objective, row_shrink, svt)
from ringlasso.bounds import bound_lassoL1p, bound_ring, lassoes_lambda_min  # noqa: E402
from ringlasso.bounds import persistence_deviation  # noqa: E402
from ringlasso.cli import main as cli_main  # noqa: E402
from ringlasso.diagnostics import re_constant  # noqa: E402
from ringlasso.group import GroupOptions, fit_group, group_objective  # noqa: E402
from ringlasso.lassoes import LassoesOptions, fit_lassoes, lassoes_objective  # noqa: E402
from ringlasso.model import MultiTaskDataset, empirical_cov, lpq_norm  # noqa: E402
from ringlasso.ring import (RingOptions, fit_ring, kkt_residuals, rank_path,  # noqa: E402
                            ring_objective, score_matrix)
from ringlasso.simgen import SimConfig, gen_decay, rng_from_seed  # noqa: E402
from ringlasso.spectra import eigvalue_directional_derivative, nuclear_norm  # noqa: E402

RESULTS = []


@contextmanager
def criterion(number, title, limit):
    """Time the body, then record and print one PASS/FAIL line."""
    details = {}
    start = time.perf_counter()
    ok, err = False, None
    try:
        yield details
        ok = True
    except AssertionError as exc:
        err = exc
    elapsed = time.perf_counter() - start
    if limit is not None and elapsed > limit:
        ok = False
        details["runtime"] = f"{elapsed:.1f}s exceeds {limit}s"
    info = ", ".join(f"{k}={v}" for k, v in details.items())
    line = f"{'PASS' if ok else 'FAIL'} criterion {number:2d}: {title} [{elapsed:.1f}s] {info}"
    RESULTS.append(line)
    print(line)
    if err is not None:
        raise err
    assert ok, line


def _orth(rng, k):
    Q, R = np.linalg.qr(rng.normal(size=(k, k)))
    return Q * np.sign(np.diag(R))


def test_criterion_01_trace_norm_identities():
    with criterion(1, "trace-norm identities", 5) as d:
        rng = np.random.default_rng(101)
        worst = {"oracle": 0.0, "rotation": 0.0, "convexity": -np.inf}
        for _ in range(200):
            p, n = rng.integers(1, 9, size=2)
            B, B2 = rng.normal(size=(2, p, n))
            # eigenvalues of the smaller Gram matrix: the larger one carries
            # zero eigenvalues whose round-off would dominate after sqrt
            ev = np.linalg.eigh(B @ B.T if p <= n else B.T @ B)[0]
            oracle = float(np.sum(np.sqrt(np.clip(ev, 0, None))))
            val = nuclear_norm(B)
            worst["oracle"] = max(worst["oracle"], abs(val - oracle) / (1 + oracle))
            rot = nuclear_norm(_orth(rng, p).T @ B @ _orth(rng, n))
            worst["rotation"] = max(worst["rotation"], abs(rot - val) / (1 + val))
            for t in (0.0, 0.25, 0.5, 0.75, 1.0):
                gap = nuclear_norm(t * B + (1 - t) * B2) - t * val - (1 - t) * nuclear_norm(B2)
                worst["convexity"] = max(worst["convexity"], gap)
        d.update({k: f"{v:.1e}" for k, v in worst.items()})
        assert worst["oracle"] <= 1e-9
        assert worst["rotation"] <= 1e-9
        assert worst["convexity"] <= 1e-10


def test_criterion_02_group_norm_over_rotations():
    with criterion(2, "min over rotations of l21 norm vs trace norm", 10) as d:
        rng = np.random.default_rng(102)
        low, svd_gap = np.inf, 0.0
        for _ in range(50):
            p, n = rng.integers(2, 7, size=2)
            B = rng.normal(size=(p, n))
            tn = nuclear_norm(B)
            best = min(lpq_norm(_orth(rng, p) @ B, 2, 1) for _ in range(500))
            low = min(low, best - tn)
            U = np.linalg.svd(B)[0]
            svd_gap = max(svd_gap, abs(lpq_norm(U.T @ B, 2, 1) - tn))
        d.update(min_excess=f"{low:.2e}", svd_gap=f"{svd_gap:.1e}")
        assert low >= -1e-9
        assert svd_gap <= 1e-8


ONE_D = MultiTaskDataset.from_arrays([np.ones((2, 1))], [np.ones(2)])
SYMMETRIC = MultiTaskDataset.from_arrays([np.ones((1, 1))] * 2, [np.ones(1)] * 2)


def test_criterion_03_solver_oracle_equivalence():
    with criterion(3, "solvers match independent oracles", 60) as d:
        # 1-D analytic cases: values recomputed by grid search / FISTA
        lasso = grid_min_1d(lambda b: 2 * (1 - b) ** 2 + np.abs(b))
        lasso2 = grid_min_1d(lambda b: 2 * (1 - b) ** 2 + b**2)
        B, _ = fit_lassoes(ONE_D, LassoesOptions(alpha=1, lam=1.0, norm_mode="plain"))
        assert abs(B[0, 0] - lasso) <= 1e-6 and abs(lasso - 0.75) <= 1e-6
        B, _ = fit_lassoes(ONE_D, LassoesOptions(alpha=2, lam=1.0, norm_mode="plain"))
        assert abs(B[0, 0] - lasso2) <= 1e-6 and abs(lasso2 - 2 / 3) <= 1e-6
        grp = fista(SYMMETRIC, 1.0, row_shrink, iters=20000)[0, 0]
        B, _ = fit_group(SYMMETRIC, GroupOptions(lam=1.0))
        assert np.max(np.abs(B - grp)) <= 1e-6 and abs(grp - 0.646447) <= 1e-6
        B, _ = fit_ring(ONE_D, RingOptions(lam=1.0))
        assert abs(B[0, 0] - lasso) <= 1e-6

        rng = np.random.default_rng(103)
        worst = {"lassoes": 0.0, "group": 0.0, "ring": 0.0}
        for _ in range(20):
            n, p, m = int(rng.integers(1, 7)), int(rng.integers(1, 5)), int(rng.integers(4, 13))
            ds = MultiTaskDataset.from_arrays(rng.normal(size=(n, m, p)), rng.normal(size=(n, m)))
            C = score_matrix(ds)
            alpha = float(rng.choice([1.0, 1.5, 2.0, 3.0]))
            opts = LassoesOptions(alpha=alpha, lam=float(rng.uniform(0.5, 5)))
            B, _ = fit_lassoes(ds, opts)
            Bo = lassoes_lbfgsb(ds, opts.lam, alpha, opts.offset)
            fo = lassoes_objective_ref(Bo, ds, opts.lam, alpha, opts.offset)
            worst["lassoes"] = max(worst["lassoes"], abs(lassoes_objective(B, ds, opts) - fo) / abs(fo))
            lam = float(rng.uniform(0.2, 1.0)) * 2 * np.max(np.linalg.norm(C, axis=1))
            B, _ = fit_group(ds, GroupOptions(lam=lam))
            fo = objective(fista(ds, lam, row_shrink, iters=50000), ds, lam,
                           lambda M: float(np.sum(np.linalg.norm(M, axis=1))))
            worst["group"] = max(worst["group"], abs(group_objective(B, ds, lam) - fo) / abs(fo))
            lam = float(rng.uniform(0.2, 1.0)) * 2 * np.linalg.norm(C, 2)
            B, _ = fit_ring(ds, RingOptions(lam=lam))
            fo = objective(fista(ds, lam, svt, iters=50000), ds, lam, nuclear)
            worst["ring"] = max(worst["ring"], abs(ring_objective(B, ds, lam) - fo) / abs(fo))
        d.update({k: f"{v:.1e}" for k, v in worst.items()})
        assert max(worst.values()) <= 1e-4


def test_criterion_04_ring_kkt_certification():
    with criterion(4, "RING KKT certificate and zero certificate", 30) as d:
        rng = np.random.default_rng(104)
        fits = zeros = 0
        for _ in range(20):
            n, p, m = int(rng.integers(2, 7)), int(rng.integers(2, 5)), int(rng.integers(4, 13))
            ds = MultiTaskDataset.from_arrays(rng.normal(size=(n, m, p)), rng.normal(size=(n, m)))
            lam = float(rng.uniform(0.1, 1.5)) * 2 * np.linalg.norm(score_matrix(ds), 2)
            B, rep = fit_ring(ds, RingOptions(lam=lam))
            if rep.converged:
                fits += 1
                assert kkt_residuals(B, ds, lam).passes()
            if 0.5 * lam > np.linalg.norm(score_matrix(ds), 2):
                zeros += 1
                assert np.linalg.norm(B) < 1e-4
        d.update(converged=f"{fits}/20", zero_certified=zeros)
        assert fits == 20


def test_criterion_05_rank_path():
    with criterion(5, "rank path on the decay design", 60) as d:
        ds, _ = gen_decay(SimConfig(n=20, p=20, m=25, seed=3))
        top = 2 * np.linalg.norm(score_matrix(ds), 2)
        path = rank_path(ds, top * np.geomspace(0.02, 1.05, 8))
        ranks = [r for _, r, _ in path]
        d["ranks"] = "-".join(map(str, ranks))
        assert all(b <= a for a, b in zip(ranks, ranks[1:]))
        assert ranks[-1] == 0


@pytest.fixture(scope="module")
def table1_runs(tmp_path_factory):
    """Two command-line runs of the reduced-scale table with seed 42."""
    base = tmp_path_factory.mktemp("table1")
    runs = []
    for name in ("a", "b"):
        start = time.perf_counter()
        code = cli_main(["reproduce-table1", "--seed", "42", "--out", str(base / name),
                         "--no-plots"])
        runs.append((code, time.perf_counter() - start, base / name))
    return runs


def test_criterion_06_table1_trend(table1_runs):
    code, elapsed, out = table1_runs[0]
    with criterion(6, "simulation table trend (n=p=60, m=5/25/100, 5 reps)", None) as d:
        assert code == 0
        rows = [line.split(",") for line in (out / "table1.csv").read_text().splitlines()[1:]]
        m = [int(r[0]) for r in rows]
        par = [float(r[1]) for r in rows]
        pre = [float(r[3]) for r in rows]
        d.update(m=m, L_par=[round(v, 3) for v in par], L_pre=[round(v, 3) for v in pre],
                 run=f"{elapsed:.0f}s")
        assert m == [5, 25, 100]
        assert par[0] > par[1] > par[2]
        assert par[0] > 0.85 and par[2] < 0.55
        assert pre[2] < pre[0]
        assert elapsed < 15 * 60


def test_criterion_07_generator_r2():
    with criterion(7, "decay design R^2 band", 30) as d:
        values = []
        for origin in (0, 1):
            ds, truth = gen_decay(SimConfig(n=150, p=150, m=100, index_origin=origin, seed=7))
            y = np.concatenate([t.response for t in ds.tasks])
            # the noise is the only unexplained part: R^2 = 1 - RSS(truth)/TSS
            res = np.concatenate([t.response - t.design @ truth.coef[:, i]
                                  for i, t in enumerate(ds.tasks)])
            values.append(1 - res @ res / (y @ y))
        d.update(origin0=f"{values[0]:.3f}", origin1=f"{values[1]:.3f}")
        assert all(0.64 <= v <= 0.78 for v in values)


def test_criterion_08_persistence_monte_carlo():
    with criterion(8, "moment deviation bound frequency", 120) as d:
        n, p, m, eta, sigma, reps = 10, 4, 100, 0.05, 0.5, 200
        beta = rng_from_seed(8, 0).uniform(-0.5, 0.5, size=(p, n))
        # bounded support: x and the noise are Rademacher, so every
        # coordinate of z = (y, x) is at most M_i = max(1, |beta_i|_1 + sigma)
        M = np.maximum(1.0, np.abs(beta).sum(axis=0) + sigma)
        V = float(np.max(M) ** 4)
        bound = persistence_deviation(V, n, p, m, eta)
        pops = []
        for i in range(n):
            S = np.eye(p + 1)
            S[0, 0] = beta[:, i] @ beta[:, i] + sigma**2
            S[0, 1:] = S[1:, 0] = beta[:, i]
            pops.append(S)
        exceed = 0
        for r in range(reps):
            rng = rng_from_seed(1000 + r, 1)
            X = rng.choice([-1.0, 1.0], size=(n, m, p))
            e = rng.choice([-1.0, 1.0], size=(n, m)) * sigma
            ds = MultiTaskDataset.from_arrays(X, np.einsum("imp,pi->im", X, beta) + e)
            gap = max(np.max(np.abs(empirical_cov(t) - S)) for t, S in zip(ds.tasks, pops))
            exceed += gap > bound
        allowed = eta * reps + 3 * math.sqrt(reps * eta * (1 - eta))
        d.update(exceedances=int(exceed), allowed=f"{allowed:.2f}", bound=f"{bound:.3f}")
        assert exceed <= allowed


def _orthonormal_task(rng, m, p):
    Q, _ = np.linalg.qr(rng.normal(size=(m, p)))
    return Q * np.sqrt(m)


def test_criterion_09_oracle_bounds():
    with criterion(9, "observed errors under oracle bounds", 300) as d:
        n, p, m, sigma, A, trials = 10, 5, 20, 1.0, 1.5, 40
        ok_lasso = ok_ring = 0
        for k in range(trials):
            rng = rng_from_seed(900 + k, 0)
            X = np.stack([_orthonormal_task(rng, m, p) for _ in range(n)])
            kappa1 = re_constant(list(X), 1, c0=3.0, restarts=16, seed=k)
            kappa2 = re_constant(list(X), 2, c0=3.0, restarts=16, seed=k)
            assert kappa1.certified and abs(kappa1.kappa - 1) < 1e-6
            assert kappa2.certified and abs(kappa2.kappa - 1) < 1e-6

            # lassoes: one active variable per task, plain l1 (alpha = 1)
            B = np.zeros((p, n))
            B[rng.integers(0, p, size=n), np.arange(n)] = rng.uniform(1, 3, size=n)
            y = np.einsum("imp,pi->im", X, B) + sigma * rng.normal(size=(n, m))
            ds = MultiTaskDataset.from_arrays(X, y)
            lam = lassoes_lambda_min(sigma, A, m, n, p, 1, 1.0, 1.0)
            Bh, _ = fit_lassoes(ds, LassoesOptions(alpha=1, lam=lam, norm_mode="plain"))
            err = math.sqrt(sum(np.sum((X[i] @ (Bh[:, i] - B[:, i])) ** 2) for i in range(n))
                            / (n * m))
            rep = bound_lassoL1p(1, kappa1.kappa, m, n, p, sigma, A, 1, lam, 1.0, 1.0,
                                 observed={"prediction": err})
            ok_lasso += rep.satisfied["prediction"]

            # RING: rank-2 truth at the prescribed lambda
            B = rng.normal(size=(p, 2)) @ rng.normal(size=(2, n))
            y = np.einsum("imp,pi->im", X, B) + sigma * rng.normal(size=(n, m))
            ds = MultiTaskDataset.from_arrays(X, y)
            bound = bound_ring(2, p, n, m, sigma, A, kappa2.kappa)
            Bh, _ = fit_ring(ds, RingOptions(lam=bound.inputs["lam"]))
            pred = sum(np.sum((X[i] @ (Bh[:, i] - B[:, i])) ** 2) for i in range(n)) / (m * n)
            rep = bound_ring(2, p, n, m, sigma, A, kappa2.kappa,
                             observed={"prediction": pred,
                                       "rank": np.linalg.matrix_rank(Bh, tol=1e-6)})
            ok_ring += rep.satisfied["prediction"] and rep.satisfied["rank"]
        d.update(lassoes=f"{ok_lasso}/{trials}", ring=f"{ok_ring}/{trials}")
        assert ok_lasso >= 0.95 * trials and ok_ring >= 0.95 * trials


def test_criterion_10_eigen_derivative():
    with criterion(10, "eigenvalue derivative vs finite differences", 5) as d:
        rng = np.random.default_rng(110)
        worst = 0.0
        for _ in range(100):
            p = int(rng.integers(2, 7))
            Q = _orth(rng, p)
            lam = np.sort(rng.uniform(-3, 3, size=p))[::-1]
            lam[1:] = np.minimum(lam[1:], lam[:-1] - 0.1)  # gap >= 0.1
            A = (Q * lam) @ Q.T
            D = rng.normal(size=(p, p))
            D = D + D.T
            k = int(rng.integers(1, p + 1))
            h = 1e-5
            fd = (np.linalg.eigvalsh(A + h * D)[::-1][k - 1]
                  - np.linalg.eigvalsh(A - h * D)[::-1][k - 1]) / (2 * h)
            worst = max(worst, abs(eigvalue_directional_derivative(A, D, k) - fd))
        d["max_error"] = f"{worst:.1e}"
        assert worst <= 1e-4


def test_criterion_11_table1_determinism(table1_runs):
    with criterion(11, "table reproduction is byte-identical across runs", None) as d:
        (ca, _, a), (cb, _, b) = table1_runs
        assert ca == cb == 0
        same = [f for f in ("table1.csv", "table1_replicates.csv")
                if (a / f).read_bytes() == (b / f).read_bytes()]
        d["identical"] = same
        assert len(same) == 2


if __name__ == "__main__":
    warnings.simplefilter("ignore")
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
