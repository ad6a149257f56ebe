"""Exit criteria for the package, one test per criterion.

Each test records a PASS/FAIL line that is printed in the pytest terminal
summary under "acceptance criteria".
"""

import time
from dataclasses import replace

import numpy as np
import pytest

from oracles import brute_force_energy_rank, lasso_exhaustive, lasso_objective
from wormlab import bench
from wormlab.cli import main
from wormlab.features import adjacent_channel_fourier_correlation, differential_spectrum
from wormlab.regression import omp_path, solve_lasso, solve_least_squares, solve_ridge
from wormlab.subspace import DecisionRule, fit_raw_dictionaries, predict_nearest_subspace, predict_union_subspace
from wormlab.synthetic import GeneratorConfig, generate
from wormlab.worm import energy_profile, fit_worm, predict_worm, rescaled_regression, select_basis

MONOTONE_JITTER = 0.02
KNN_MARGIN = 0.02
SEEDS = 5


@pytest.fixture(scope="module")
def protocol_report():
    """WORM and 1-NN over the default five-point sweeps, five trials."""
    cfg = bench.default_config()
    cfg = replace(cfg, classifiers=tuple(c for c in cfg.classifiers if c.kind in ("worm", "knn")), trials=SEEDS)
    start = time.perf_counter()
    report = bench.run_experiment(cfg)
    return report, time.perf_counter() - start, cfg


def test_c1_equivalence_transform(record_criterion):
    rng = np.random.default_rng(2024)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(1000):
        D = rng.standard_normal((50, 10))
        weights = rng.uniform(0.1, 10.0, 10)
        y = rng.standard_normal(50)
        x = solve_least_squares(D, y).values
        x_new = rescaled_regression(D, weights, y).values
        sx = weights * x
        worst = max(worst, np.max(np.abs(x_new - sx)) / (1.0 + np.max(np.abs(sx))))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-8 and elapsed < 2.0
    record_criterion(1, "x_new = Sigma x on 1000 instances", ok, f"max scaled err {worst:.2e}, {elapsed:.2f}s")
    assert worst <= 1e-8
    assert elapsed < 2.0


def test_c2_solver_oracles(record_criterion):
    rng = np.random.default_rng(77)
    start = time.perf_counter()

    ridge_err = 0.0
    lasso_rel = 0.0
    omp_orth = 0.0
    for _ in range(200):
        n = int(rng.integers(1, 9))
        m = n + int(rng.integers(2, 10))
        A = rng.standard_normal((m, n))
        x = rng.standard_normal(m)

        ridge_err = max(ridge_err, np.max(np.abs(solve_ridge(A, x, 0.0).values - solve_least_squares(A, x).values)))

        lam = float(rng.uniform(0.05, 2.0))
        _, best = lasso_exhaustive(A, x, lam)
        got = lasso_objective(A, x, solve_lasso(A, x, lam).values, lam)
        lasso_rel = max(lasso_rel, (got - best) / best)

        for step in omp_path(A, x, n):
            omp_orth = max(omp_orth, np.max(np.abs(A[:, list(step.support)].T @ step.residual)))
    elapsed = time.perf_counter() - start

    ok = ridge_err <= 1e-6 and lasso_rel <= 1e-4 and omp_orth <= 1e-8 and elapsed < 30
    record_criterion(
        2,
        "ridge(0)=LS, LASSO vs exhaustive oracle, OMP orthogonality",
        ok,
        f"ridge {ridge_err:.1e}, lasso rel {lasso_rel:.1e}, omp {omp_orth:.1e}, {elapsed:.1f}s",
    )
    assert ridge_err <= 1e-6
    assert lasso_rel <= 1e-4
    assert omp_orth <= 1e-8
    assert elapsed < 30


def test_c3_noiseless_separability(record_criterion):
    start = time.perf_counter()
    accs = {"worm(tau=0.95)": [], "worm(tau=0.5)": [], "union(ls,residual)": [], "nearest(residual)": []}
    residual = DecisionRule("reconstruction_residual")
    for seed in range(SEEDS):
        train, test = generate(GeneratorConfig(seed=seed))
        accs["worm(tau=0.95)"].append(np.mean(predict_worm(fit_worm(train), test.data) == test.labels))
        accs["worm(tau=0.5)"].append(np.mean(predict_worm(fit_worm(train, 0.5), test.data) == test.labels))
        dicts = fit_raw_dictionaries(train)
        accs["union(ls,residual)"].append(np.mean(predict_union_subspace(dicts, test.data, residual) == test.labels))
        accs["nearest(residual)"].append(np.mean(predict_nearest_subspace(dicts, test.data, residual) == test.labels))
    elapsed = time.perf_counter() - start
    worst = {k: min(v) for k, v in accs.items()}
    ok = all(v == 1.0 for v in worst.values()) and elapsed < 60
    record_criterion(3, "100% accuracy on noiseless 30-line data, 5 seeds", ok, f"min acc {worst}, {elapsed:.1f}s")
    assert all(v == 1.0 for v in worst.values()), worst
    assert elapsed < 60


def _series(report, name_prefix, kind):
    rows = [r for r in report.select(noise_kind=kind) if r.classifier.startswith(name_prefix)]
    return [r.noise_level for r in rows], [r.mean_accuracy for r in rows]


def test_c4_accuracy_falls_with_noise(protocol_report, record_criterion):
    report, elapsed, cfg = protocol_report
    details = []
    ok = elapsed < 600
    for kind in ("gaussian", "salt_pepper", "multiplicative"):
        levels, acc = _series(report, "WORM", kind)
        assert len(levels) == 5 and levels == sorted(levels)
        rises = [b - a for a, b in zip(acc, acc[1:])]
        ok &= all(r <= MONOTONE_JITTER for r in rises)
        ok &= acc[-1] < acc[0]
        details.append(f"{kind}: " + "/".join(f"{a:.3f}" for a in acc))
    record_criterion(4, "WORM accuracy non-increasing in noise level", ok, "; ".join(details) + f"; {elapsed:.0f}s")
    assert ok


def test_c5_worm_vs_knn_at_low_snr(protocol_report, record_criterion):
    report, _, _ = protocol_report
    details = []
    ok = True
    for kind in ("gaussian", "salt_pepper", "multiplicative"):
        _, worm = _series(report, "WORM", kind)
        _, knn = _series(report, "KNN(k=1)", kind)
        ok &= worm[-1] >= knn[-1] - KNN_MARGIN
        details.append(f"{kind}: WORM {worm[-1]:.3f} vs 1-NN {knn[-1]:.3f}")
    record_criterion(5, "WORM >= 1-NN - 2pp at highest noise", ok, "; ".join(details))
    assert ok


def test_c6_basis_selection(record_criterion):
    rng = np.random.default_rng(6)
    taus = np.linspace(0.05, 1.0, 20)
    orth = 0.0
    minimal = True
    monotone = True
    for _ in range(100):
        m = int(rng.integers(5, 40))
        n = int(rng.integers(1, 15))
        rank = int(rng.integers(1, min(m, n) + 1))
        A = rng.standard_normal((m, rank)) @ rng.standard_normal((rank, n)) * rng.uniform(0.1, 5.0)
        profile = energy_profile(A)
        ks = []
        for tau in taus:
            d = select_basis(A, tau)
            orth = max(orth, np.max(np.abs(d.basis.T @ d.basis - np.eye(d.k))))
            minimal &= profile[d.k - 1] >= tau and (d.k == 1 or profile[d.k - 2] < tau)
            minimal &= d.k == brute_force_energy_rank(list(np.linalg.svd(A, compute_uv=False)[: profile.size]), tau)
            ks.append(d.k)
        monotone &= ks == sorted(ks)
    ok = orth <= 1e-10 and minimal and monotone
    record_criterion(6, "basis orthonormality, threshold minimality, k monotone in tau", ok, f"orth {orth:.1e}")
    assert orth <= 1e-10
    assert minimal
    assert monotone


DETERMINISM_CONFIG = """
n_test = 200
trials = 2
svm.epochs = 5
"""


def test_c7_bench_run_deterministic(tmp_path, record_criterion):
    cfg = tmp_path / "det.cfg"
    cfg.write_text(DETERMINISM_CONFIG)
    outputs = []
    for run, workers in enumerate(("1", "1", "2")):
        out = tmp_path / f"run{run}"
        assert main(["bench", "run", str(cfg), "--out", str(out), "--workers", workers]) == 0
        outputs.append((out / "report.csv").read_bytes())
    ok = outputs[0] == outputs[1] == outputs[2]
    record_criterion(7, "byte-identical report.csv across runs and under 2 workers", ok, f"{len(outputs[0])} bytes")
    assert ok


def test_c8_feature_identities(record_criterion):
    rng = np.random.default_rng(8)
    tele = 0.0
    corr = 0.0
    for _ in range(200):
        x = rng.standard_normal(int(rng.integers(2, 2049))) * rng.uniform(0.01, 100.0)
        mag = np.abs(np.fft.fft(x))
        d = differential_spectrum(x)
        tele = max(tele, abs(d.sum() - (mag[-1] - mag[0])) / mag.max())
        corr = max(corr, abs(adjacent_channel_fourier_correlation(x, x) - 1.0))
    ok = tele <= 1e-10 and corr <= 1e-12
    record_criterion(8, "telescoping differential spectrum, self-correlation 1", ok, f"tele {tele:.1e}, corr {corr:.1e}")
    assert tele <= 1e-10
    assert corr <= 1e-12
