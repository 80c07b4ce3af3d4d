import numpy as np
import pytest

from calibench.regress import (CvReport, MlpArch, fold_indices, format_sweep_table,
                               hyperparam_sweep, kfold_cv, linear_trainer, mlp_trainer,
                               sweep_csv_lines)


def make_affine(n=120, seed=0, noise=0.0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, 6))
    C = rng.normal(size=(6, 3))
    Y = X @ C + rng.normal(size=3)
    if noise:
        Y = Y + rng.normal(0.0, noise, Y.shape)
    return X, Y


class TestKfold:
    def test_perfect_predictor_scores_zero(self):
        X, Y = make_affine()
        report = kfold_cv((X, Y), 10, linear_trainer())
        assert np.allclose(report.fold_losses, 0.0, atol=1e-18)

    def test_constant_predictor_matches_target_variance(self):
        rng = np.random.default_rng(1)
        X = rng.normal(size=(4000, 6))
        Y = rng.normal(size=(4000, 3))  # zero-mean, unit variance per axis

        def trainer(Xtr, Ytr, seed):
            mean = Ytr.mean(axis=0)
            return lambda Xq: np.tile(mean, (len(Xq), 1))

        report = kfold_cv((X, Y), 10, trainer)
        # expected loss = sum of per-axis variances = 3
        assert report.mean == pytest.approx(3.0, rel=0.1)

    def test_folds_partition_indices(self):
        folds = fold_indices(103, 10, seed=4)
        joined = np.sort(np.concatenate(folds))
        assert np.array_equal(joined, np.arange(103))

    def test_k_bounds(self):
        X, Y = make_affine(n=8)
        with pytest.raises(ValueError):
            kfold_cv((X, Y), 9, linear_trainer())
        with pytest.raises(ValueError):
            kfold_cv((X, Y), 1, linear_trainer())

    def test_mean_equals_pooled_for_deterministic_predictor(self):
        rng = np.random.default_rng(2)
        X = rng.normal(size=(100, 6))
        Y = rng.normal(size=(100, 3))
        fixed = rng.normal(size=3)

        def trainer(Xtr, Ytr, seed):
            return lambda Xq: np.tile(fixed, (len(Xq), 1))

        report = kfold_cv((X, Y), 10, trainer)
        pooled = float(np.mean(np.sum((Y - fixed) ** 2, axis=1)))
        assert report.mean == pytest.approx(pooled, abs=1e-12)

    def test_parallel_equals_serial(self):
        X, Y = make_affine(noise=0.5)
        a = kfold_cv((X, Y), 8, linear_trainer(), seed=3)
        b = kfold_cv((X, Y), 8, linear_trainer(), seed=3, n_workers=4)
        assert np.array_equal(a.fold_losses, b.fold_losses)

    def test_noise_floor_rises_by_three_sigma_squared(self):
        # target noise sigma on 3 axes raises the best achievable CV loss
        # by about 3 sigma^2 on data a linear model can otherwise fit exactly
        sigma = 0.7
        X, Y = make_affine(n=2000, seed=5)
        Xn, Yn = make_affine(n=2000, seed=5, noise=sigma)
        base = kfold_cv((X, Y), 10, linear_trainer(), seed=0).mean
        noisy = kfold_cv((Xn, Yn), 10, linear_trainer(), seed=0).mean
        assert (noisy - base) == pytest.approx(3 * sigma ** 2, rel=0.2)

    def test_report_requires_matching_k(self):
        with pytest.raises(ValueError):
            CvReport(np.zeros(3), 4)


@pytest.fixture(scope="module")
def sweep_results():
    X, Y = make_affine(n=60, seed=7, noise=0.3)
    return hyperparam_sweep((X, Y), epochs=3, k=3, seed=0)


class TestSweep:
    def test_evaluates_all_24_configs(self, sweep_results):
        assert len(sweep_results) == 24
        labels = {arch.label for arch, _ in sweep_results}
        assert len(labels) == 24

    def test_covers_the_full_grid(self, sweep_results):
        archs = {(a.hidden_layers, a.width, a.activation) for a, _ in sweep_results}
        assert archs == {(d, w, a) for d in (1, 2, 3, 4) for w in (30, 300)
                         for a in ("relu", "sigmoid", "tanh")}

    def test_sorted_by_mean_ascending(self, sweep_results):
        means = [r.mean for _, r in sweep_results]
        assert means == sorted(means)

    def test_report_formats(self, sweep_results):
        text = format_sweep_table(sweep_results, top=12)
        assert len(text.splitlines()) == 13  # header + 12 rows
        csv = sweep_csv_lines(sweep_results)
        assert len(csv) == 25
        assert csv[0].startswith("config,")
