import numpy as np
import pytest

from wavefilter.batch import (
    BatchSample,
    build_hilbert_filters,
    fit_batch,
    predict_derivative,
    predict_pure_batch,
)
from wavefilter.filters import augment_hint, build_filter_bank, featurize_batch
from wavefilter.hankel import hilbert_matrix
from wavefilter.lds import LdsParams, simulate


def random_diagonal_system(rng, d=5, n=2, m=2):
    b = rng.standard_normal((d, n))
    b /= np.linalg.norm(b)
    c = rng.standard_normal((m, d))
    c /= np.linalg.norm(c)
    return LdsParams(
        a=rng.uniform(0, 1, d), b=b, c=c,
        d=0.3 * rng.standard_normal((m, n)), h0=np.zeros(d),
    )


def make_samples(rng, params, bank, N):
    samples = []
    for _ in range(N):
        xs = rng.standard_normal((bank.horizon, params.input_dim))
        traj = simulate(params, xs)
        samples.append(BatchSample.from_trajectory(traj))
    return samples


class TestFitBatch:
    def test_planted_model_recovered(self):
        rng = np.random.default_rng(0)
        T, k, n, m = 100, 6, 2, 2
        bank = build_filter_bank(T, k)
        width = n * k + 2 * n
        m_true = 0.3 * rng.standard_normal((m, width))
        samples = []
        for _ in range(4):
            xs = rng.standard_normal((T, n))
            feats = featurize_batch(xs, bank).entries
            samples.append(BatchSample(inputs=xs, targets=feats @ m_true.T))
        model = fit_batch(samples, bank, ridge=1e-10)
        mse = 0.0
        for s in samples:
            feats = featurize_batch(s.inputs, bank).entries
            mse += float(((s.targets - feats @ model.matrix.T) ** 2).mean())
        assert mse / len(samples) <= 1e-6

    def test_zero_targets_zero_model(self):
        rng = np.random.default_rng(1)
        bank = build_filter_bank(50, 4)
        xs = rng.standard_normal((50, 2))
        model = fit_batch(
            [BatchSample(inputs=xs, targets=np.zeros((50, 2)))], bank, ridge=1e-6
        )
        assert np.abs(model.matrix).max() <= 1e-12

    def test_noiseless_system_fits_well(self):
        rng = np.random.default_rng(2)
        T, k, N = 200, 20, 4
        bank = build_filter_bank(T, k)
        params = random_diagonal_system(rng)
        samples = make_samples(rng, params, bank, N)
        model = fit_batch(samples, bank)
        mse = 0.0
        for s in samples:
            feats = featurize_batch(s.inputs, bank).entries
            mse += float(((s.targets - feats @ model.matrix.T) ** 2).mean())
        assert mse / N <= 1e-4

    def test_ridge_monotonicity(self):
        rng = np.random.default_rng(3)
        bank = build_filter_bank(80, 6)
        params = random_diagonal_system(rng)
        samples = make_samples(rng, params, bank, 2)
        residuals = []
        for ridge in (1e-8, 1e-4, 1e-1, 10.0):
            model = fit_batch(samples, bank, ridge=ridge)
            total = 0.0
            for s in samples:
                feats = featurize_batch(s.inputs, bank).entries
                total += float(((s.targets - feats @ model.matrix.T) ** 2).sum())
            residuals.append(total)
        assert all(b >= a - 1e-12 for a, b in zip(residuals, residuals[1:]))

    def test_zero_features_without_ridge_raise(self):
        bank = build_filter_bank(20, 3)
        samples = [BatchSample(inputs=np.zeros((20, 1)), targets=np.ones((20, 1)))]
        with pytest.raises(np.linalg.LinAlgError):
            fit_batch(samples, bank, ridge=0.0)

    def test_needs_a_sample(self):
        bank = build_filter_bank(20, 3)
        with pytest.raises(ValueError):
            fit_batch([], bank)


class TestPredictions:
    def test_zero_features_zero_prediction(self):
        rng = np.random.default_rng(4)
        bank = build_filter_bank(30, 3)
        params = random_diagonal_system(rng)
        model = fit_batch(make_samples(rng, params, bank, 2), bank)
        width = model.matrix.shape[1]
        assert predict_derivative(model, np.zeros(width)) == pytest.approx(
            np.zeros(2)
        )

    def test_linearity(self):
        rng = np.random.default_rng(5)
        bank = build_filter_bank(30, 3)
        params = random_diagonal_system(rng)
        model = fit_batch(make_samples(rng, params, bank, 2), bank)
        width = model.matrix.shape[1]
        u, v = rng.standard_normal(width), rng.standard_normal(width)
        lhs = predict_derivative(model, 2 * u + 3 * v)
        rhs = 2 * predict_derivative(model, u) + 3 * predict_derivative(model, v)
        assert lhs == pytest.approx(rhs, rel=1e-10)

    def test_pure_batch_accumulates(self):
        rng = np.random.default_rng(6)
        bank = build_filter_bank(30, 3)
        params = random_diagonal_system(rng)
        model = fit_batch(make_samples(rng, params, bank, 2), bank)
        width = model.matrix.shape[1]
        feats = np.tile(rng.standard_normal(width), (7, 1))
        out = predict_pure_batch(model, feats)
        step = predict_derivative(model, feats[0])
        for t in range(7):
            assert out[t] == pytest.approx((t + 1) * step, rel=1e-10)

    def test_pure_batch_error_grows_at_most_linearly(self):
        rng = np.random.default_rng(7)
        T, k = 200, 20
        bank = build_filter_bank(T, k)
        params = random_diagonal_system(rng)
        train = make_samples(rng, params, bank, 6)
        model = fit_batch(train, bank)
        xs = rng.standard_normal((T, 2))
        traj = simulate(params, xs)
        feats = featurize_batch(xs, bank).entries
        preds = predict_pure_batch(model, feats)
        per_step = np.abs(
            predict_derivative(model, feats) - traj.output_differences()
        ).max()
        err = np.linalg.norm(preds - traj.outputs, axis=1)
        ts = np.arange(1, T + 1)
        assert np.all(err <= ts * per_step * np.sqrt(2) + 1e-12)

    def test_zero_model_zero_outputs(self):
        rng = np.random.default_rng(8)
        bank = build_filter_bank(30, 3)
        xs = rng.standard_normal((30, 2))
        model = fit_batch(
            [BatchSample(inputs=xs, targets=np.zeros((30, 2)))], bank, ridge=1e-6
        )
        feats = featurize_batch(xs, bank).entries
        assert np.abs(predict_pure_batch(model, feats)).max() <= 1e-10


class TestHilbertFilters:
    def test_base_matrix_displayed_values(self):
        expected = np.array(
            [[1, 1 / 2, 1 / 3], [1 / 2, 1 / 3, 1 / 4], [1 / 3, 1 / 4, 1 / 5]]
        )
        assert np.abs(hilbert_matrix(3, -1) - expected).max() == 0.0

    def test_two_by_two_eigenvalues(self):
        bank = build_hilbert_filters(2, 2)
        assert bank.sigmas == pytest.approx([1.26760, 0.06573], abs=1e-4)

    def test_positive_and_decaying(self):
        bank = build_hilbert_filters(40, 12)
        assert bank.sigmas.min() > 0
        assert np.all(np.diff(bank.sigmas) < 0)

    def test_interchangeable_in_fit(self):
        rng = np.random.default_rng(9)
        T = 150
        bank = build_hilbert_filters(T, 15)
        params = random_diagonal_system(rng)
        samples = make_samples(rng, params, bank, 4)
        model = fit_batch(samples, bank)
        mse = 0.0
        for s in samples:
            feats = featurize_batch(s.inputs, bank).entries
            mse += float(((s.targets - feats @ model.matrix.T) ** 2).mean())
        assert mse / len(samples) <= 1e-3


class TestHiddenStateHints:
    def test_hints_restore_realizability(self):
        rng = np.random.default_rng(10)
        T, k, N, d = 150, 15, 5, 4
        params_base = random_diagonal_system(rng, d=d)
        bank_plain = build_filter_bank(T, k)
        bank_hint = build_filter_bank(T + 1, k)

        plain, hinted = [], []
        for _ in range(N):
            h0 = rng.standard_normal(d)
            h0 *= 2.0 / np.linalg.norm(h0)
            params = LdsParams(
                a=params_base.a, b=params_base.b, c=params_base.c,
                d=params_base.d, h0=h0,
            )
            xs = rng.standard_normal((T, 2))
            traj = simulate(params, xs)
            plain.append(BatchSample.from_trajectory(traj))
            aug = augment_hint(xs, h0)
            ys = np.vstack([np.zeros((1, 2)), traj.outputs])
            diffs = np.vstack([np.zeros((1, 2)), np.diff(ys, axis=0)])[1:]
            targets = np.vstack([np.zeros((1, 2)), diffs])
            hinted.append(BatchSample(inputs=aug, targets=targets))

        def mse(samples, bank):
            model = fit_batch(samples, bank)
            total, count = 0.0, 0
            for s in samples:
                feats = featurize_batch(s.inputs, bank).entries
                resid = s.targets - feats @ model.matrix.T
                total += float((resid**2).sum())
                count += resid.size
            return total / count

        with_hint = mse(hinted, bank_hint)
        without = mse(plain, bank_plain)
        assert with_hint <= 1e-4
        assert without > with_hint * 100
