import numpy as np
import pytest
from hypothesis import given, strategies as st
from sklearn.cross_decomposition import CCA
from sklearn.linear_model import Ridge

from ctae.datasets import (GroundTruth, RegionRecording, SyntheticSpec, bin_spikes,
                           check_recordings, gaussian_kernel, gaussian_smooth,
                           generate_synthetic, load_dataset, load_ground_truth,
                           lowdin_orthonormalize, read_event_list, save_dataset,
                           save_ground_truth, split_trials, train_val_test)


# -- binning ------------------------------------------------------------------

def test_bin_spikes_conventions():
    rec = bin_spikes([[[], []]], 100, 5)
    assert rec.kind == "counts" and np.array_equal(rec.values, np.zeros((1, 2, 5)))
    rec = bin_spikes([[[0.05]]], 100, 3)
    assert rec.values[0, 0].tolist() == [1, 0, 0]
    rec = bin_spikes([[[0.1, 0.0999, 0.3]]], 100, 4)
    assert rec.values[0, 0].tolist() == [1, 1, 0, 1]
    with pytest.raises(ValueError):
        bin_spikes([[[-0.01]]], 100, 3)
    with pytest.raises(ValueError):
        bin_spikes([[[0.5]]], 100, 5)


def test_bin_spikes_rate_matches_counting_oracle():
    rng = np.random.default_rng(0)
    n_bins = 2000
    times = np.sort(rng.uniform(0, n_bins * 0.1, size=rng.poisson(10 * n_bins * 0.1)))
    rec = bin_spikes([[times]], 100, n_bins)
    oracle = np.array([np.sum((times >= t * 0.1) & (times < (t + 1) * 0.1))
                       for t in range(n_bins)])
    assert rec.values.sum() == times.size
    assert np.abs(rec.values[0, 0] - oracle).sum() <= 2  # float edges
    mean = rec.values.mean()
    assert abs(mean - 1.0) <= 3 * np.sqrt(1.0 / n_bins)


def test_read_event_list(tmp_path):
    path = tmp_path / "events.txt"
    path.write_text("# trial channel time\n0 0 0.05\n0,1,0.25\n\n1 1 0.15  # late\n")
    events = read_event_list(str(path))
    assert events == [[[0.05], [0.25]], [[], [0.15]]]
    rec = bin_spikes(events, 100, 3)
    assert rec.values[:, :, :].sum() == 3 and rec.values[1, 1, 1] == 1
    with pytest.raises(ValueError):
        read_event_list(["0 1"])
    assert read_event_list([]) == []


# -- smoothing ----------------------------------------------------------------

def test_gaussian_kernel_values():
    taps = gaussian_kernel(1)
    raw = np.exp(-0.5 * (np.array([-1.0, 0.0, 1.0]) / 0.5) ** 2)
    assert np.allclose(taps, raw / raw.sum(), rtol=0, atol=1e-15)
    assert gaussian_kernel(3).size == 7
    assert gaussian_kernel(3).sum() == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(ValueError):
        gaussian_kernel(0)


def test_smoothing_constant_and_impulse():
    const = RegionRecording(np.full((2, 3, 10), 4.2))
    assert np.allclose(gaussian_smooth(const, 3).values, 4.2, rtol=0, atol=1e-14)
    impulse = np.zeros((1, 1, 9))
    impulse[0, 0, 4] = 1.0
    out = gaussian_smooth(RegionRecording(impulse), 1).values[0, 0]
    taps = gaussian_kernel(1)
    assert np.allclose(out[3:6], taps, rtol=0, atol=1e-15)
    assert np.all(out[:3] == 0) and np.all(out[6:] == 0)


@given(st.integers(0, 2**31 - 1), st.integers(1, 4))
def test_smoothing_reduces_total_variation_and_commutes_with_permutation(seed, size):
    rng = np.random.default_rng(seed)
    values = rng.standard_normal((4, 3, 20))
    rec = RegionRecording(values, labels=np.arange(4))
    out = gaussian_smooth(rec, size)
    tv = lambda v: np.abs(np.diff(v, axis=2)).sum(axis=2)
    assert np.all(tv(out.values) <= tv(values) + 1e-12)
    perm = rng.permutation(4)
    assert np.array_equal(gaussian_smooth(rec.subset(perm), size).values, out.values[perm])


def test_bin_then_smooth_commutes_with_trial_permutation():
    rng = np.random.default_rng(5)
    events = [[np.sort(rng.uniform(0, 1.0, 5)) for _ in range(2)] for _ in range(6)]
    perm = rng.permutation(6)
    a = gaussian_smooth(bin_spikes(events, 100, 10), 2).values[perm]
    b = gaussian_smooth(bin_spikes([events[i] for i in perm], 100, 10), 2).values
    assert np.array_equal(a, b)


# -- recordings and files -----------------------------------------------------

def test_recording_validation():
    with pytest.raises(ValueError):
        RegionRecording(np.zeros((2, 3)))
    with pytest.raises(ValueError):
        RegionRecording(np.full((1, 1, 2), np.nan))
    with pytest.raises(ValueError):
        RegionRecording(np.full((1, 1, 2), 0.5), kind="counts")
    with pytest.raises(ValueError):
        RegionRecording(np.zeros((2, 1, 2)), labels=[0])
    with pytest.raises(ValueError):
        RegionRecording(np.zeros((2, 1, 2)), targets=np.zeros((2, 1, 3)))
    with pytest.raises(ValueError):
        check_recordings([np.zeros((2, 1, 3))])
    with pytest.raises(ValueError):
        check_recordings([np.zeros((2, 1, 3)), np.zeros((3, 1, 3))])
    with pytest.raises(ValueError):
        check_recordings([np.zeros((2, 1, 3)), np.zeros((2, 1, 4))])
    recs = check_recordings([np.zeros((2, 1, 3)), np.ones((2, 4, 3))])
    assert [r.region for r in recs] == ["region0", "region1"]


def test_dataset_roundtrip(tmp_path):
    recs, _ = generate_synthetic(SyntheticSpec(n_trials=16, n_timesteps=12, channels=(9, 10),
                                               n_conditions=4))
    path = tmp_path / "data.ctae"
    save_dataset(path, recs)
    back = load_dataset(path)
    for a, b in zip(recs, back):
        assert np.array_equal(a.values, b.values)
        assert np.array_equal(a.labels, b.labels)
        assert np.array_equal(a.targets, b.targets)
        assert (a.region, a.bin_width_ms, a.kind) == (b.region, b.bin_width_ms, b.kind)


# -- synthetic generator ------------------------------------------------------

def test_lowdin_orthonormalize(rng):
    rows = rng.standard_normal((5, 30))
    out = lowdin_orthonormalize(rows)
    assert np.allclose(out @ out.T / 30, np.eye(5), rtol=0, atol=1e-12)
    with pytest.raises(np.linalg.LinAlgError):
        lowdin_orthonormalize(np.vstack([rows[:2], rows[:1]]))


def test_planted_latents_orthonormal_per_trial():
    _, truth = generate_synthetic(SyntheticSpec(n_trials=40))
    gram = np.einsum("kdt,ket->kde", truth.latents, truth.latents) / 30
    off = gram * (1 - np.eye(9))
    assert np.abs(off).max() <= 1e-10
    assert truth.shared.shape == (40, 3, 30)
    assert truth.private(0).shape == truth.private(1).shape == (40, 3, 30)
    assert np.array_equal(truth.block("11"), truth.shared)


def test_generator_shapes_labels_and_determinism():
    spec = SyntheticSpec(n_trials=50, n_conditions=8)
    a, ta = generate_synthetic(spec)
    b, tb = generate_synthetic(spec)
    for x, y in zip(a, b):
        assert np.array_equal(x.values, y.values)
    assert np.array_equal(ta.latents, tb.latents)
    counts = np.bincount(ta.labels, minlength=8)
    assert counts.max() - counts.min() <= 1
    assert a[0].values.shape == (50, 40, 30)
    c, _ = generate_synthetic(SyntheticSpec(n_trials=50, seed=1))
    assert not np.array_equal(a[0].values, c[0].values)


def test_generator_validation():
    with pytest.raises(ValueError):
        SyntheticSpec(channels=(2, 40))
    with pytest.raises(ValueError):
        SyntheticSpec(mixing="relu")


def test_linear_noiseless_private_data_has_block_rank():
    spec = SyntheticSpec(subset_sizes={"10": 3, "01": 4}, mixing="linear", noise_std=0.0,
                         n_trials=20, n_conditions=1, channels=(12, 12))
    recs, _ = generate_synthetic(spec)
    for rec, d in zip(recs, (3, 4)):
        flat = np.transpose(rec.values, (1, 0, 2)).reshape(rec.n_channels, -1)
        assert np.linalg.matrix_rank(flat, tol=1e-8) == d


def test_shared_dims_give_high_canonical_correlations():
    spec = SyntheticSpec(subset_sizes={"11": 2, "10": 3, "01": 3}, noise_std=0.05,
                         n_trials=100, seed=2)
    recs, _ = generate_synthetic(spec)
    x, y = (np.transpose(r.values, (0, 2, 1)).reshape(-1, r.n_channels) for r in recs)
    cca = CCA(n_components=4, max_iter=2000).fit(x, y)
    u, v = cca.transform(x, y)
    corr = sorted((abs(np.corrcoef(u[:, i], v[:, i])[0, 1]) for i in range(4)),
                  reverse=True)
    assert corr[0] > 0.9 and corr[1] > 0.9


def _cross_region_r2(recs):
    x, y = (np.transpose(r.values, (0, 2, 1)).reshape(-1, r.n_channels) for r in recs)
    half = x.shape[0] // 2
    model = Ridge(alpha=1.0).fit(x[:half], y[:half])
    resid = y[half:] - model.predict(x[half:])
    return 1 - (resid ** 2).sum() / ((y[half:] - y[half:].mean(0)) ** 2).sum()


def test_shared_dims_raise_cross_region_predictability():
    with_shared, _ = generate_synthetic(SyntheticSpec(n_trials=60, seed=4))
    control, _ = generate_synthetic(SyntheticSpec(
        subset_sizes={"10": 6, "01": 6}, n_trials=60, seed=4, n_conditions=1))
    assert _cross_region_r2(with_shared) > _cross_region_r2(control) + 0.2


def test_three_region_generator_and_truth_roundtrip(tmp_path):
    spec = SyntheticSpec(n_regions=3, subset_sizes={"111": 2, "110": 1, "100": 1,
                                                     "010": 1, "001": 1},
                         channels=(8, 8, 8), n_trials=24)
    recs, truth = generate_synthetic(spec)
    assert len(recs) == 3 and truth.latents.shape == (24, 6, 30)
    path = tmp_path / "truth.ctae"
    save_ground_truth(path, truth, spec)
    back = load_ground_truth(path)
    assert isinstance(back, GroundTruth)
    assert np.array_equal(back.latents, truth.latents)
    assert np.array_equal(back.labels, truth.labels)
    assert np.array_equal(back.mask.W, truth.mask.W)
    for a, b in zip(back.mixing, truth.mixing):
        assert sorted(a) == sorted(b) and all(np.array_equal(a[k], b[k]) for k in a)


# -- splits -------------------------------------------------------------------

def test_split_examples():
    labels = np.array([0, 1] * 5)
    folds = split_trials(10, 5, labels, seed=3)
    for f in folds:
        assert sorted(labels[f].tolist()) == [0, 1]
    tr, va, te = train_val_test(200, seed=0)
    assert (tr.size, va.size, te.size) == (140, 30, 30)
    with pytest.raises(ValueError):
        split_trials(6, 5, np.array([0, 0, 0, 0, 0, 1]))
    with pytest.raises(ValueError):
        split_trials(10, [0.8, 0.5])
    with pytest.raises(ValueError):
        split_trials(10, 1)


@given(st.integers(20, 300), st.integers(2, 8), st.integers(0, 2**31 - 1),
       st.sampled_from([2, 5, (0.7, 0.15), (0.5, 0.5), (0.6, 0.2, 0.2)]))
def test_split_partition_and_stratification(n, n_classes, seed, fractions):
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, n_classes, n)
    try:
        parts = split_trials(n, fractions, labels, seed=seed)
    except ValueError as err:
        assert "no trial of class" in str(err) or "empty" in str(err)
        return
    joined = np.concatenate(parts)
    assert np.array_equal(np.sort(joined), np.arange(n))
    weights = (np.full(fractions, 1 / fractions) if isinstance(fractions, int)
               else np.array(fractions + ((1 - sum(fractions),) if sum(fractions) < 1 - 1e-9
                                          else ())))
    for part, w in zip(parts, weights):
        assert abs(part.size - w * n) < n_classes + 1
        for c in np.unique(labels):
            expected = w * np.sum(labels == c)
            assert abs(np.sum(labels[part] == c) - expected) < 1 + 1e-9
    again = split_trials(n, fractions, labels, seed=seed)
    assert all(np.array_equal(a, b) for a, b in zip(parts, again))
