import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kernelreach import (
    RECIPROCAL_M,
    FitConfig,
    KernelSpec,
    ModelFormatError,
    SampleSet,
    classify,
    classify_batch,
    decision_threshold,
    decision_value,
    decision_values,
    fit,
    kernel_eval,
    load_model,
    save_model,
)


def _random_model(seed, m=40, n=3, bandwidth=0.4, regularization=RECIPROCAL_M):
    rng = np.random.default_rng(seed)
    samples = SampleSet(rng.normal(size=(m, n)))
    return samples, fit(samples, FitConfig(KernelSpec("abel", bandwidth), regularization))


def _dense_inverse_value(samples, lam, spec, x):
    # independent oracle: explicit dense inverse of G + M lambda I
    pts = samples.points
    m = pts.shape[0]
    g = np.array([[kernel_eval(spec, pts[i], pts[j]) for j in range(m)] for i in range(m)])
    a_inv = np.linalg.inv(g + m * lam * np.eye(m))
    phi = np.array([kernel_eval(spec, pts[i], x) for i in range(m)])
    return float(phi @ a_inv @ phi)


def test_sampleset_validation():
    with pytest.raises(ValueError):
        SampleSet(np.empty((0, 2)))
    with pytest.raises(ValueError):
        SampleSet(np.array([[1.0, np.nan]]))
    s = SampleSet(np.array([[1.0, 2.0]]), provenance="unit")
    assert s.size == 1 and s.dim == 2 and s.provenance == "unit"


def test_lambda_rules():
    assert FitConfig(regularization=RECIPROCAL_M).resolve_lambda(100) == 0.01
    assert FitConfig(regularization=2.5).resolve_lambda(100) == 2.5
    with pytest.raises(ValueError):
        FitConfig(regularization=0.0).resolve_lambda(10)
    with pytest.raises(ValueError):
        FitConfig(regularization="half").resolve_lambda(10)


def test_fit_single_point_closed_form():
    # G = [[1]], A = [[1 + lambda]], F(x1) = 1/(1 + lambda)
    samples = SampleSet(np.array([[0.7, -0.2]]))
    model = fit(samples, FitConfig(KernelSpec("abel", 0.1), 1.0))
    assert model.train_values[0] == pytest.approx(0.5, abs=1e-12)
    assert model.tau == pytest.approx(0.5, abs=1e-12)
    assert np.allclose(model.factor @ model.factor.T, [[2.0]], rtol=1e-10)
    # the reciprocal rule resolves to the same lambda = 1 at M = 1
    via_rule = fit(samples, FitConfig(KernelSpec("abel", 0.1), RECIPROCAL_M))
    assert via_rule.lam == 1.0
    assert via_rule.tau == pytest.approx(0.5, abs=1e-12)


def test_fit_two_coincident_points():
    # symbolic 2x2 solve with Phi = (1, 1) gives both values 1/(1 + lambda)
    lam = 0.5
    samples = SampleSet(np.array([[1.0, 1.0], [1.0, 1.0]]))
    model = fit(samples, FitConfig(KernelSpec("abel", 0.1), lam))
    assert model.train_values == pytest.approx([1 / (1 + lam)] * 2, abs=1e-12)
    assert decision_threshold(model) == pytest.approx(lam / (1 + lam), abs=1e-12)
    assert model.tau == pytest.approx(1.0 / 3.0, abs=1e-12)


def test_single_point_decision_general_query():
    samples = SampleSet(np.array([[0.3, 0.4]]))
    spec = KernelSpec("abel", 0.1)
    model = fit(samples, FitConfig(spec, 1.0))
    x = np.array([0.35, 0.38])
    expected = kernel_eval(spec, samples.points[0], x) ** 2 / 2.0
    assert decision_value(model, x) == pytest.approx(expected, abs=1e-12)


def test_factor_reconstructs_regularized_gram():
    samples, model = _random_model(0, m=60)
    a = model.factor @ model.factor.T
    g = np.array(
        [
            [kernel_eval(model.kernel, p, q) for q in samples.points]
            for p in samples.points
        ]
    )
    expected = g + samples.size * model.lam * np.eye(samples.size)
    assert np.allclose(a, expected, rtol=1e-10)


def test_decision_matches_dense_inverse_oracle():
    rng = np.random.default_rng(5)
    samples, model = _random_model(5, m=50, n=4)
    for _ in range(20):
        x = rng.normal(size=4)
        expected = _dense_inverse_value(samples, model.lam, model.kernel, x)
        assert decision_value(model, x) == pytest.approx(expected, abs=1e-8)


def test_decision_value_nonnegative():
    _, model = _random_model(9, m=80, n=2, bandwidth=0.05)
    rng = np.random.default_rng(10)
    values = decision_values(model, rng.normal(scale=50.0, size=(200, 2)))
    assert np.all(values >= 0.0)


def test_training_points_classify_inside():
    for seed in range(5):
        samples, model = _random_model(seed, m=30)
        assert all(classify(model, p) for p in samples.points)
        assert classify_batch(model, samples.points).all()


def test_single_point_membership_is_razor_thin():
    # with one sample the estimated set collapses to (nearly) that point
    samples = SampleSet(np.array([[0.0, 0.0]]))
    model = fit(samples, FitConfig(KernelSpec("abel", 0.1), 1.0))
    assert classify(model, [0.0, 0.0])
    assert not classify(model, [0.1, 0.0])
    assert not classify(model, [0.001, 0.0])


def test_far_points_classify_outside():
    samples, model = _random_model(2, m=20, n=2)
    assert model.tau < 1.0
    assert not classify(model, np.array([1e3, -1e3]))


def test_optional_level_override():
    samples, model = _random_model(3, m=20, n=2)
    # level 0 admits everything nonnegative; level > 1 rejects everything
    assert classify(model, np.array([50.0, 50.0]), level=0.0)
    assert not classify(model, samples.points[0], level=1.5)
    assert classify_batch(model, samples.points, level=0.0).all()


def test_classify_batch_empty():
    _, model = _random_model(4)
    assert classify_batch(model, np.empty((0, 3))).shape == (0,)
    assert decision_values(model, []).shape == (0,)


def test_classify_batch_equals_sequential():
    _, model = _random_model(6, m=35, n=2)
    rng = np.random.default_rng(8)
    points = rng.normal(scale=2.0, size=(1000, 2))
    batch = classify_batch(model, points)
    sequential = np.array([classify(model, p) for p in points])
    assert np.array_equal(batch, sequential)
    assert np.array_equal(
        decision_values(model, points), [decision_value(model, p) for p in points]
    )


def test_permutation_invariance():
    rng = np.random.default_rng(12)
    pts = rng.normal(size=(40, 3))
    queries = rng.normal(size=(100, 3))
    config = FitConfig(KernelSpec("abel", 0.3), RECIPROCAL_M)
    base = decision_values(fit(SampleSet(pts), config), queries)
    shuffled = decision_values(fit(SampleSet(pts[rng.permutation(40)]), config), queries)
    assert np.max(np.abs(base - shuffled)) <= 1e-10


def test_translation_invariance():
    rng = np.random.default_rng(13)
    pts = rng.normal(size=(30, 2))
    queries = rng.normal(size=(100, 2))
    shift = np.array([3.7, -1.9])
    config = FitConfig(KernelSpec("abel", 0.2), RECIPROCAL_M)
    base = decision_values(fit(SampleSet(pts), config), queries)
    shifted = decision_values(fit(SampleSet(pts + shift), config), queries + shift)
    assert np.max(np.abs(base - shifted)) <= 1e-9


@given(st.integers(0, 2**32 - 1), st.integers(1, 200), st.integers(1, 4))
@settings(max_examples=25, deadline=None)
def test_train_values_bounded(seed, m, n):
    rng = np.random.default_rng(seed)
    samples = SampleSet(rng.normal(size=(m, n)))
    model = fit(samples, FitConfig(KernelSpec("abel", 0.3), RECIPROCAL_M))
    assert np.all(model.train_values >= 0.0)
    assert np.all(model.train_values <= 1.0 + 1e-12)
    assert 0.0 <= model.tau <= 1.0


def test_tau_monotone_in_lambda_single_point():
    samples = SampleSet(np.array([[1.0, 2.0]]))
    taus = [
        fit(samples, FitConfig(KernelSpec(), lam)).tau for lam in (0.1, 1.0, 10.0)
    ]
    expected = [lam / (1 + lam) for lam in (0.1, 1.0, 10.0)]
    assert taus == pytest.approx(expected, abs=1e-12)
    assert taus[0] < taus[1] < taus[2]


def test_query_validation():
    _, model = _random_model(14)
    with pytest.raises(ValueError):
        decision_value(model, [1.0, 2.0])  # model dim is 3
    with pytest.raises(ValueError):
        decision_value(model, [np.nan, 0.0, 0.0])
    with pytest.raises(ValueError):
        classify_batch(model, np.full((2, 3), np.inf))


def test_fit_rejects_nonfinite_samples():
    with pytest.raises(ValueError):
        SampleSet(np.array([[1.0], [np.inf]]))


def test_save_load_round_trip(tmp_path):
    samples, model = _random_model(21, m=25, n=2)
    path = tmp_path / "model.json"
    save_model(model, path)
    loaded = load_model(path)

    assert np.array_equal(loaded.support, model.support)
    assert loaded.kernel == model.kernel
    assert loaded.lam == model.lam
    assert loaded.tau == model.tau

    rng = np.random.default_rng(22)
    queries = rng.normal(size=(100, 2))
    before = decision_values(model, queries)
    after = decision_values(loaded, queries)
    assert np.max(np.abs(before - after)) <= 1e-12
    assert classify_batch(loaded, samples.points).all()


def test_model_file_schema(tmp_path):
    # the on-disk document carries exactly the documented fields
    _, model = _random_model(30, m=6, n=3)
    path = tmp_path / "model.json"
    save_model(model, path)
    doc = json.loads(path.read_text())
    assert set(doc) == {
        "format_version", "kernel_family", "bandwidth", "lambda",
        "tau", "m", "n", "support", "checksum",
    }
    assert doc["format_version"] == 1
    assert doc["kernel_family"] == "abel"
    assert doc["m"] == 6 and doc["n"] == 3
    assert len(doc["support"]) == 18
    assert doc["support"] == [float(v) for v in model.support.ravel()]


def test_load_truncated_file(tmp_path):
    _, model = _random_model(23, m=5, n=2)
    path = tmp_path / "model.json"
    save_model(model, path)
    text = path.read_text()
    path.write_text(text[: len(text) // 2])
    with pytest.raises(ModelFormatError):
        load_model(path)


def test_load_future_version(tmp_path):
    _, model = _random_model(24, m=5, n=2)
    path = tmp_path / "model.json"
    save_model(model, path)
    doc = json.loads(path.read_text())
    doc["format_version"] = 2
    path.write_text(json.dumps(doc))
    with pytest.raises(ModelFormatError, match="version"):
        load_model(path)


def test_load_checksum_mismatch(tmp_path):
    _, model = _random_model(25, m=5, n=2)
    path = tmp_path / "model.json"
    save_model(model, path)
    doc = json.loads(path.read_text())
    doc["support"][0] += 1.0
    path.write_text(json.dumps(doc))
    with pytest.raises(ModelFormatError, match="checksum"):
        load_model(path)


def test_concurrent_queries_share_one_model():
    # decision paths only read immutable state, so threads must agree bitwise
    from concurrent.futures import ThreadPoolExecutor

    _, model = _random_model(27, m=60, n=2)
    rng = np.random.default_rng(28)
    chunks = [rng.normal(size=(200, 2)) for _ in range(8)]
    expected = [decision_values(model, c) for c in chunks]
    with ThreadPoolExecutor(max_workers=4) as pool:
        results = list(pool.map(lambda c: decision_values(model, c), chunks))
    for got, want in zip(results, expected):
        assert np.array_equal(got, want)


def test_model_arrays_immutable():
    _, model = _random_model(26, m=5, n=2)
    with pytest.raises(ValueError):
        model.support[0, 0] = 9.0
    with pytest.raises(ValueError):
        model.factor[0, 0] = 9.0
