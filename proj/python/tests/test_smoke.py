import json

import numpy as np
import pytest

import tamperkit as tk


def _texture(seed, shape=(96, 96)):
    rng = np.random.default_rng(seed)
    base = rng.random((shape[0] // 8, shape[1] // 8))
    return np.kron(base, np.ones((8, 8)))


def test_identical_images_score_perfectly():
    a = _texture(1, (128, 128))
    assert tk.mae(a, a) == 0.0
    assert tk.ssim(a, a) == pytest.approx(1.0)
    assert tk.cw_ssim(a, a) == pytest.approx(1.0)
    assert tk.hog_similarity(a, a) == pytest.approx(1.0)


def test_score_pair_returns_all_metrics():
    a = _texture(2, (176, 176))
    b = np.clip(a + 0.2 * (_texture(3, (176, 176)) - 0.5), 0, 1)
    scores = tk.score_pair(a, b, "none")
    assert set(scores) == {"mae", "ssim", "msssim", "cwssim", "hog"}
    for value, dissimilarity in scores.values():
        assert np.isfinite(value) and np.isfinite(dissimilarity)
    assert scores["ssim"][0] < 1.0


def test_homogenize_shapes_and_unknown_method():
    rgb = np.stack([_texture(4)] * 3, axis=-1)
    x, y = tk.homogenize(rgb, rgb, "meanch")
    assert x.shape == rgb.shape and y.shape == rgb.shape
    with pytest.raises(ValueError):
        tk.homogenize(rgb, rgb, "sharpen")


def test_png_round_trip(tmp_path):
    a = np.round(_texture(5) * 255) / 255
    path = tmp_path / "a.png"
    tk.write_png(path, a)
    assert np.array_equal(tk.read_png(path), a)


def test_rectify_axis_aligned_quad_matches_resize():
    img = _texture(6, (64, 64))
    corners = np.array([[-0.5, -0.5], [63.5, -0.5], [63.5, 63.5], [-0.5, 63.5]])
    out = tk.rectify_face(img, corners, 64)
    assert out.shape == (64, 64)
    assert np.abs(out - img).max() < 1e-9


def test_stump_and_auc_on_separable_data():
    labels = [False] * 5 + [True] * 5
    feature = [0.1, 0.2, 0.15, 0.05, 0.3, 0.6, 0.7, 0.8, 0.65, 0.9]
    stump = tk.train_stump({"ssim": feature}, labels)
    assert stump["metric"] == "ssim"
    assert stump["train_accuracy"] == 1.0
    assert 0.3 <= stump["threshold"] <= 0.6
    assert tk.roc_auc(feature, labels) == pytest.approx(1.0)


def test_oks_is_one_for_identical_keypoints():
    kp = np.array([[10.0 * i, 5.0 * i, 2] for i in range(8)])
    assert tk.oks(kp, kp, 400.0) == pytest.approx(1.0)


def test_error_kind_is_exposed(tmp_path):
    with pytest.raises(tk.TamperkitError) as info:
        tk.read_png(tmp_path / "missing.png")
    assert info.value.kind


def test_benchmark_and_cli(tmp_path):
    out = tmp_path / "bench"
    summary = tk.generate_benchmark(out, n_parcels=1, images_per_parcel=2, seed=3, image_size=200)
    assert summary["parcels"] == 1 and summary["images"] == 2
    records = tk.load_annotations(out / "annotations.json")
    assert len(records) >= 2
    assert records[0]["keypoints"].shape == (8, 3)

    code, _, _ = tk.run_cli(["score", "--pairs", str(out / "pairs" / "pairs.csv"), "--methods", "none",
                             "--out", str(tmp_path / "scores.csv")])
    assert code == 0
    header = (tmp_path / "scores.csv").read_text().splitlines()[0]
    assert "pair_id" in header

    code, _, err = tk.run_cli(["score", "--methods", "bogus"])
    assert code == 2 and err
