import numpy as np
import pytest

from gflowlab import plots


class TestScatterSVG:
    def test_single_sample_single_circle(self, tmp_path):
        path = tmp_path / "one.svg"
        plots.emit_scatter_svg(np.array([[0.3, 0.7]]), np.array([[1.0, 0.0]]),
                               "angle", path)
        text = path.read_text()
        assert text.count("<circle") == 1
        assert text.startswith("<svg")

    def test_circle_count_matches_samples(self, tmp_path):
        rng = np.random.default_rng(0)
        n = 137
        path = tmp_path / "many.svg"
        plots.emit_scatter_svg(rng.random((n, 2)), rng.random((n, 2)), "density", path)
        assert path.read_text().count("<circle") == n

    def test_angle_ramp_endpoints(self, tmp_path):
        # w=(1,0) maps to the blue end, w=(0,1) to the green end
        path = tmp_path / "ends.svg"
        plots.emit_scatter_svg(np.array([[0.2, 0.2], [0.8, 0.8]]),
                               np.array([[1.0, 0.0], [0.0, 1.0]]), "angle", path)
        text = path.read_text()
        assert plots.brg_color(0.0) in text  # pure blue
        assert plots.brg_color(1.0) in text  # pure green
        assert plots.brg_color(0.0) == "#0000ff"
        assert plots.brg_color(1.0) == "#00ff00"
        assert plots.brg_color(0.5) == "#ff0000"

    def test_density_bins_sum_to_sample_count(self):
        rng = np.random.default_rng(1)
        pts = rng.random((513, 2))
        counts = plots.density_bin_counts(pts)
        assert counts.shape == (64, 64)
        assert counts.sum() == 513

    def test_empty_log_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            plots.emit_scatter_svg(np.zeros((0, 2)), np.zeros((0, 2)), "angle",
                                   tmp_path / "x.svg")

    def test_k3_panels_per_pair(self, tmp_path):
        rng = np.random.default_rng(2)
        path = tmp_path / "k3.svg"
        n = 10
        plots.emit_scatter_svg(rng.random((n, 3)), rng.random((n, 3)), "angle", path)
        text = path.read_text()
        # 3 objective pairs -> 3 panels -> 3 circles per sample
        assert text.count("<circle") == 3 * n
        assert text.count("<rect") == 3

    def test_unknown_coloring(self, tmp_path):
        with pytest.raises(ValueError):
            plots.emit_scatter_svg(np.ones((1, 2)), np.ones((1, 2)), "rainbow",
                                   tmp_path / "x.svg")


class TestReportFigures:
    def test_learning_curves(self, tmp_path):
        log = [{"step": s, "mean_loss": 1.0 / (s + 1), "logZ_mean": -5.0 + s,
                "goal_accuracy": 0.5, "in_focus_fraction": 0.6,
                "zero_reward_fraction": 0.1} for s in range(0, 100, 10)]
        path = tmp_path / "curves.png"
        plots.learning_curves_png(log, path)
        assert path.stat().st_size > 1000

    def test_comparison_grid(self, tmp_path):
        rng = np.random.default_rng(3)
        cells = {("goal", "concave"): {"rewards": rng.random((50, 2)),
                                       "payloads": rng.random((50, 2))}}
        path = tmp_path / "grid.png"
        plots.comparison_grid_png(cells, ["concave"], ["goal", "pref"], "angle", path)
        assert path.exists()

    def test_mg_sweep(self, tmp_path):
        path = tmp_path / "mg.png"
        plots.mg_sweep_png([1.0, 0.5, 0.2, 0.05], [0.991, 0.995, 0.998, 0.999], path)
        assert path.exists()
