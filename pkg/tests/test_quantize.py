import numpy as np
import pytest

from salientcut import quantize
from salientcut.errors import DimensionMismatch, EmptyHistogram
from salientcut.imagecore import rgb_to_lab_colors


def two_color_image(frac, c1=(200, 30, 30), c2=(30, 30, 200), size=32):
    img = np.full((size, size, 3), c2, dtype=np.uint8)
    n_fg = int(round(frac * size * size))
    flat = img.reshape(-1, 3)
    flat[:n_fg] = c1
    return img


class TestQuantizeImage:
    def test_black_lowest_bin(self):
        q = quantize.quantize_image(np.zeros((1, 1, 3), np.uint8))
        assert q[0, 0] == 0

    def test_white_highest_bin(self):
        q = quantize.quantize_image(np.full((1, 1, 3), 255, np.uint8))
        assert q[0, 0] == 1727

    def test_bin_count_bounded(self, rng):
        img = rng.integers(0, 256, (64, 64, 3), dtype=np.uint8)
        q = quantize.quantize_image(img)
        assert q.min() >= 0 and q.max() <= 1727
        assert len(np.unique(q)) <= 1728

    def test_requantizing_representatives_is_stable(self, rng):
        img = rng.integers(0, 256, (32, 32, 3), dtype=np.uint8)
        hist = quantize.build_histogram(quantize.quantize_image(img), img)
        reps = np.clip(np.round(hist.rep_colors), 0, 255).astype(np.uint8)
        requant = quantize.quantize_image(reps[None, :, :])[0]
        assert (requant == hist.bins).all()


class TestBuildHistogram:
    def test_uniform_image(self):
        img = np.full((8, 8, 3), 100, np.uint8)
        hist = quantize.build_histogram(quantize.quantize_image(img), img)
        assert len(hist.bins) == 1
        assert hist.freqs[0] == 1.0
        assert np.allclose(hist.rep_colors[0], [100, 100, 100])

    def test_75_25_split(self):
        img = two_color_image(0.75)
        hist = quantize.build_histogram(quantize.quantize_image(img), img)
        assert np.allclose(sorted(hist.freqs, reverse=True), [0.75, 0.25])

    def test_freqs_sum_to_one(self, rng):
        img = rng.integers(0, 256, (32, 32, 3), dtype=np.uint8)
        hist = quantize.build_histogram(quantize.quantize_image(img), img)
        assert abs(hist.freqs.sum() - 1.0) < 1e-9
        assert (np.diff(hist.freqs) <= 0).all()

    def test_dimension_mismatch(self):
        img = np.zeros((4, 4, 3), np.uint8)
        with pytest.raises(DimensionMismatch):
            quantize.build_histogram(np.zeros((5, 5), np.int32), img)


class TestReduceHistogram:
    def test_coverage_one_keeps_everything(self, rng):
        img = rng.integers(0, 256, (16, 16, 3), dtype=np.uint8)
        hist = quantize.build_histogram(quantize.quantize_image(img), img)
        pal = quantize.reduce_histogram(hist, 1.0)
        assert pal.size == len(hist.bins)
        assert (pal.remap[pal.bins] == np.arange(pal.size)).all()

    def test_three_color_hand_case(self):
        img = np.zeros((10, 10, 3), np.uint8)
        flat = img.reshape(-1, 3)
        flat[:80] = (250, 10, 10)   # 0.80
        flat[80:95] = (10, 250, 10)  # 0.15
        flat[95:] = (10, 10, 250)   # 0.05
        hist = quantize.build_histogram(quantize.quantize_image(img), img)
        pal = quantize.reduce_histogram(hist, 0.95)
        assert pal.size == 2
        assert np.allclose(sorted(pal.freqs, reverse=True), [0.80, 0.15])
        # dropped blue remaps to whichever retained color is closer in Lab
        lab = rgb_to_lab_colors(hist.rep_colors)
        dropped = lab[2]
        dists = [np.linalg.norm(lab[0] - dropped), np.linalg.norm(lab[1] - dropped)]
        expect = int(np.argmin(dists))
        blue_bin = hist.bins[2]
        assert pal.remap[blue_bin] == expect
        assert abs(pal.merged_freqs[expect] - (pal.freqs[expect] + 0.05)) < 1e-12

    def test_prefix_and_minimality(self, rng):
        img = rng.integers(0, 256, (32, 32, 3), dtype=np.uint8)
        hist = quantize.build_histogram(quantize.quantize_image(img), img)
        for coverage in (0.5, 0.8, 0.95):
            pal = quantize.reduce_histogram(hist, coverage)
            k = pal.size
            assert (pal.bins == hist.bins[:k]).all()
            assert pal.freqs.sum() >= coverage - 1e-12
            if k > 1:
                assert hist.freqs[: k - 1].sum() < coverage

    def test_remap_total_over_occupied(self, rng):
        img = rng.integers(0, 256, (32, 32, 3), dtype=np.uint8)
        q = quantize.quantize_image(img)
        hist = quantize.build_histogram(q, img)
        pal = quantize.reduce_histogram(hist, 0.6)
        assert (pal.remap[np.unique(q)] >= 0).all()
        assert abs(pal.merged_freqs.sum() - 1.0) < 1e-9

    def test_empty_histogram(self):
        empty = quantize.ColorHistogram(
            bins=np.empty(0, np.int32), freqs=np.empty(0),
            rep_colors=np.empty((0, 3)))
        with pytest.raises(EmptyHistogram):
            quantize.reduce_histogram(empty, 0.95)

    def test_bad_coverage(self):
        img = np.zeros((2, 2, 3), np.uint8)
        hist = quantize.build_histogram(quantize.quantize_image(img), img)
        with pytest.raises(ValueError):
            quantize.reduce_histogram(hist, 0.0)


class TestPaletteManifest:
    def test_round_trip(self, tmp_path, rng):
        img = rng.integers(0, 256, (16, 16, 3), dtype=np.uint8)
        _, pal = quantize.palette_for_image(img, 0.9)
        path = tmp_path / "palette.tsv"
        quantize.save_palette(path, pal)
        loaded = quantize.load_palette(path)
        assert (loaded.bins == pal.bins).all()
        assert np.allclose(loaded.rep_colors, pal.rep_colors, atol=1e-6)
        assert np.allclose(loaded.freqs, pal.freqs, atol=1e-9)

    def test_version_guard(self, tmp_path):
        path = tmp_path / "palette.tsv"
        path.write_text("palette.v999\n")
        with pytest.raises(ValueError):
            quantize.load_palette(path)
