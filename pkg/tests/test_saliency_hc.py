import numpy as np

from salientcut import quantize, saliency_hc


def brute_force_hc(img, coverage=1.0):
    """O(n^2)-over-colors oracle: per-pixel raw salience via explicit
    pairwise loops over the reduced palette."""
    idx, pal = quantize.palette_for_image(img, coverage)
    lab = pal.lab_colors()
    freqs = pal.merged_freqs / pal.merged_freqs.sum()
    n = pal.size
    color_sal = np.zeros(n)
    for k in range(n):
        for j in range(n):
            if j != k:
                color_sal[k] += freqs[j] * np.linalg.norm(lab[k] - lab[j])
    return color_sal[idx]


def random_few_color_image(rng, size=32, n_colors=16):
    colors = rng.integers(0, 256, (n_colors, 3), dtype=np.uint8)
    pick = rng.integers(0, n_colors, (size, size))
    return colors[pick]


class TestHcSaliency:
    def test_uniform_is_zero(self):
        img = np.full((16, 16, 3), 77, np.uint8)
        out = saliency_hc.hc_saliency(img)
        assert (out.values == 0).all()
        assert (out.raw == 0).all()

    def test_two_color_90_10(self):
        img = np.full((10, 10, 3), (20, 20, 200), np.uint8)
        img.reshape(-1, 3)[:10] = (200, 20, 20)  # 10% minority
        out = saliency_hc.hc_saliency(img, coverage=1.0)
        minority = img[..., 0] == 200
        raw_min = out.raw[minority][0]
        raw_maj = out.raw[~minority][0]
        # minority sees 0.9*D, majority sees 0.1*D
        assert abs(raw_min / raw_maj - 9.0) < 1e-9
        assert (out.values[minority] == 255).all()
        assert (out.values[~minority] == 0).all()

    def test_matches_brute_force(self, rng):
        for _ in range(10):
            img = random_few_color_image(rng)
            out = saliency_hc.hc_saliency(img, coverage=1.0)
            expect = brute_force_hc(img)
            denom = np.maximum(np.abs(expect), 1e-300)
            assert (np.abs(out.raw - expect) / denom < 1e-9).all()

    def test_permutation_invariance(self, rng):
        img = random_few_color_image(rng)
        out = saliency_hc.hc_saliency(img, coverage=1.0)
        perm = rng.permutation(img.shape[0] * img.shape[1])
        shuffled = img.reshape(-1, 3)[perm].reshape(img.shape)
        out2 = saliency_hc.hc_saliency(shuffled, coverage=1.0)
        assert np.allclose(np.sort(out.raw.ravel()), np.sort(out2.raw.ravel()))

    def test_tiling_invariance(self, rng):
        img = random_few_color_image(rng, size=16)
        tiled = np.tile(img, (2, 2, 1))
        out = saliency_hc.hc_saliency(img, coverage=1.0)
        out_tiled = saliency_hc.hc_saliency(tiled, coverage=1.0)
        assert np.allclose(out_tiled.raw[:16, :16], out.raw)


class TestSmoothing:
    def test_m1_identity(self, rng):
        img = random_few_color_image(rng, n_colors=8)
        _, pal = quantize.palette_for_image(img, 1.0)
        raw = saliency_hc.palette_color_saliency(pal)
        assert (saliency_hc.smooth_color_saliency(raw, pal, 1) == raw).all()

    def test_two_colors_move_together(self):
        img = np.full((10, 10, 3), (20, 20, 200), np.uint8)
        img.reshape(-1, 3)[:30] = (200, 20, 20)
        _, pal = quantize.palette_for_image(img, 1.0)
        raw = saliency_hc.palette_color_saliency(pal)
        sm = saliency_hc.smooth_color_saliency(raw, pal, 2)
        lo, hi = sorted(raw)
        assert (sm >= lo - 1e-12).all() and (sm <= hi + 1e-12).all()
        assert abs(sm[0] - sm[1]) < abs(raw[0] - raw[1])

    def test_smoothed_map_still_normalizes(self, rng):
        img = random_few_color_image(rng)
        out = saliency_hc.hc_saliency(img, coverage=1.0, smooth_m=3)
        assert out.values.min() == 0 and out.values.max() == 255
