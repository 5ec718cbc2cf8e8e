import hashlib

import numpy as np
import pytest

from conftest import disk_image, natural_image
from salientcut import cache, saliencycut
from salientcut.errors import ManifestMissing, MissingEntry, StaleEntry
from salientcut.imagecore import write_png


def seeded_dir(tmp_path, n=4, size=48):
    d = tmp_path / "images"
    d.mkdir()
    for i in range(n):
        write_png(d / f"img{i:02d}.png", natural_image(size, size, seed=i))
    return d


class TestHashImage:
    def test_golden_digest_1x1_black(self):
        img = np.zeros((1, 1, 3), np.uint8)
        assert cache.hash_image(img) == (
            "bcffb4a338c6ff61e905cd77587c9ee8"
            "0758d887bde1f51c45a9068b69e113bc")

    def test_matches_manual_construction(self, rng):
        img = rng.integers(0, 256, (5, 7, 3), dtype=np.uint8)
        digest = hashlib.sha256()
        for v in (7, 5, 3):
            digest.update(v.to_bytes(4, "little"))
        digest.update(img.tobytes())
        assert cache.hash_image(img) == digest.hexdigest()

    def test_dims_disambiguate_same_bytes(self):
        flat = np.arange(24, dtype=np.uint8)
        a = flat.reshape(2, 4, 3)
        b = flat.reshape(4, 2, 3)
        assert cache.hash_image(a) != cache.hash_image(b)

    def test_single_pixel_change_flips_hash(self, rng):
        img = rng.integers(0, 256, (8, 8, 3), dtype=np.uint8)
        other = img.copy()
        other[3, 3, 1] ^= 1
        assert cache.hash_image(img) != cache.hash_image(other)

    def test_noncontiguous_view_same_hash(self, rng):
        img = rng.integers(0, 256, (8, 8, 3), dtype=np.uint8)
        view = img[::1, ::1]  # contiguous
        flipped_back = img[:, ::-1][:, ::-1]
        assert cache.hash_image(flipped_back) == cache.hash_image(img)


class TestBuildCache:
    def test_dedupe_identical_pixels(self, tmp_path):
        d = tmp_path / "images"
        d.mkdir()
        img, _ = disk_image(48)
        for name in ("a.png", "b.png", "c.png"):
            write_png(d / name, img)
        manifest, stats = cache.build_cache(d, tmp_path / "cache")
        assert len(manifest.entries) == 1
        assert stats.computed == 1

    def test_idempotent_rerun(self, tmp_path):
        d = seeded_dir(tmp_path, n=3)
        root = tmp_path / "cache"
        _, first = cache.build_cache(d, root)
        assert first.computed == 3
        _, second = cache.build_cache(d, root)
        assert second.computed == 0
        assert second.skipped == 3

    def test_map_files_land_in_fanout_dirs(self, tmp_path):
        d = seeded_dir(tmp_path, n=2)
        root = tmp_path / "cache"
        manifest, _ = cache.build_cache(d, root)
        for key, entry in manifest.entries.items():
            assert entry.rel_path == f"maps/{key[:2]}/{key}.png"
            assert (root / entry.rel_path).exists()

    def test_changed_params_recompute(self, tmp_path):
        d = seeded_dir(tmp_path, n=2)
        root = tmp_path / "cache"
        cache.build_cache(d, root)
        params = saliencycut.CutParams(threshold=90)
        manifest, stats = cache.build_cache(d, root, params=params)
        assert stats.computed == 2
        assert manifest.params_fingerprint == params.fingerprint()

    def test_empty_dir_raises(self, tmp_path):
        (tmp_path / "empty").mkdir()
        with pytest.raises(FileNotFoundError):
            cache.build_cache(tmp_path / "empty", tmp_path / "cache")

    def test_parallel_build_matches_serial(self, tmp_path):
        d = seeded_dir(tmp_path, n=3, size=40)
        r1 = tmp_path / "serial"
        r2 = tmp_path / "parallel"
        m1, _ = cache.build_cache(d, r1, jobs=1)
        m2, _ = cache.build_cache(d, r2, jobs=2)
        assert sorted(m1.entries) == sorted(m2.entries)
        for key in m1.entries:
            b1 = (r1 / m1.entries[key].rel_path).read_bytes()
            b2 = (r2 / m2.entries[key].rel_path).read_bytes()
            assert b1 == b2


class TestManifest:
    def test_round_trip(self, tmp_path):
        m = cache.CacheManifest(params_fingerprint="deadbeefdeadbeef")
        m.entries["k" * 64] = cache.ManifestEntry("k" * 64, "maps/kk/x.png",
                                                  10, 20, 1234.5)
        m.write(tmp_path)
        loaded = cache.CacheManifest.read(tmp_path)
        assert loaded.params_fingerprint == "deadbeefdeadbeef"
        e = loaded.entries["k" * 64]
        assert (e.rel_path, e.width, e.height) == ("maps/kk/x.png", 10, 20)

    def test_missing_raises(self, tmp_path):
        with pytest.raises(ManifestMissing):
            cache.CacheManifest.read(tmp_path)

    def test_header_is_versioned(self, tmp_path):
        m = cache.CacheManifest(params_fingerprint="abc")
        m.write(tmp_path)
        first = (tmp_path / cache.MANIFEST_NAME).read_text().splitlines()[0]
        assert first == "cache.v1\tabc"


class TestCacheStore:
    def test_fetch_without_jitter_matches_inline_cut(self, tmp_path):
        d = seeded_dir(tmp_path, n=2)
        root = tmp_path / "cache"
        cache.build_cache(d, root)
        store = cache.CacheStore(root)
        for i in range(2):
            img = natural_image(48, 48, seed=i)
            cached = store.fetch(img, jitter=False)
            direct, _ = saliencycut.cut_to_colormap(img, store.params,
                                                    colormap_seed=0)
            assert cached.tobytes() == direct.tobytes()

    def test_strict_miss_raises(self, tmp_path):
        d = seeded_dir(tmp_path, n=1)
        root = tmp_path / "cache"
        cache.build_cache(d, root)
        store = cache.CacheStore(root, strict=True)
        with pytest.raises(MissingEntry):
            store.lookup(natural_image(48, 48, seed=99))

    def test_lenient_miss_computes_inline(self, tmp_path):
        d = seeded_dir(tmp_path, n=1)
        root = tmp_path / "cache"
        cache.build_cache(d, root)
        store = cache.CacheStore(root, strict=False)
        img = natural_image(48, 48, seed=99)
        out = store.fetch(img, jitter=False)
        direct, _ = saliencycut.cut_to_colormap(img, store.params)
        assert out.tobytes() == direct.tobytes()

    def test_stale_entry_on_dimension_mismatch(self, tmp_path):
        d = seeded_dir(tmp_path, n=1)
        root = tmp_path / "cache"
        manifest, _ = cache.build_cache(d, root)
        key = next(iter(manifest.entries))
        manifest.entries[key].width += 1
        manifest.write(root)
        store = cache.CacheStore(root, strict=True)
        with pytest.raises(StaleEntry):
            store.lookup(natural_image(48, 48, seed=0))

    def test_preload_serves_from_memory(self, tmp_path):
        d = seeded_dir(tmp_path, n=2)
        root = tmp_path / "cache"
        cache.build_cache(d, root)
        store = cache.CacheStore(root, preload=True)
        # delete the map files: preloaded store must still answer
        for entry in store.manifest.entries.values():
            (root / entry.rel_path).unlink()
        img = natural_image(48, 48, seed=1)
        assert store.fetch(img, jitter=False).shape == img.shape

    def test_jitter_preserves_partition(self, tmp_path):
        from test_augment import canonical_partition
        d = seeded_dir(tmp_path, n=1)
        root = tmp_path / "cache"
        cache.build_cache(d, root)
        store = cache.CacheStore(root)
        img = natural_image(48, 48, seed=0)
        plain = store.fetch(img, jitter=False)
        jit = store.fetch(img, seed=7, jitter=True)
        assert (canonical_partition(plain) == canonical_partition(jit)).all()


class TestVerify:
    def test_pristine_zero_findings(self, tmp_path):
        d = seeded_dir(tmp_path, n=3)
        root = tmp_path / "cache"
        cache.build_cache(d, root)
        report = cache.verify(root)
        assert report.findings == 0
        assert report.checked == 3

    def test_deleted_file_reported(self, tmp_path):
        d = seeded_dir(tmp_path, n=2)
        root = tmp_path / "cache"
        manifest, _ = cache.build_cache(d, root)
        victim = next(iter(manifest.entries.values()))
        (root / victim.rel_path).unlink()
        report = cache.verify(root)
        assert report.missing_files == [victim.key]
        assert report.findings == 1

    def test_params_drift_reported(self, tmp_path):
        d = seeded_dir(tmp_path, n=1)
        root = tmp_path / "cache"
        cache.build_cache(d, root)
        report = cache.verify(root, params=saliencycut.CutParams(threshold=99))
        assert report.params_drift
        assert report.findings == 1
