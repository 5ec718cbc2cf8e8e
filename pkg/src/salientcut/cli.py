"""Command line surface: saliency maps, full cuts, cache administration,
batch augmentation, and timing benchmarks.

Exit codes: 0 success, 2 I/O or decode error, 3 usage/parameter error,
4 cache-consistency failure. Logs go to stderr; data to stdout/files.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import fields
from pathlib import Path

import numpy as np

from . import cache as cache_mod
from .augment import apply_policy, get_policy, load_policy
from .errors import (ManifestMissing, MissingEntry, SalientCutError,
                     StaleEntry, VersionMismatch)
from .imagecore import read_image, resize, write_png
from .saliencycut import (CutParams, compute_saliency, cut_to_colormap,
                          saliency_cut)

EXIT_OK = 0
EXIT_IO = 2
EXIT_USAGE = 3
EXIT_CACHE = 4


def log(msg: str) -> None:
    print(msg, file=sys.stderr)


def load_params(args) -> CutParams:
    overrides = {}
    if getattr(args, "params", None):
        with open(args.params) as f:
            overrides.update(json.load(f))
    if getattr(args, "mode", None):
        overrides["saliency_mode"] = args.mode
    if getattr(args, "threshold", None) is not None:
        overrides["threshold"] = args.threshold
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    known = {f.name for f in fields(CutParams)}
    bad = set(overrides) - known
    if bad:
        raise ValueError(f"unknown parameter(s): {sorted(bad)}")
    return CutParams(**overrides)


def cmd_saliency(args) -> int:
    params = load_params(args)
    img = read_image(args.input)
    t0 = time.perf_counter()
    smap = compute_saliency(img, params)
    log(f"saliency[{params.saliency_mode}] {img.shape[1]}x{img.shape[0]} "
        f"in {time.perf_counter() - t0:.3f}s")
    write_png(args.out, smap.values)
    return EXIT_OK


def cmd_cut(args) -> int:
    params = load_params(args)
    img = read_image(args.input)
    t0 = time.perf_counter()
    mask, report = saliency_cut(img, params)
    log(f"cut {img.shape[1]}x{img.shape[0]} in {time.perf_counter() - t0:.3f}s, "
        f"{report.iterations} iterations, status={report.status}")
    if report.status != "ok":
        log("warning: no salient object found; writing all-background mask")
    for i, (ch, en) in enumerate(zip(report.change_fractions, report.energies)):
        log(f"  iter {i}: changed={ch:.5f} energy={en:.4f}")
    write_png(args.out_mask, (mask.astype(np.uint8) * 255))
    if args.out_colormap:
        rendered, _ = cut_to_colormap(img, params, colormap_seed=args.seed or 0)
        write_png(args.out_colormap, rendered)
    return EXIT_OK


def cmd_cache(args) -> int:
    params = load_params(args)
    if args.action == "build":
        if not args.dir:
            raise ValueError("cache build requires --dir")
        manifest, stats = cache_mod.build_cache(
            args.dir, args.cache, params=params, jobs=args.jobs)
        log(f"cache build: {stats.computed} computed, {stats.skipped} skipped, "
            f"{stats.no_salient} without salient object")
        print(f"{len(manifest.entries)} entries")
        return EXIT_OK
    if args.action == "verify":
        report = cache_mod.verify(args.cache, params=params,
                                  sample_fraction=args.sample)
        print(f"checked={report.checked} missing={len(report.missing_files)} "
              f"mismatched={len(report.hash_mismatches)} "
              f"params_drift={report.params_drift}")
        return EXIT_OK if report.findings == 0 else EXIT_CACHE
    # stats
    manifest = cache_mod.CacheManifest.read(Path(args.cache))
    total = sum((Path(args.cache) / e.rel_path).stat().st_size
                for e in manifest.entries.values()
                if (Path(args.cache) / e.rel_path).exists())
    print(f"entries={len(manifest.entries)} bytes={total} "
          f"params={manifest.params_fingerprint}")
    return EXIT_OK


def cmd_augment(args) -> int:
    if Path(args.policy).exists():
        policy = load_policy(args.policy)
    else:
        policy = get_policy(args.policy)
    params = load_params(args)
    store = None
    if args.cache:
        store = cache_mod.CacheStore(args.cache, strict=args.strict_cache,
                                     preload=args.preload, params=params)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = cache_mod.list_images(args.input)
    if not paths:
        raise FileNotFoundError(f"no images under {args.input}")
    for p in paths:
        img = read_image(p)
        out = apply_policy(img, policy, seed=args.seed or 0, cache=store,
                           cut_params=params)
        write_png(out_dir / (p.stem + ".png"), out)
    log(f"augmented {len(paths)} images with policy {policy.name}")
    return EXIT_OK


def _parse_size(text: str) -> tuple[int, int]:
    w, h = text.lower().split("x")
    return int(w), int(h)


def cmd_bench(args) -> int:
    params = load_params(args)
    rng = np.random.default_rng(args.seed or 0)
    base = rng.integers(0, 256, size=(512, 512, 3), dtype=np.uint8)
    # structured content so the cut has an object to find
    yy, xx = np.mgrid[0:512, 0:512]
    base[(xx - 256) ** 2 + (yy - 256) ** 2 < 120 ** 2] = (230, 60, 40)
    print(f"{'size':>12} {'mean_s':>10} {'std_s':>10}")
    for size in args.sizes:
        w, h = _parse_size(size)
        img = resize(base, w, h)
        times = []
        for _ in range(args.reps):
            t0 = time.perf_counter()
            saliency_cut(img, params)
            times.append(time.perf_counter() - t0)
        mean = float(np.mean(times))
        std = float(np.std(times)) if args.reps > 1 else 0.0
        print(f"{size:>12} {mean:>10.3f} {std:>10.3f}")
    if args.cache:
        store = cache_mod.CacheStore(args.cache, preload=True, params=params)
        keys = sorted(store.manifest.entries)[: min(50, len(store.manifest.entries))]
        times = []
        for key in keys:
            entry = store.manifest.entries[key]
            img = store._read_map(entry)
            t0 = time.perf_counter()
            store.fetch(img, seed=1, jitter=True)
            times.append(time.perf_counter() - t0)
        if times:
            print(f"{'cached':>12} {float(np.mean(times)):>10.5f} "
                  f"{float(np.std(times)):>10.5f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="salientcut")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--params", help="JSON file of CutParams overrides")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--mode", choices=["hc", "rc"], default=None)
        p.add_argument("--threshold", type=int, default=None)

    p = sub.add_parser("saliency", help="write an HC or RC saliency PNG")
    p.add_argument("input")
    p.add_argument("out")
    common(p)
    p.set_defaults(func=cmd_saliency)

    p = sub.add_parser("cut", help="full iterative segmentation")
    p.add_argument("input")
    p.add_argument("out_mask")
    p.add_argument("--out-colormap", dest="out_colormap")
    common(p)
    p.set_defaults(func=cmd_cut)

    p = sub.add_parser("cache", help="cache administration")
    p.add_argument("action", choices=["build", "verify", "stats"])
    p.add_argument("cache", help="cache root directory")
    p.add_argument("--dir", help="image directory (build)")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--sample", type=float, default=1.0)
    common(p)
    p.set_defaults(func=cmd_cache)

    p = sub.add_parser("augment", help="batch policy application")
    p.add_argument("input", help="input image directory")
    p.add_argument("out", help="output directory")
    p.add_argument("--policy", required=True, help="preset name or config path")
    p.add_argument("--cache", help="cache root for the SGD op")
    p.add_argument("--strict-cache", action="store_true")
    p.add_argument("--preload", action="store_true")
    p.add_argument("--jobs", type=int, default=1)
    common(p)
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("bench", help="timing table across image sizes")
    p.add_argument("--sizes", nargs="+", default=["60x45", "600x450"])
    p.add_argument("--reps", type=int, default=1)
    p.add_argument("--cache", help="also time warm cached fetches")
    common(p)
    p.set_defaults(func=cmd_bench)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except (ManifestMissing, MissingEntry, StaleEntry, VersionMismatch) as e:
        log(f"cache error: {e}")
        return EXIT_CACHE
    except (FileNotFoundError, OSError, SalientCutError) as e:
        log(f"error: {e}")
        return EXIT_IO
    except (ValueError, KeyError) as e:
        log(f"parameter error: {e}")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
