#!/usr/bin/env python3
"""Build the natural-texture acceptance dataset.

Each scene tiles a 481x321 canvas into M smooth blob-shaped regions and fills
region i with the co-located pixels of a different colour photograph, so the
ground truth is exact while region statistics are those of real images.
Some scenes get a second annotation with jittered boundaries, mimicking a
second human annotator.

Usage: make_texture_dataset.py OUT_DIR [--count 12] [--seed 2024]
"""

import argparse
import json
from pathlib import Path

import numpy as np
from PIL import Image
from scipy import ndimage
from skimage import data
from sklearn.datasets import load_sample_images

WIDTH, HEIGHT = 481, 321


def photo_sources():
    photos = {
        name: getattr(data, name)()
        for name in ("astronaut", "chelsea", "coffee", "rocket", "hubble_deep_field",
                     "immunohistochemistry", "retina", "stereo_motorcycle")
    }
    photos["stereo_motorcycle"] = photos["stereo_motorcycle"][0]
    china, flower = load_sample_images().images
    photos["china"] = china
    photos["flower"] = flower
    return photos


def fit_canvas(photo, rng):
    """Random crop with the canvas aspect ratio, resized to the canvas."""
    h, w = photo.shape[:2]
    scale = rng.uniform(0.6, 1.0)
    ch = int(min(h, w * HEIGHT / WIDTH) * scale)
    cw = int(ch * WIDTH / HEIGHT)
    top = rng.integers(0, h - ch + 1)
    left = rng.integers(0, w - cw + 1)
    crop = Image.fromarray(photo[top:top + ch, left:left + cw, :3])
    return np.asarray(crop.resize((WIDTH, HEIGHT), Image.Resampling.LANCZOS))


def smooth_noise(rng, sigma):
    field = ndimage.gaussian_filter(rng.standard_normal((HEIGHT, WIDTH)), sigma)
    return field / (np.abs(field).max() + 1e-12)


def layout(rng, regions, warp, jitter=None):
    """Label field 1..regions from warped nearest-centre assignment."""
    centres = rng.uniform([0, 0], [HEIGHT, WIDTH], size=(regions, 2))
    noise_r, noise_c = smooth_noise(rng, 30), smooth_noise(rng, 30)
    if jitter is not None:
        noise_r = noise_r + jitter[0]
        noise_c = noise_c + jitter[1]
    rows, cols = np.mgrid[0:HEIGHT, 0:WIDTH].astype(float)
    rows += warp * noise_r
    cols += warp * noise_c
    dist = (rows[None] - centres[:, 0, None, None]) ** 2 + (cols[None] - centres[:, 1, None, None]) ** 2
    return dist.argmin(axis=0) + 1, (centres, noise_r, noise_c)


def largest_components(labels, regions):
    """Keep each region's largest component; fill the rest from neighbours."""
    out = np.zeros_like(labels)
    for k in range(1, regions + 1):
        comp, n = ndimage.label(labels == k)
        if n == 0:
            continue
        sizes = ndimage.sum(np.ones_like(comp), comp, index=range(1, n + 1))
        out[comp == 1 + int(np.argmax(sizes))] = k
    holes = out == 0
    if holes.any():
        idx = ndimage.distance_transform_edt(holes, return_distances=False, return_indices=True)
        out = out[idx[0], idx[1]]
    return out


def remap_contiguous(labels):
    values = np.unique(labels)
    lut = np.zeros(values.max() + 1, dtype=np.uint8)
    lut[values] = np.arange(1, len(values) + 1)
    return lut[labels]


def save_labels(path, labels):
    palette = [0, 0, 0]
    rng = np.random.default_rng(7)
    for _ in range(255):
        palette += list(rng.integers(40, 256, size=3))
    img = Image.fromarray(labels.astype(np.uint8), mode="P")
    img.putpalette(palette)
    img.save(path)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("out", type=Path)
    ap.add_argument("--count", type=int, default=12)
    ap.add_argument("--seed", type=int, default=2024)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    photos = photo_sources()
    names = sorted(photos)
    args.out.mkdir(parents=True, exist_ok=True)
    entries = []
    for k in range(args.count):
        regions = int(rng.integers(2, 6))
        raw, (_, nr, nc) = layout(rng, regions, warp=60)
        labels = remap_contiguous(largest_components(raw, regions))
        regions = int(labels.max())
        chosen = rng.choice(len(names), size=regions, replace=False)
        canvas = np.zeros((HEIGHT, WIDTH, 3), dtype=np.uint8)
        for i, src in enumerate(chosen, start=1):
            canvas[labels == i] = fit_canvas(photos[names[src]], rng)[labels == i]

        stem = f"scene_{k:02d}"
        Image.fromarray(canvas).save(args.out / f"{stem}.png")
        save_labels(args.out / f"{stem}_gt1.png", labels)
        annotations = [f"{stem}_gt1.png"]
        if k % 3 == 0:
            # Second annotator: same regions, boundaries displaced by a few pixels.
            shift_r = ndimage.shift(labels, (rng.integers(-3, 4), rng.integers(-3, 4)), order=0, mode="nearest")
            second = remap_contiguous(largest_components(shift_r, regions))
            save_labels(args.out / f"{stem}_gt2.png", second)
            annotations.append(f"{stem}_gt2.png")
        entries.append({
            "image": f"{stem}.png",
            "annotations": annotations,
            "sources": [names[s] for s in chosen],
        })

    manifest = {
        "name": "natural-texture-composites",
        "notes": f"{args.count} composites of bundled colour photographs, {WIDTH}x{HEIGHT}, seed {args.seed}",
        "entries": entries,
    }
    (args.out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")


if __name__ == "__main__":
    main()
