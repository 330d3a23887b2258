import numpy as np
import pytest
from PIL import Image

# Raw Cityscapes label IDs used in synthetic fixtures: a mix of mapped
# (road, sidewalk, building, vegetation, sky, car) and unmapped (0).
RAW_IDS = (7, 8, 11, 21, 23, 26, 0)


def synth_image(cols, rows, seed=0):
    """Deterministic structured RGB test image (gradients + seeded blobs)."""
    yy, xx = np.mgrid[0:rows, 0:cols]
    img = np.stack([
        xx * 255 // max(cols - 1, 1),
        yy * 255 // max(rows - 1, 1),
        (xx + yy) % 256,
    ], axis=-1).astype(np.uint8)
    rng = np.random.default_rng(seed)
    for _ in range(8):
        cx, cy = rng.integers(0, cols), rng.integers(0, rows)
        r = int(rng.integers(8, max(cols, rows) // 4))
        color = rng.integers(0, 256, size=3)
        mask = (xx - cx) ** 2 + (yy - cy) ** 2 < r * r
        img[mask] = color
    return img


def synth_label(cols, rows, seed=0, block=64, ids=RAW_IDS):
    """Blocky label raster with deterministic per-block IDs."""
    yy, xx = np.mgrid[0:rows, 0:cols]
    rng = np.random.default_rng(seed)
    ids = np.asarray(ids, dtype=np.uint8)
    picks = rng.integers(0, len(ids), size=(rows // block + 2, cols // block + 2))
    return ids[picks[yy // block, xx // block]]


@pytest.fixture
def cityscapes_tree(tmp_path):
    """Factory building a synthetic Cityscapes-layout tree."""

    def build(n_pairs=3, split="val", size=(512, 256), cities=("aachen", "bochum")):
        root = tmp_path / "cityscapes"
        cols, rows = size
        for i in range(n_pairs):
            city = cities[i % len(cities)]
            stem = f"{city}_{i:06d}_000019"
            img_dir = root / "leftImg8bit" / split / city
            lbl_dir = root / "gtFine" / split / city
            img_dir.mkdir(parents=True, exist_ok=True)
            lbl_dir.mkdir(parents=True, exist_ok=True)
            Image.fromarray(synth_image(cols, rows, seed=i)).save(
                img_dir / f"{stem}_leftImg8bit.png")
            Image.fromarray(synth_label(cols, rows, seed=i)).save(
                lbl_dir / f"{stem}_gtFine_labelIds.png")
        return root

    return build
