"""Cityscapes-layout ingestion, label encoding, test-set generation, streaming.

Input trees follow the Cityscapes convention::

    root/leftImg8bit/<split>/<city>/<frame>_leftImg8bit.png
    root/gtFine/<split>/<city>/<frame>_gtFine_labelIds.png

Labels are re-encoded to the 19-class train-ID scheme (unmapped raw IDs
become 255, the ignore index); the mapping ships as a CSV data file and
callers may supply their own.

Test sets are pure zoom conversions of a split: one remap table per
focal length (identity pose, z1 = 500, 640 x 640 by default) applied to
every pair, written as lossless 8-bit PNGs mirroring the input tree,
with a generation manifest alongside.  Per-file failures are collected,
not fatal, so one corrupt frame cannot waste a long run.

Training samples stream with a per-epoch shuffle driven by (seed,
epoch); sample i of epoch e draws from generator stream (seed, e, i),
so the sequence is reproducible regardless of consumer parallelism.
"""

from __future__ import annotations

import csv
import json
import logging
import os
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterator

import numpy as np
from PIL import Image

from ._version import __version__
from .errors import EmptySplit, MissingLabel, ValueOutOfRange
from .geometry import FisheyeIntrinsics, PinholeIntrinsics, RigPose, WarpParams
from .policy import AugPolicy, augment_sample, sample_stream
from .remap import RemapTable, apply_bilinear, apply_nearest, build_remap, coverage_ratio

logger = logging.getLogger(__name__)

IMAGE_DIR = "leftImg8bit"
LABEL_DIR = "gtFine"
IMAGE_SUFFIX = "_leftImg8bit.png"
LABEL_SUFFIX = "_gtFine_labelIds.png"
IGNORE_LABEL = 255
NUM_CLASSES = 19

MANIFEST_NAME = "generation_manifest.json"


@dataclass(frozen=True)
class DatasetRecord:
    image_path: Path
    label_path: Path
    city: str
    split: str


@dataclass(frozen=True)
class DatasetManifest:
    root: Path
    split: str
    records: tuple[DatasetRecord, ...]

    def __len__(self) -> int:
        return len(self.records)


@dataclass(frozen=True)
class GenerationResult:
    written: int
    failures: tuple[tuple[str, str], ...]  # (path, error message)
    coverage: float = 0.0  # valid fraction of the (first) compiled table


def scan_dataset(root, split: str) -> DatasetManifest:
    """Enumerate image/label pairs of one split, sorted by path.

    Raises MissingLabel for an image without a label partner and
    EmptySplit when nothing is found.
    """
    root = Path(root)
    img_root = root / IMAGE_DIR / split
    records = []
    for img_path in sorted(img_root.glob(f"*/*{IMAGE_SUFFIX}")):
        city = img_path.parent.name
        stem = img_path.name[: -len(IMAGE_SUFFIX)]
        lbl_path = root / LABEL_DIR / split / city / f"{stem}{LABEL_SUFFIX}"
        if not lbl_path.is_file():
            raise MissingLabel(f"no label partner for {img_path} (expected {lbl_path})")
        records.append(DatasetRecord(img_path, lbl_path, city, split))
    if not records:
        raise EmptySplit(f"no image/label pairs under {img_root}")
    logger.info("scanned %s split %s: %d pairs", root, split, len(records))
    return DatasetManifest(root, split, tuple(records))


def load_label_encoding(path=None) -> np.ndarray:
    """Raw-ID -> train-ID lookup table (256 entries, unmapped -> 255).

    Reads the bundled Cityscapes 19-class table unless a CSV with
    raw_id,train_id columns is given.
    """
    lut = np.full(256, IGNORE_LABEL, dtype=np.uint8)
    if path is None:
        text = (resources.files(__package__) / "data" / "cityscapes_train_ids.csv").read_text()
        rows = csv.DictReader(text.splitlines())
    else:
        rows = csv.DictReader(Path(path).read_text().splitlines())
    for row in rows:
        lut[int(row["raw_id"])] = int(row["train_id"])
    return lut


def encode_labels(raw: np.ndarray, lut: np.ndarray) -> np.ndarray:
    """Pointwise raw-ID -> train-ID map."""
    return lut[raw]


def read_image(path) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"))


def read_label(path) -> np.ndarray:
    with Image.open(path) as im:
        arr = np.asarray(im)
    if arr.ndim != 2:
        raise ValueOutOfRange(f"{path}: label raster must be single-channel")
    return arr.astype(np.uint8, copy=False)


def write_raster(arr: np.ndarray, path) -> None:
    """Write a PNG atomically (temp file + rename): readers never see partials."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    Image.fromarray(arr).save(tmp, format="PNG")
    os.replace(tmp, path)


def zoom_params(f: float, src_cols: int, src_rows: int, *,
                z1: float = 500.0, out_size: int = 640) -> WarpParams:
    """Identity-pose warp ("z-aug") at focal length f."""
    return WarpParams(
        fisheye=FisheyeIntrinsics(f, out_size, out_size),
        pinhole=PinholeIntrinsics(z1, src_cols, src_rows),
        pose=RigPose(),
    )


def generate_testset(manifest: DatasetManifest, f: float, out_dir, *,
                     z1: float = 500.0, out_size: int = 640,
                     encoding: np.ndarray | None = None,
                     workers: int = 1) -> GenerationResult:
    """Convert every pair of the manifest to fisheye at one focal length.

    Builds one remap table per distinct source size (a homogeneous split
    compiles exactly one) and mirrors the input tree under out_dir.
    Returns the written count plus any per-file failures.
    """
    out_dir = Path(out_dir)
    if encoding is None:
        encoding = load_label_encoding()
    if len(manifest) == 0:
        logger.warning("empty manifest, nothing to generate")
        return GenerationResult(0, ())

    tables: dict[tuple[int, int], RemapTable] = {}

    def get_table(cols: int, rows: int) -> RemapTable:
        key = (cols, rows)
        if key not in tables:
            tables[key] = build_remap(zoom_params(f, cols, rows, z1=z1, out_size=out_size),
                                      cols, rows)
        return tables[key]

    def convert(record: DatasetRecord) -> tuple[str, str] | None:
        try:
            img = read_image(record.image_path)
            lbl = encode_labels(read_label(record.label_path), encoding)
            table = get_table(img.shape[1], img.shape[0])
            out_img = apply_bilinear(table, img, fill=(0, 0, 0))
            out_lbl = apply_nearest(table, lbl, fill_label=IGNORE_LABEL)
            rel_img = record.image_path.relative_to(manifest.root)
            rel_lbl = record.label_path.relative_to(manifest.root)
            write_raster(out_img, out_dir / rel_img)
            write_raster(out_lbl, out_dir / rel_lbl)
            return None
        except Exception as exc:  # collected, run continues
            logger.error("failed on %s: %s", record.image_path, exc)
            return (str(record.image_path), str(exc))

    failures = []
    if workers > 1:
        # Tables are built up front so worker threads only read them.
        for record in manifest.records:
            with Image.open(record.image_path) as im:
                get_table(*im.size)
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            for result in pool.map(convert, manifest.records):
                if result is not None:
                    failures.append(result)
    else:
        for record in manifest.records:
            result = convert(record)
            if result is not None:
                failures.append(result)

    written = len(manifest) - len(failures)
    meta = {
        "focal_length": f,
        "z1": z1,
        "out_size": out_size,
        "source_pre_resize": None,
        "pairs_written": written,
        "split": manifest.split,
        "tool_version": __version__,
    }
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / MANIFEST_NAME).write_text(json.dumps(meta, indent=2) + "\n")
    coverage = coverage_ratio(next(iter(tables.values()))) if tables else 0.0
    return GenerationResult(written, tuple(failures), coverage)


def epoch_order(n: int, seed: int, epoch: int) -> np.ndarray:
    """Record order for one epoch, a pure function of (n, seed, epoch)."""
    seq = np.random.SeedSequence(seed, spawn_key=(epoch,))
    return np.random.Generator(np.random.PCG64(seq)).permutation(n)


def stream_training_samples(manifest: DatasetManifest, policy: AugPolicy,
                            seed: int, epoch: int,
                            encoding: np.ndarray | None = None,
                            ) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """Yield augmented (image, label) pairs for one epoch, in order.

    Sample i draws from stream (seed, epoch, i) regardless of which
    record the shuffle assigned to it, so any prefix of the sequence is
    reproducible in isolation.
    """
    if encoding is None:
        encoding = load_label_encoding()
    order = epoch_order(len(manifest), seed, epoch)
    for i, record_idx in enumerate(order):
        record = manifest.records[record_idx]
        try:
            img = read_image(record.image_path)
            lbl = encode_labels(read_label(record.label_path), encoding)
        except Exception as exc:
            raise type(exc)(f"{record.image_path}: {exc}") from exc
        yield augment_sample(img, lbl, policy, sample_stream(seed, epoch, i))
