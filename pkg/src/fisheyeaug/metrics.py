"""Confusion-matrix accumulation and per-class IoU / mIoU reporting.

Counts accumulate in a 19 x 20 matrix: rows are ground-truth train IDs,
columns are predictions, with one extra "void" column for predictions
of 255 against a real ground-truth class.  Ground-truth 255 pixels are
excluded entirely, so fisheye fill regions never influence a score; a
void prediction counts as a miss for its ground-truth class but never
forms a class of its own.

IoU_k = cm[k][k] / (row_k + col_k - cm[k][k]); classes absent from both
prediction and ground truth are undefined (NaN) and excluded from the
mean, following standard Cityscapes practice.

Matrices are mergeable monoids: accumulate per worker, sum at the end,
order irrelevant.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch, FisheyeAugError, NoDefinedClasses, ValueOutOfRange

NUM_CLASSES = 19
IGNORE_LABEL = 255
_VOID_COL = NUM_CLASSES

CLASS_NAMES = (
    "road", "sidewalk", "building", "wall", "fence", "pole",
    "traffic light", "traffic sign", "vegetation", "terrain", "sky",
    "person", "rider", "car", "truck", "bus", "train", "motorcycle",
    "bicycle",
)


class ConfusionMatrix:
    """19-class accumulator over (prediction, ground truth) label pairs."""

    def __init__(self, counts: np.ndarray | None = None):
        if counts is None:
            counts = np.zeros((NUM_CLASSES, NUM_CLASSES + 1), dtype=np.int64)
        self.counts = counts

    def update(self, pred: np.ndarray, gt: np.ndarray) -> "ConfusionMatrix":
        """Accumulate one raster pair; returns self for chaining."""
        if pred.shape != gt.shape:
            raise DimensionMismatch(f"pred {pred.shape} vs gt {gt.shape}")
        for name, arr in (("pred", pred), ("gt", gt)):
            bad = (arr >= NUM_CLASSES) & (arr != IGNORE_LABEL)
            if bad.any():
                raise ValueOutOfRange(
                    f"{name} contains values outside 0..{NUM_CLASSES - 1} + {IGNORE_LABEL}: "
                    f"{sorted(np.unique(arr[bad]).tolist())}"
                )
        keep = gt != IGNORE_LABEL
        g = gt[keep].astype(np.int64)
        p = pred[keep].astype(np.int64)
        p[p == IGNORE_LABEL] = _VOID_COL
        np.add.at(self.counts, (g, p), 1)
        return self

    def merge(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        return ConfusionMatrix(self.counts + other.counts)

    __add__ = merge

    def total(self) -> int:
        """Number of non-ignored ground-truth pixels accumulated."""
        return int(self.counts.sum())


def iou_per_class(cm: ConfusionMatrix) -> np.ndarray:
    """Per-class IoU vector; NaN marks classes absent from pred and gt."""
    counts = cm.counts.astype(np.float64)
    diag = np.diag(counts[:, :NUM_CLASSES])
    row = counts.sum(axis=1)
    col = counts[:, :NUM_CLASSES].sum(axis=0)
    union = row + col - diag
    with np.errstate(invalid="ignore", divide="ignore"):
        iou = np.where(union > 0, diag / np.where(union > 0, union, 1.0), np.nan)
    return iou


def mean_iou(cm: ConfusionMatrix) -> float:
    """Arithmetic mean of the defined per-class IoUs."""
    iou = iou_per_class(cm)
    defined = ~np.isnan(iou)
    if not defined.any():
        raise NoDefinedClasses("no class appears in either prediction or ground truth")
    return float(iou[defined].mean())


@dataclass(frozen=True)
class FocalResult:
    f: float
    iou: tuple[float, ...]  # NaN = undefined
    miou: float
    pixels: int
    pairs: int


@dataclass(frozen=True)
class EvalReport:
    results: tuple[FocalResult, ...]

    def to_json(self) -> str:
        payload = []
        for r in self.results:
            payload.append({
                "focal_length": r.f,
                "miou": r.miou,
                "pixels": r.pixels,
                "pairs": r.pairs,
                "iou_per_class": {
                    name: (None if np.isnan(v) else v)
                    for name, v in zip(CLASS_NAMES, r.iou)
                },
            })
        return json.dumps(payload, indent=2)


def format_table(report: EvalReport) -> str:
    """Aligned plain-text table, one row per focal length."""
    header = "focal length".ljust(14) + "mIoU".rjust(8) + "  pairs".rjust(8)
    lines = [header, "-" * len(header)]
    for r in report.results:
        lines.append(f"{r.f:<14g}{r.miou:8.4f}{r.pairs:8d}")
    return "\n".join(lines)


def evaluate_pairs(pairs) -> ConfusionMatrix:
    """Accumulate an iterable of (pred, gt) rasters into one matrix."""
    cm = ConfusionMatrix()
    for pred, gt in pairs:
        cm.update(pred, gt)
    return cm


def evaluate_testsets(pred_root, gt_root, f_list) -> EvalReport:
    """Score prediction trees against ground-truth trees per focal length.

    Expects pred_root/f<f>/ and gt_root/f<f>/ directories whose label
    rasters share relative paths (predictions may also sit at matching
    basenames anywhere under the f-directory).
    """
    from PIL import Image

    pred_root = Path(pred_root)
    gt_root = Path(gt_root)
    results = []
    for f in f_list:
        gt_dir = gt_root / f"f{f:g}"
        pred_dir = pred_root / f"f{f:g}"
        for name, d in (("ground-truth", gt_dir), ("prediction", pred_dir)):
            if not d.is_dir():
                raise FisheyeAugError(f"missing {name} directory for f={f:g}: {d}")
        gt_files = sorted(gt_dir.rglob(f"*_gtFine_labelIds.png"))
        if not gt_files:
            raise FisheyeAugError(f"no label rasters under {gt_dir}")
        by_name = {p.name: p for p in pred_dir.rglob("*.png")}
        cm = ConfusionMatrix()
        pairs = 0
        for gt_path in gt_files:
            rel = gt_path.relative_to(gt_dir)
            pred_path = pred_dir / rel
            if not pred_path.is_file():
                pred_path = by_name.get(gt_path.name)
            if pred_path is None or not Path(pred_path).is_file():
                raise FisheyeAugError(f"no prediction for {rel} under {pred_dir}")
            with Image.open(pred_path) as im:
                pred = np.asarray(im).astype(np.uint8)
            with Image.open(gt_path) as im:
                gt = np.asarray(im).astype(np.uint8)
            cm.update(pred, gt)
            pairs += 1
        results.append(FocalResult(
            f=float(f),
            iou=tuple(iou_per_class(cm).tolist()),
            miou=mean_iou(cm),
            pixels=cm.total(),
            pairs=pairs,
        ))
    return EvalReport(tuple(results))
