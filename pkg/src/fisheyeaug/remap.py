"""Remap lookup tables: compiling a warp and resampling rasters through it.

A RemapTable stores, for every output pixel, the sub-pixel source
coordinate it pulls from plus a validity mask.  Tables are built in
double precision and stored in single precision by default (sub-pixel
error stays below 1e-3 px at these magnitudes).

Interpolation is bilinear for color images and nearest neighbor
(round half up) for label maps; labels are categorical and must never
be blended.  Invalid output pixels take a constant fill: (0, 0, 0) for
color and 255 (the ignore index) for labels, so synthesized borders
never contribute to a loss or a metric.

The arithmetic in apply_bilinear / apply_nearest is pinned: float32
table coordinates widened to float64, weights and the weighted sum
evaluated in the written order, final value rounded as floor(x + 0.5).
Foreign reimplementations that follow the same IEEE-754 sequence
reproduce the output byte for byte.

Tables serialize to a little-endian binary format: magic "FRMP",
version u32, out_w u32, out_h u32, src_cols u32, src_rows u32, then
src_x and src_y as float32 arrays and the validity mask as packed bits
(MSB first), all row-major.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, DimensionMismatch
from .geometry import PinholeIntrinsics, WarpParams, fisheye_to_source_batch

FRMP_MAGIC = b"FRMP"
FRMP_VERSION = 1

# Total build_remap invocations; lets callers assert table reuse.
_build_count = 0


def build_count() -> int:
    return _build_count


@dataclass(frozen=True)
class RemapTable:
    """Compiled form of one warp: per-output-pixel source coordinates.

    src_x, src_y have shape (out_height, out_width); valid marks entries
    whose coordinates are meaningful and inside the source raster.
    Arrays are frozen after construction.
    """

    out_width: int
    out_height: int
    src_cols: int
    src_rows: int
    src_x: np.ndarray
    src_y: np.ndarray
    valid: np.ndarray

    def __post_init__(self):
        shape = (self.out_height, self.out_width)
        for name in ("src_x", "src_y", "valid"):
            arr = getattr(self, name)
            if arr.shape != shape:
                raise DimensionMismatch(
                    f"{name} has shape {arr.shape}, expected {shape}"
                )
            arr.setflags(write=False)


def build_remap(params: WarpParams, src_cols: int, src_rows: int,
                dtype=np.float32) -> RemapTable:
    """Compile a WarpParams into a RemapTable against a src_cols x src_rows source.

    The dimensions given here are authoritative; params.pinhole supplies
    the focal length / plane distance.  Entry (i, j) is
    fisheye_to_source((i, j)); valid is False exactly where the chain
    reports Invalid.  Pure: identical inputs give bit-identical tables.
    """
    if src_cols <= 0 or src_rows <= 0:
        raise ConfigError(f"source size must be positive, got {src_cols}x{src_rows}")
    global _build_count
    _build_count += 1

    params = WarpParams(
        params.fisheye,
        PinholeIntrinsics(params.pinhole.focal, src_cols, src_rows),
        params.pose,
    )
    w, h = params.fisheye.out_width, params.fisheye.out_height
    px, py = np.meshgrid(np.arange(w, dtype=np.float64),
                         np.arange(h, dtype=np.float64))
    u, v, valid = fisheye_to_source_batch(px, py, params)
    src_x = np.where(valid, u, 0.0).astype(dtype)
    src_y = np.where(valid, v, 0.0).astype(dtype)
    return RemapTable(w, h, src_cols, src_rows, src_x, src_y, valid.copy())


def _check_source(table: RemapTable, src: np.ndarray, channels: int | None):
    if channels is None:
        if src.ndim != 2:
            raise DimensionMismatch(f"expected a 2-D label raster, got shape {src.shape}")
        rows, cols = src.shape
    else:
        if src.ndim != 3 or src.shape[2] != channels:
            raise DimensionMismatch(
                f"expected an HxWx{channels} raster, got shape {src.shape}"
            )
        rows, cols = src.shape[:2]
    if cols != table.src_cols or rows != table.src_rows:
        raise DimensionMismatch(
            f"table compiled for {table.src_cols}x{table.src_rows} source, "
            f"got {cols}x{rows}"
        )


def apply_bilinear(table: RemapTable, src: np.ndarray,
                   fill=(0, 0, 0)) -> np.ndarray:
    """Resample a color image (H, W, 3) uint8 through the table.

    Valid pixels take the bilinear blend of the 4-neighborhood around
    (src_x, src_y); invalid pixels take the fill color.
    """
    _check_source(table, src, channels=3)
    cols, rows = table.src_cols, table.src_rows

    xf = table.src_x.astype(np.float64)
    yf = table.src_y.astype(np.float64)
    x0f = np.floor(xf)
    y0f = np.floor(yf)
    fx = xf - x0f
    fy = yf - y0f
    # Clamp guards the edge cases created by float32 storage of exact bounds.
    x0 = np.clip(x0f, 0, cols - 1).astype(np.int64)
    x1 = np.clip(x0f + 1.0, 0, cols - 1).astype(np.int64)
    y0 = np.clip(y0f, 0, rows - 1).astype(np.int64)
    y1 = np.clip(y0f + 1.0, 0, rows - 1).astype(np.int64)

    p00 = src[y0, x0].astype(np.float64)
    p01 = src[y0, x1].astype(np.float64)
    p10 = src[y1, x0].astype(np.float64)
    p11 = src[y1, x1].astype(np.float64)

    w00 = (1.0 - fx) * (1.0 - fy)
    w01 = fx * (1.0 - fy)
    w10 = (1.0 - fx) * fy
    w11 = fx * fy

    value = (
        (w00[..., None] * p00 + w01[..., None] * p01)
        + w10[..., None] * p10
    ) + w11[..., None] * p11
    out = np.clip(np.floor(value + 0.5), 0, 255).astype(np.uint8)
    out[~table.valid] = np.asarray(fill, dtype=np.uint8)
    return out


def apply_nearest(table: RemapTable, src: np.ndarray,
                  fill_label: int = 255) -> np.ndarray:
    """Resample a label map (H, W) uint8 through the table.

    Valid pixels take the label at the rounded source coordinate
    (ties round half up); invalid pixels take fill_label.
    """
    _check_source(table, src, channels=None)
    cols, rows = table.src_cols, table.src_rows

    xi = np.clip(np.floor(table.src_x.astype(np.float64) + 0.5), 0, cols - 1)
    yi = np.clip(np.floor(table.src_y.astype(np.float64) + 0.5), 0, rows - 1)
    out = src[yi.astype(np.int64), xi.astype(np.int64)].copy()
    out[~table.valid] = np.uint8(fill_label)
    return out


def coverage_ratio(table: RemapTable) -> float:
    """Fraction of output pixels whose inverse projection hits the source."""
    return float(np.count_nonzero(table.valid)) / (table.out_width * table.out_height)


def save_table(table: RemapTable, path) -> None:
    """Write the table in the FRMP binary format."""
    header = FRMP_MAGIC + struct.pack(
        "<5I", FRMP_VERSION, table.out_width, table.out_height,
        table.src_cols, table.src_rows,
    )
    bits = np.packbits(table.valid.reshape(-1))
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(table.src_x.astype("<f4").tobytes())
        fh.write(table.src_y.astype("<f4").tobytes())
        fh.write(bits.tobytes())


def load_table(path) -> RemapTable:
    """Read a table written by save_table."""
    data = Path(path).read_bytes()
    if data[:4] != FRMP_MAGIC:
        raise ConfigError(f"{path}: not a FRMP remap table")
    version, out_w, out_h, src_cols, src_rows = struct.unpack_from("<5I", data, 4)
    if version != FRMP_VERSION:
        raise ConfigError(f"{path}: unsupported FRMP version {version}")
    n = out_w * out_h
    off = 4 + 20
    src_x = np.frombuffer(data, dtype="<f4", count=n, offset=off).reshape(out_h, out_w)
    off += 4 * n
    src_y = np.frombuffer(data, dtype="<f4", count=n, offset=off).reshape(out_h, out_w)
    off += 4 * n
    nbits = (n + 7) // 8
    bits = np.frombuffer(data, dtype=np.uint8, count=nbits, offset=off)
    valid = np.unpackbits(bits, count=n).astype(bool).reshape(out_h, out_w)
    return RemapTable(out_w, out_h, src_cols, src_rows,
                      src_x.copy(), src_y.copy(), valid)
