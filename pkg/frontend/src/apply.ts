/**
 * Resampling through a remap table, byte-identical to the native path.
 *
 * The arithmetic sequence is pinned to the native implementation:
 * float32 table coordinates widened to float64, bilinear weights and
 * the weighted sum evaluated in the written order, final value rounded
 * as floor(x + 0.5).  Both sides run IEEE-754 doubles, so following the
 * same operation order reproduces the native output exactly.
 */

import type { RemapTable } from './frmp.js'

export type ApplyMode = 'bilinear' | 'nearest'

export type Fill = number | readonly [number, number, number]

function clampIndex(x: number, hi: number): number {
  return x < 0 ? 0 : x > hi ? hi : x
}

/**
 * Bilinear resample of a row-major RGB image (srcRows * srcCols * 3
 * bytes) into outHeight * outWidth * 3; invalid pixels take the fill
 * color.
 */
export function applyBilinear(
  table: RemapTable,
  src: Uint8Array,
  fill: readonly [number, number, number] = [0, 0, 0],
): Uint8Array {
  const { srcCols, srcRows, outWidth, outHeight, srcX, srcY, valid } = table
  if (src.length !== srcCols * srcRows * 3) {
    throw new Error(
      `source length ${src.length} does not match table source ` +
      `${srcCols}x${srcRows}x3`,
    )
  }
  const n = outWidth * outHeight
  const out = new Uint8Array(n * 3)
  const rowStride = srcCols * 3
  for (let k = 0; k < n; k++) {
    if (!valid[k]) {
      out[k * 3] = fill[0]
      out[k * 3 + 1] = fill[1]
      out[k * 3 + 2] = fill[2]
      continue
    }
    const xf = srcX[k]
    const yf = srcY[k]
    const x0f = Math.floor(xf)
    const y0f = Math.floor(yf)
    const fx = xf - x0f
    const fy = yf - y0f
    const x0 = clampIndex(x0f, srcCols - 1)
    const x1 = clampIndex(x0f + 1.0, srcCols - 1)
    const y0 = clampIndex(y0f, srcRows - 1)
    const y1 = clampIndex(y0f + 1.0, srcRows - 1)
    const w00 = (1.0 - fx) * (1.0 - fy)
    const w01 = fx * (1.0 - fy)
    const w10 = (1.0 - fx) * fy
    const w11 = fx * fy
    const o00 = y0 * rowStride + x0 * 3
    const o01 = y0 * rowStride + x1 * 3
    const o10 = y1 * rowStride + x0 * 3
    const o11 = y1 * rowStride + x1 * 3
    for (let c = 0; c < 3; c++) {
      const value =
        (w00 * src[o00 + c] + w01 * src[o01 + c]) +
        w10 * src[o10 + c] +
        w11 * src[o11 + c]
      let v = Math.floor(value + 0.5)
      if (v < 0) v = 0
      if (v > 255) v = 255
      out[k * 3 + c] = v
    }
  }
  return out
}

/**
 * Nearest-neighbor resample of a row-major label map (srcRows * srcCols
 * bytes); ties round half up; invalid pixels take fillLabel.
 */
export function applyNearest(
  table: RemapTable,
  src: Uint8Array,
  fillLabel = 255,
): Uint8Array {
  const { srcCols, srcRows, outWidth, outHeight, srcX, srcY, valid } = table
  if (src.length !== srcCols * srcRows) {
    throw new Error(
      `source length ${src.length} does not match table source ` +
      `${srcCols}x${srcRows}`,
    )
  }
  const n = outWidth * outHeight
  const out = new Uint8Array(n)
  for (let k = 0; k < n; k++) {
    if (!valid[k]) {
      out[k] = fillLabel
      continue
    }
    const xi = clampIndex(Math.floor(srcX[k] + 0.5), srcCols - 1)
    const yi = clampIndex(Math.floor(srcY[k] + 0.5), srcRows - 1)
    out[k] = src[yi * srcCols + xi]
  }
  return out
}
