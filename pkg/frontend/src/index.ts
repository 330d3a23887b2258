/**
 * fisheyeaug-bindings: remap construction/application and one-shot
 * sample augmentation for machine-learning data loaders.
 *
 * Three calls cross the boundary, all on contiguous 8-bit arrays:
 *
 * - buildRemap(params): compile one warp into an immutable handle
 * - applyRemap(handle, array, mode, fill): resample an image or label
 * - augmentSample(image, label, size, policy, seed, index): the full
 *   online augmentation of one source pair
 *
 * The handle is plain data; it may be shared freely across consumer
 * threads.  applyRemap runs natively in-process and is byte-identical
 * to the pipeline's own output; the other calls drive the pipeline's
 * CLI, costing one file write per array argument and one read per
 * result.
 */

import { join } from 'node:path'
import { mkdirSync, readFileSync } from 'node:fs'

import { applyBilinear, applyNearest, type ApplyMode, type Fill } from './apply.js'
import { readTable, type RemapTable } from './frmp.js'
import { NativeError, nativeVersion, runNative, withScratchDir } from './native.js'
import { readPng, writePng, type Raster } from './png.js'

export { NativeError, nativeVersion }
export type { ApplyMode, Fill, Raster, RemapTable }

export const VERSION = '0.1.0'

/** Scalar surface of one warp; angles in degrees, translations normalized. */
export interface WarpScalars {
  fFish: number
  outSize?: number
  z1?: number
  srcCols: number
  srcRows: number
  rotX?: number
  rotY?: number
  rotZ?: number
  tX?: number
  tY?: number
  tZ?: number
}

export type BoundRemap = RemapTable

/** Compile a warp into a remap handle (immutable, thread-shareable). */
export function buildRemap(params: WarpScalars): BoundRemap {
  return withScratchDir((dir) => {
    const tablePath = join(dir, 'table.frmp')
    runNative([
      'inspect',
      '--f', String(params.fFish),
      '--out-size', String(params.outSize ?? 640),
      '--z1', String(params.z1 ?? 500),
      '--src-cols', String(params.srcCols),
      '--src-rows', String(params.srcRows),
      '--rot-x', String(params.rotX ?? 0),
      '--rot-y', String(params.rotY ?? 0),
      '--rot-z', String(params.rotZ ?? 0),
      '--t-x', String(params.tX ?? 0),
      '--t-y', String(params.tY ?? 0),
      '--t-z', String(params.tZ ?? 0),
      '--dump-table', tablePath,
    ])
    return readTable(tablePath)
  })
}

/**
 * Resample a contiguous 8-bit array through a handle.
 *
 * Bilinear mode expects srcRows*srcCols*3 bytes (RGB) and a 3-channel
 * fill; nearest mode expects srcRows*srcCols bytes (labels) and a
 * scalar fill.  Output is outHeight*outWidth*(3|1) bytes.
 */
export function applyRemap(
  handle: BoundRemap,
  data: Uint8Array,
  mode: ApplyMode,
  fill?: Fill,
): Uint8Array {
  if (mode === 'bilinear') {
    const f = (fill ?? [0, 0, 0]) as readonly [number, number, number]
    if (typeof f === 'number') {
      throw new Error('bilinear mode takes a 3-channel fill')
    }
    return applyBilinear(handle, data, f)
  }
  if (typeof fill === 'object') {
    throw new Error('nearest mode takes a scalar fill label')
  }
  return applyNearest(handle, data, fill ?? 255)
}

export interface AugmentedPair {
  image: Uint8Array
  label: Uint8Array
  outSize: number
}

/**
 * Run the full online augmentation of one source pair.
 *
 * `image` is rows*cols*3 RGB bytes, `label` rows*cols raw Cityscapes
 * label IDs (the pipeline re-encodes them to train IDs).  `policy` is a
 * preset name or a policy file path; sample `index` draws from
 * generator stream (seed, 0, index), exactly matching the pipeline's
 * own sample sequence.
 */
export function augmentSample(
  image: Uint8Array,
  label: Uint8Array,
  size: { cols: number; rows: number },
  policy: string,
  seed: number,
  index: number,
): AugmentedPair {
  const { cols, rows } = size
  if (image.length !== cols * rows * 3) {
    throw new Error(`image length ${image.length} does not match ${cols}x${rows}x3`)
  }
  if (label.length !== cols * rows) {
    throw new Error(`label length ${label.length} does not match ${cols}x${rows}`)
  }
  if (!Number.isInteger(index) || index < 0) {
    throw new Error(`sample index must be a non-negative integer, got ${index}`)
  }
  return withScratchDir((dir) => {
    const root = join(dir, 'ds')
    const imgDir = join(root, 'leftImg8bit', 'train', 'city')
    const lblDir = join(root, 'gtFine', 'train', 'city')
    mkdirSync(imgDir, { recursive: true })
    mkdirSync(lblDir, { recursive: true })
    writePng(join(imgDir, 'city_000000_000019_leftImg8bit.png'),
             { width: cols, height: rows, data: image, channels: 3 })
    writePng(join(lblDir, 'city_000000_000019_gtFine_labelIds.png'),
             { width: cols, height: rows, data: label, channels: 1 })

    const out = join(dir, 'out')
    const isFile = policy.includes('/') || policy.endsWith('.policy')
    runNative([
      'augment',
      '--root', root,
      '--split', 'train',
      isFile ? '--policy' : '--preset', policy,
      '--seed', String(seed),
      '--count', String(index + 1),
      '--out', out,
    ])
    const stem = `sample_${String(index).padStart(5, '0')}`
    const outImage = readPng(join(out, `${stem}_image.png`), 3)
    const outLabel = readPng(join(out, `${stem}_label.png`), 1)
    return { image: outImage.data, label: outLabel.data, outSize: outImage.width }
  })
}

/** Parse an augment sidecar file into buildRemap parameters. */
export function warpFromSidecar(path: string, srcCols: number, srcRows: number): WarpScalars {
  const sidecar = JSON.parse(readFileSync(path, 'utf-8'))
  const w = sidecar.warp
  return {
    fFish: w.f_fish,
    outSize: w.out_size,
    z1: w.z1,
    srcCols,
    srcRows,
    rotX: w.rot_x,
    rotY: w.rot_y,
    rotZ: w.rot_z,
    tX: w.t_x,
    tY: w.t_y,
    tZ: w.t_z,
  }
}
