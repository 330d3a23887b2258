/**
 * PNG helpers over pngjs: rasters cross the process boundary as
 * lossless 8-bit PNG files (RGB for images, grayscale for labels).
 */

import { readFileSync, writeFileSync } from 'node:fs'
import { PNG } from 'pngjs'

export interface Raster {
  readonly width: number
  readonly height: number
  /** Row-major bytes: width*height*3 for RGB, width*height for gray. */
  readonly data: Uint8Array
  readonly channels: 1 | 3
}

export function readPng(path: string, channels: 1 | 3): Raster {
  const png = PNG.sync.read(readFileSync(path))
  const n = png.width * png.height
  const data = new Uint8Array(n * channels)
  for (let k = 0; k < n; k++) {
    if (channels === 1) {
      data[k] = png.data[k * 4]
    } else {
      data[k * 3] = png.data[k * 4]
      data[k * 3 + 1] = png.data[k * 4 + 1]
      data[k * 3 + 2] = png.data[k * 4 + 2]
    }
  }
  return { width: png.width, height: png.height, data, channels }
}

export function writePng(path: string, raster: Raster): void {
  const { width, height, data, channels } = raster
  if (data.length !== width * height * channels) {
    throw new Error(
      `raster byte length ${data.length} does not match ` +
      `${width}x${height}x${channels}`,
    )
  }
  const png = new PNG({ width, height })
  for (let k = 0; k < width * height; k++) {
    const r = channels === 1 ? data[k] : data[k * 3]
    const g = channels === 1 ? data[k] : data[k * 3 + 1]
    const b = channels === 1 ? data[k] : data[k * 3 + 2]
    png.data[k * 4] = r
    png.data[k * 4 + 1] = g
    png.data[k * 4 + 2] = b
    png.data[k * 4 + 3] = 255
  }
  const colorType = channels === 1 ? 0 : 2
  writeFileSync(path, PNG.sync.write(png, { colorType }))
}
