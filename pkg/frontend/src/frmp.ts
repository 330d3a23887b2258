/**
 * Reader for the FRMP remap-table format: little-endian header
 * ("FRMP", version u32, out_w u32, out_h u32, src_cols u32,
 * src_rows u32) followed by src_x and src_y as float32 arrays and the
 * validity mask as packed bits (MSB first), all row-major.
 */

import { readFileSync } from 'node:fs'

export interface RemapTable {
  readonly outWidth: number
  readonly outHeight: number
  readonly srcCols: number
  readonly srcRows: number
  /** Per-output-pixel source coordinates, row-major, length outWidth*outHeight. */
  readonly srcX: Float32Array
  readonly srcY: Float32Array
  /** 1 where the entry is valid, 0 elsewhere (unpacked from bits). */
  readonly valid: Uint8Array
}

const MAGIC = 'FRMP'
const VERSION = 1
const HEADER_BYTES = 4 + 5 * 4

export function readTable(path: string): RemapTable {
  const buf = readFileSync(path)
  if (buf.length < HEADER_BYTES || buf.toString('latin1', 0, 4) !== MAGIC) {
    throw new Error(`${path}: not a FRMP remap table`)
  }
  const version = buf.readUInt32LE(4)
  if (version !== VERSION) {
    throw new Error(`${path}: unsupported FRMP version ${version}`)
  }
  const outWidth = buf.readUInt32LE(8)
  const outHeight = buf.readUInt32LE(12)
  const srcCols = buf.readUInt32LE(16)
  const srcRows = buf.readUInt32LE(20)
  const n = outWidth * outHeight

  let off = HEADER_BYTES
  const srcX = readFloat32(buf, off, n)
  off += 4 * n
  const srcY = readFloat32(buf, off, n)
  off += 4 * n
  const packed = buf.subarray(off, off + Math.ceil(n / 8))
  const valid = new Uint8Array(n)
  for (let k = 0; k < n; k++) {
    valid[k] = (packed[k >> 3] >> (7 - (k & 7))) & 1
  }
  return { outWidth, outHeight, srcCols, srcRows, srcX, srcY, valid }
}

function readFloat32(buf: Buffer, offset: number, count: number): Float32Array {
  // Copy to a fresh ArrayBuffer: the Buffer's backing store may not be
  // 4-byte aligned at `offset`.
  const bytes = new Uint8Array(count * 4)
  bytes.set(buf.subarray(offset, offset + count * 4))
  return new Float32Array(bytes.buffer)
}
