/**
 * Minimal NPY v1.0 support, pinned to the interchange subset the pooling
 * toolchain accepts: float32, little-endian, C-order. The header block is
 * padded to a multiple of 64 bytes.
 */
import * as fs from 'fs'

const MAGIC = Buffer.from('\x93NUMPY', 'latin1')

function shapeRepr(shape: number[]): string {
  if (shape.length === 1) return `(${shape[0]},)`
  return `(${shape.join(', ')})`
}

export function encodeNpy(shape: number[], data: Float32Array): Buffer {
  const count = shape.reduce((a, b) => a * b, 1)
  if (count !== data.length) {
    throw new Error(`shape ${shapeRepr(shape)} needs ${count} values, got ${data.length}`)
  }
  let header = `{'descr': '<f4', 'fortran_order': False, 'shape': ${shapeRepr(shape)}, }`
  const unpadded = MAGIC.length + 2 + 2 + header.length + 1
  const pad = (64 - (unpadded % 64)) % 64
  header = header + ' '.repeat(pad) + '\n'

  const out = Buffer.alloc(MAGIC.length + 4 + header.length + count * 4)
  let off = 0
  off += MAGIC.copy(out, off)
  out[off++] = 1
  out[off++] = 0
  out.writeUInt16LE(header.length, off)
  off += 2
  off += out.write(header, off, 'latin1')
  // Float32Array is little-endian on every platform node supports
  Buffer.from(data.buffer, data.byteOffset, data.byteLength).copy(out, off)
  return out
}

export function writeNpy(path: string, shape: number[], data: Float32Array): void {
  fs.writeFileSync(path, encodeNpy(shape, data))
}

export function readNpy(path: string): { shape: number[]; data: Float32Array } {
  const raw = fs.readFileSync(path)
  if (!raw.subarray(0, 6).equals(MAGIC)) {
    throw new Error(`${path}: not an NPY file`)
  }
  const major = raw[6]
  let headerLen: number
  let bodyStart: number
  if (major === 1) {
    headerLen = raw.readUInt16LE(8)
    bodyStart = 10 + headerLen
  } else if (major === 2) {
    headerLen = raw.readUInt32LE(8)
    bodyStart = 12 + headerLen
  } else {
    throw new Error(`${path}: unsupported NPY version ${major}`)
  }
  const header = raw.subarray(bodyStart - headerLen, bodyStart).toString('latin1')
  if (!header.includes("'<f4'") || !header.includes('False')) {
    throw new Error(`${path}: expected little-endian float32 C-order contents`)
  }
  const shapeMatch = header.match(/'shape':\s*\(([^)]*)\)/)
  if (!shapeMatch) throw new Error(`${path}: malformed header`)
  const shape = shapeMatch[1]
    .split(',')
    .map((s) => s.trim())
    .filter((s) => s.length > 0)
    .map((s) => parseInt(s, 10))
  const count = shape.reduce((a, b) => a * b, 1)
  if (raw.length !== bodyStart + count * 4) {
    throw new Error(`${path}: payload size does not match shape`)
  }
  const body = raw.subarray(bodyStart)
  const data = new Float32Array(count)
  for (let i = 0; i < count; i++) data[i] = body.readFloatLE(i * 4)
  return { shape, data }
}
