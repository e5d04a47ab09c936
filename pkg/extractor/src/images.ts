/**
 * Image inputs for extraction. Two formats are accepted, both decoded
 * without native dependencies: `.npy` rank-3 float32 arrays (H, W, C) used
 * as-is, and binary PPM (`P6`, maxval 255) scaled to [0, 1].
 */
import * as fs from 'fs'
import * as path from 'path'
import * as tf from '@tensorflow/tfjs'

import { readNpy } from './npy'

export const IMAGE_EXTENSIONS = ['.npy', '.ppm']

export interface LoadedImage {
  id: string
  tensor: tf.Tensor3D // (H, W, C) float32
}

export function loadImage(file: string): tf.Tensor3D {
  const ext = path.extname(file).toLowerCase()
  if (ext === '.npy') {
    const { shape, data } = readNpy(file)
    if (shape.length !== 3) {
      throw new Error(`${file}: image arrays must be (H, W, C), got rank ${shape.length}`)
    }
    return tf.tensor3d(data, shape as [number, number, number])
  }
  if (ext === '.ppm') {
    return decodePpm(file)
  }
  throw new Error(`${file}: unsupported image format (expected .npy or .ppm)`)
}

function decodePpm(file: string): tf.Tensor3D {
  const raw = fs.readFileSync(file)
  // header: "P6" <ws> width <ws> height <ws> maxval <single ws> pixels
  let off = 0
  const token = () => {
    while (off < raw.length && isSpace(raw[off])) {
      if (raw[off] === 0x23) {
        // comment runs to end of line
        while (off < raw.length && raw[off] !== 0x0a) off++
      }
      off++
    }
    const start = off
    while (off < raw.length && !isSpace(raw[off])) off++
    return raw.subarray(start, off).toString('ascii')
  }
  const isSpace = (b: number) => b === 0x20 || b === 0x09 || b === 0x0a || b === 0x0d || b === 0x23
  if (token() !== 'P6') throw new Error(`${file}: not a binary PPM (P6) file`)
  const width = parseInt(token(), 10)
  const height = parseInt(token(), 10)
  const maxval = parseInt(token(), 10)
  if (!(width > 0 && height > 0) || maxval !== 255) {
    throw new Error(`${file}: unsupported PPM geometry or maxval`)
  }
  off++ // single whitespace after maxval
  const need = width * height * 3
  const pixels = raw.subarray(off, off + need)
  if (pixels.length !== need) throw new Error(`${file}: truncated PPM payload`)
  const data = new Float32Array(need)
  for (let i = 0; i < need; i++) data[i] = pixels[i] / 255
  return tf.tensor3d(data, [height, width, 3])
}

export function listImages(dir: string): string[] {
  const files = fs
    .readdirSync(dir)
    .filter((f) => IMAGE_EXTENSIONS.includes(path.extname(f).toLowerCase()))
    .sort()
  return files.map((f) => path.join(dir, f))
}

export function imageId(file: string): string {
  return path.basename(file, path.extname(file))
}
