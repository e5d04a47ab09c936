import * as fs from 'fs'
import * as os from 'os'
import * as path from 'path'
import * as tf from '@tensorflow/tfjs'

import { writeNpy } from '../src/npy'

export function tempDir(prefix: string): string {
  return fs.mkdtempSync(path.join(os.tmpdir(), prefix))
}

/** Small conv stack: conv_a and conv_b share a 24x24 grid; conv_c sits
 * behind a pooling layer so pairing it with conv_a must fail. */
export function makeConvModel(): tf.LayersModel {
  const model = tf.sequential()
  model.add(
    tf.layers.conv2d({
      filters: 4,
      kernelSize: 3,
      padding: 'same',
      activation: 'relu',
      inputShape: [24, 24, 3],
      name: 'conv_a',
    }),
  )
  model.add(
    tf.layers.conv2d({
      filters: 5,
      kernelSize: 3,
      padding: 'same',
      activation: 'relu',
      name: 'conv_b',
    }),
  )
  model.add(tf.layers.maxPooling2d({ poolSize: 2, name: 'pool' }))
  model.add(
    tf.layers.conv2d({
      filters: 6,
      kernelSize: 3,
      padding: 'same',
      activation: 'relu',
      name: 'conv_c',
    }),
  )
  return model
}

/** Region descriptor model: accepts one region and emits a flat vector. */
export function makeRegionModel(regionSize: number): tf.LayersModel {
  const model = tf.sequential()
  model.add(
    tf.layers.avgPooling2d({
      poolSize: 16,
      strides: 16,
      inputShape: [regionSize, regionSize, 3],
      name: 'pool',
    }),
  )
  model.add(tf.layers.flatten({ name: 'flat' }))
  model.add(tf.layers.dense({ units: 12, activation: 'relu', name: 'fc' }))
  return model
}

export function writeRandomImage(file: string, h: number, w: number): void {
  const data = new Float32Array(h * w * 3)
  let state = 1234567
  for (let i = 0; i < data.length; i++) {
    state = (state * 1103515245 + 12345) & 0x7fffffff
    data[i] = state / 0x7fffffff
  }
  writeNpy(file, [h, w, 3], data)
}

export function writePpm(file: string, h: number, w: number): void {
  const header = Buffer.from(`P6\n${w} ${h}\n255\n`, 'ascii')
  const pixels = Buffer.alloc(h * w * 3)
  for (let i = 0; i < pixels.length; i++) pixels[i] = (i * 37 + 11) % 256
  fs.writeFileSync(file, Buffer.concat([header, pixels]))
}
