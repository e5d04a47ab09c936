import * as path from 'path'
import * as tf from '@tensorflow/tfjs'
import { describe, expect, it } from 'vitest'

import { extractAConv, extractOConv, gridSteps } from '../src/extract'
import { loadImage } from '../src/images'
import { loadModel, saveModel } from '../src/model'
import {
  makeConvModel,
  makeRegionModel,
  tempDir,
  writePpm,
  writeRandomImage,
} from './helpers'

describe('region grid geometry', () => {
  it('the default grid has 13 steps per axis', () => {
    expect(gridSteps({ resize: 512, region: 128, stride: 32 })).toBe(13)
  })

  it('rejects degenerate grids', () => {
    expect(() => gridSteps({ resize: 128, region: 256, stride: 32 })).toThrow(/exceeds/)
    expect(() => gridSteps({ resize: 512, region: 128, stride: 0 })).toThrow(/positive/)
  })
})

describe('oconv extraction', () => {
  it('dumps two layers over the same spatial grid', async () => {
    const model = makeConvModel()
    const image = tf.randomUniform([24, 24, 3]) as tf.Tensor3D
    const pair = await extractOConv(model, image, 'conv_a', 'conv_b')
    expect(pair.local.shape).toEqual([24, 24, 4])
    expect(pair.guide.shape).toEqual([24, 24, 5])
    expect(pair.local.data.every(Number.isFinite)).toBe(true)
  })

  it('unknown layer errors list the available layers', async () => {
    const model = makeConvModel()
    const image = tf.randomUniform([24, 24, 3]) as tf.Tensor3D
    await expect(extractOConv(model, image, 'conv_a', 'nope')).rejects.toThrow(
      /available layers: .*conv_b/,
    )
  })

  it('mismatched grids advise picking consecutive layers', async () => {
    const model = makeConvModel()
    const image = tf.randomUniform([24, 24, 3]) as tf.Tensor3D
    await expect(extractOConv(model, image, 'conv_a', 'conv_c')).rejects.toThrow(
      /do not share a spatial grid/,
    )
  })
})

describe('aconv extraction', () => {
  it('produces a 13x13 grid with the default region parameters', async () => {
    const model = makeRegionModel(128)
    const dir = tempDir('img-')
    writeRandomImage(path.join(dir, 'img.npy'), 64, 64)
    const image = loadImage(path.join(dir, 'img.npy'))
    const pair = await extractAConv(model, image, {
      untrainedGuide: true,
      guideChannels: 7,
    })
    expect(pair.local.shape).toEqual([13, 13, 12])
    expect(pair.guide.shape).toEqual([13, 13, 7])
  }, 60_000)

  it('requires opting into the untrained guide stand-in', async () => {
    const model = makeRegionModel(64)
    const image = tf.randomUniform([32, 32, 3]) as tf.Tensor3D
    await expect(
      extractAConv(model, image, { grid: { resize: 128, region: 64, stride: 16 } }),
    ).rejects.toThrow(/untrained/)
  })

  it('is deterministic for a saved model', async () => {
    const dir = tempDir('model-')
    await saveModel(makeRegionModel(64), dir)
    const model = await loadModel(path.join(dir, 'model.json'))
    writePpm(path.join(dir, 'img.ppm'), 48, 40)
    const grid = { resize: 128, region: 64, stride: 16 }
    const first = await extractAConv(model, loadImage(path.join(dir, 'img.ppm')), {
      grid,
      untrainedGuide: true,
      guideChannels: 5,
      seed: 3,
    })
    const second = await extractAConv(model, loadImage(path.join(dir, 'img.ppm')), {
      grid,
      untrainedGuide: true,
      guideChannels: 5,
      seed: 3,
    })
    expect(Array.from(second.local.data)).toEqual(Array.from(first.local.data))
    expect(Array.from(second.guide.data)).toEqual(Array.from(first.guide.data))
  })
})

describe('model persistence', () => {
  it('save then load preserves weights and layer names', async () => {
    const dir = tempDir('model-')
    const model = makeConvModel()
    await saveModel(model, dir)
    const back = await loadModel(path.join(dir, 'model.json'))
    expect(back.layers.map((l) => l.name)).toEqual(
      model.layers.map((l) => l.name),
    )
    const x = tf.randomUniform([1, 24, 24, 3])
    const a = (model.predict(x) as tf.Tensor).dataSync()
    const b = (back.predict(x) as tf.Tensor).dataSync()
    expect(Array.from(b)).toEqual(Array.from(a))
  })

  it('missing model path raises a clear error', async () => {
    await expect(loadModel('/nope/model.json')).rejects.toThrow(/not found/)
  })
})
