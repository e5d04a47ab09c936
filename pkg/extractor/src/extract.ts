/**
 * Activation extraction. Two modes:
 *
 * - oconv: run the model once and dump two named convolutional layers that
 *   share a spatial grid, local (lower) and guide (upper).
 * - aconv: resize the image, slide a dense region grid over it, and treat
 *   the model's fully-connected activations per region as the spatial
 *   units of a synthetic convolutional layer. The guide layer is the same
 *   activations sent through a fixed random projection, an untrained
 *   stand-in that callers must opt into with `untrainedGuide`.
 */
import * as tf from '@tensorflow/tfjs'

import { getLayer } from './model'

export interface RegionGrid {
  resize: number
  region: number
  stride: number
}

export const DEFAULT_GRID: RegionGrid = { resize: 512, region: 128, stride: 32 }

export interface ExtractedPair {
  local: { shape: number[]; data: Float32Array }
  guide: { shape: number[]; data: Float32Array }
}

export function gridSteps(grid: RegionGrid): number {
  if (grid.resize <= 0 || grid.region <= 0 || grid.stride <= 0) {
    throw new Error('resize, region and stride must all be positive')
  }
  if (grid.region > grid.resize) {
    throw new Error(`region ${grid.region} exceeds resized image ${grid.resize}`)
  }
  return Math.floor((grid.resize - grid.region) / grid.stride) + 1
}

async function tensorPayload(t: tf.Tensor): Promise<{ shape: number[]; data: Float32Array }> {
  const data = (await t.data()) as Float32Array
  return { shape: t.shape.slice(), data: Float32Array.from(data) }
}

/** Extract two consecutive convolutional layers over the same spatial grid. */
export async function extractOConv(
  model: tf.LayersModel,
  image: tf.Tensor3D,
  localLayer: string,
  guideLayer: string,
): Promise<ExtractedPair> {
  const lower = getLayer(model, localLayer)
  const upper = getLayer(model, guideLayer)
  const tap = tf.model({
    inputs: model.inputs,
    outputs: [lower.output as tf.SymbolicTensor, upper.output as tf.SymbolicTensor],
  })
  const batch = image.expandDims(0)
  const [localOut, guideOut] = tap.predict(batch) as tf.Tensor[]
  batch.dispose()
  try {
    if (localOut.rank !== 4 || guideOut.rank !== 4) {
      throw new Error(
        `layers '${localLayer}' and '${guideLayer}' must produce spatial ` +
          `(H, W, D) activations; pick convolutional layers`,
      )
    }
    const [, lh, lw] = localOut.shape
    const [, gh, gw] = guideOut.shape
    if (lh !== gh || lw !== gw) {
      throw new Error(
        `layers '${localLayer}' (${lh}x${lw}) and '${guideLayer}' (${gh}x${gw}) ` +
          `do not share a spatial grid; choose consecutive layers with no ` +
          `pooling between them`,
      )
    }
    return {
      local: await tensorPayload(localOut.squeeze([0])),
      guide: await tensorPayload(guideOut.squeeze([0])),
    }
  } finally {
    localOut.dispose()
    guideOut.dispose()
  }
}

/**
 * Extract dense regional activations as a synthetic convolutional layer.
 * `fcLayer` selects which layer's flat activations describe each region
 * (default: the model's final output).
 */
export async function extractAConv(
  model: tf.LayersModel,
  image: tf.Tensor3D,
  options: {
    grid?: RegionGrid
    guideChannels?: number
    seed?: number
    untrainedGuide?: boolean
    fcLayer?: string
  } = {},
): Promise<ExtractedPair> {
  const grid = options.grid ?? DEFAULT_GRID
  const guideChannels = options.guideChannels ?? 100
  if (!options.untrainedGuide) {
    throw new Error(
      'aconv mode derives the guide layer from an untrained random ' +
        'projection; pass untrainedGuide (--untrained-guide) to accept that',
    )
  }
  const steps = gridSteps(grid)

  let tap = model
  if (options.fcLayer) {
    const layer = getLayer(model, options.fcLayer)
    tap = tf.model({
      inputs: model.inputs,
      outputs: layer.output as tf.SymbolicTensor,
    })
  }

  const regionActs = tf.tidy(() => {
    const resized = tf.image.resizeBilinear(image, [grid.resize, grid.resize])
    const regions: tf.Tensor3D[] = []
    for (let r = 0; r < steps; r++) {
      for (let c = 0; c < steps; c++) {
        regions.push(
          tf.slice(resized, [r * grid.stride, c * grid.stride, 0], [
            grid.region,
            grid.region,
            -1,
          ]) as tf.Tensor3D,
        )
      }
    }
    const batch = tf.stack(regions)
    const acts = tap.predict(batch) as tf.Tensor
    if (acts.rank !== 2) {
      throw new Error(
        `expected flat per-region activations, got rank ${acts.rank}; ` +
          `point --layer at a fully-connected layer`,
      )
    }
    return acts as tf.Tensor2D
  })

  try {
    const depth = regionActs.shape[1]
    const guide = tf.tidy(() => {
      const projection = randomProjection(depth, guideChannels, options.seed ?? 0)
      return tf.matMul(regionActs, projection)
    })
    try {
      const localFlat = (await regionActs.data()) as Float32Array
      const guideFlat = (await guide.data()) as Float32Array
      return {
        local: { shape: [steps, steps, depth], data: Float32Array.from(localFlat) },
        guide: {
          shape: [steps, steps, guideChannels],
          data: Float32Array.from(guideFlat),
        },
      }
    } finally {
      guide.dispose()
    }
  } finally {
    regionActs.dispose()
  }
}

/** Deterministic Gaussian projection matrix (mulberry32 + Box-Muller). */
export function randomProjection(rows: number, cols: number, seed: number): tf.Tensor2D {
  let state = (seed >>> 0) || 0x9e3779b9
  const next = () => {
    state = (state + 0x6d2b79f5) >>> 0
    let t = state
    t = Math.imul(t ^ (t >>> 15), t | 1)
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61)
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296
  }
  const scale = 1 / Math.sqrt(rows)
  const values = new Float32Array(rows * cols)
  for (let i = 0; i < values.length; i++) {
    const u = Math.max(next(), 1e-12)
    const v = next()
    values[i] = Math.sqrt(-2 * Math.log(u)) * Math.cos(2 * Math.PI * v) * scale
  }
  return tf.tensor2d(values, [rows, cols])
}
