/**
 * Loading and saving tfjs LayersModels on the local filesystem without the
 * node-specific tfjs package: model.json plus binary weight shards.
 */
import * as fs from 'fs'
import * as path from 'path'
import * as tf from '@tensorflow/tfjs'

export async function loadModel(modelJsonPath: string): Promise<tf.LayersModel> {
  if (!fs.existsSync(modelJsonPath)) {
    throw new Error(`model file not found: ${modelJsonPath}`)
  }
  const dir = path.dirname(modelJsonPath)
  const json = JSON.parse(fs.readFileSync(modelJsonPath, 'utf8'))
  const weightSpecs: tf.io.WeightsManifestEntry[] = []
  const shards: Buffer[] = []
  for (const group of json.weightsManifest ?? []) {
    weightSpecs.push(...group.weights)
    for (const p of group.paths) {
      shards.push(fs.readFileSync(path.join(dir, p)))
    }
  }
  const weights = Buffer.concat(shards)
  return tf.loadLayersModel(
    tf.io.fromMemory({
      modelTopology: json.modelTopology,
      weightSpecs,
      weightData: weights.buffer.slice(
        weights.byteOffset,
        weights.byteOffset + weights.byteLength,
      ),
    }),
  )
}

export async function saveModel(model: tf.LayersModel, dir: string): Promise<void> {
  fs.mkdirSync(dir, { recursive: true })
  await model.save(
    tf.io.withSaveHandler(async (artifacts) => {
      const weightData = artifacts.weightData as ArrayBuffer
      fs.writeFileSync(path.join(dir, 'weights.bin'), Buffer.from(weightData))
      const modelJson = {
        modelTopology: artifacts.modelTopology,
        format: artifacts.format,
        generatedBy: artifacts.generatedBy,
        convertedBy: artifacts.convertedBy,
        weightsManifest: [{ paths: ['weights.bin'], weights: artifacts.weightSpecs }],
      }
      fs.writeFileSync(path.join(dir, 'model.json'), JSON.stringify(modelJson))
      return {
        modelArtifactsInfo: {
          dateSaved: new Date(),
          modelTopologyType: 'JSON' as const,
        },
      }
    }),
  )
}

export function layerNames(model: tf.LayersModel): string[] {
  return model.layers.map((l) => l.name)
}

export function getLayer(model: tf.LayersModel, name: string): tf.layers.Layer {
  const layer = model.layers.find((l) => l.name === name)
  if (!layer) {
    throw new Error(
      `unknown layer '${name}'; available layers: ${layerNames(model).join(', ')}`,
    )
  }
  return layer
}
