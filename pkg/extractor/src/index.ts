export { encodeNpy, readNpy, writeNpy } from './npy'
export { imageId, listImages, loadImage } from './images'
export { getLayer, layerNames, loadModel, saveModel } from './model'
export {
  DEFAULT_GRID,
  extractAConv,
  extractOConv,
  gridSteps,
  randomProjection,
} from './extract'
export type { ExtractedPair, RegionGrid } from './extract'
export { writeManifest } from './manifest'
export type { ManifestEntry } from './manifest'
