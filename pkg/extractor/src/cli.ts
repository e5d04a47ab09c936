#!/usr/bin/env node
/**
 * xlextract: dump paired activation tensors for every image in a directory.
 *
 *   xlextract --model m/model.json --layers conv_a,conv_b --mode oconv \
 *       --images imgs/ --out tensors/
 *   xlextract --model m/model.json --mode aconv --untrained-guide \
 *       --guide-k 100 --images imgs/ --out tensors/
 *
 * Writes <id>_local.npy and <id>_guide.npy per image plus manifest.json.
 */
import * as fs from 'fs'
import * as path from 'path'
import { parseArgs } from 'util'

import { DEFAULT_GRID, extractAConv, extractOConv } from './extract'
import { imageId, listImages, loadImage } from './images'
import { writeManifest, ManifestEntry } from './manifest'
import { loadModel } from './model'
import { writeNpy } from './npy'

const USAGE = `usage: xlextract --model model.json --mode {oconv,aconv} --images DIR --out DIR
  oconv:  --layers LOCAL,GUIDE        two conv layers sharing a spatial grid
  aconv:  --untrained-guide           accept the random-projection guide stand-in
          [--layer NAME]              fully-connected layer (default: model output)
          [--guide-k N]               guide channels (default 100)
          [--resize N --region N --stride N]   region grid (default 512/128/32)
          [--seed N]                  projection seed (default 0)
`

export async function run(argv: string[]): Promise<number> {
  let args
  try {
    args = parseArgs({
      args: argv,
      options: {
        model: { type: 'string' },
        mode: { type: 'string' },
        layers: { type: 'string' },
        layer: { type: 'string' },
        images: { type: 'string' },
        out: { type: 'string' },
        'guide-k': { type: 'string', default: '100' },
        resize: { type: 'string', default: String(DEFAULT_GRID.resize) },
        region: { type: 'string', default: String(DEFAULT_GRID.region) },
        stride: { type: 'string', default: String(DEFAULT_GRID.stride) },
        seed: { type: 'string', default: '0' },
        'untrained-guide': { type: 'boolean', default: false },
        help: { type: 'boolean', default: false },
      },
    }).values
  } catch (err) {
    process.stderr.write(`xlextract: ${(err as Error).message}\n${USAGE}`)
    return 2
  }
  if (args.help) {
    process.stderr.write(USAGE)
    return 0
  }
  for (const required of ['model', 'mode', 'images', 'out'] as const) {
    if (!args[required]) {
      process.stderr.write(`xlextract: --${required} is required\n${USAGE}`)
      return 2
    }
  }
  if (args.mode !== 'oconv' && args.mode !== 'aconv') {
    process.stderr.write(`xlextract: --mode must be oconv or aconv\n`)
    return 2
  }
  let layers: [string, string] | null = null
  if (args.mode === 'oconv') {
    const parts = (args.layers ?? '').split(',').filter((s) => s.length > 0)
    if (parts.length !== 2) {
      process.stderr.write(
        'xlextract: oconv mode needs exactly two layers, --layers LOCAL,GUIDE\n',
      )
      return 2
    }
    layers = [parts[0], parts[1]]
  }

  try {
    const model = await loadModel(args.model!)
    const images = listImages(args.images!)
    if (images.length === 0) {
      process.stderr.write(`xlextract: no .npy or .ppm images in ${args.images}\n`)
      return 2
    }
    fs.mkdirSync(args.out!, { recursive: true })
    const entries: ManifestEntry[] = []
    for (const file of images) {
      const id = imageId(file)
      const image = loadImage(file)
      const pair =
        args.mode === 'oconv'
          ? await extractOConv(model, image, layers![0], layers![1])
          : await extractAConv(model, image, {
              grid: {
                resize: parseInt(args.resize!, 10),
                region: parseInt(args.region!, 10),
                stride: parseInt(args.stride!, 10),
              },
              guideChannels: parseInt(args['guide-k']!, 10),
              seed: parseInt(args.seed!, 10),
              untrainedGuide: args['untrained-guide'],
              fcLayer: args.layer,
            })
      image.dispose()
      const localName = `${id}_local.npy`
      const guideName = `${id}_guide.npy`
      writeNpy(path.join(args.out!, localName), pair.local.shape, pair.local.data)
      writeNpy(path.join(args.out!, guideName), pair.guide.shape, pair.guide.data)
      entries.push({ image_id: id, local_path: localName, guide_path: guideName })
      process.stderr.write(
        `xlextract: ${id} -> local ${pair.local.shape.join('x')}, ` +
          `guide ${pair.guide.shape.join('x')}\n`,
      )
    }
    writeManifest(args.out!, entries)
    return 0
  } catch (err) {
    process.stderr.write(`xlextract: ${(err as Error).message}\n`)
    return 1
  }
}

if (require.main === module) {
  run(process.argv.slice(2)).then((code) => {
    process.exitCode = code
  })
}
