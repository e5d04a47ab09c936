import * as fs from 'fs'
import * as path from 'path'

export interface ManifestEntry {
  image_id: string
  local_path: string
  guide_path: string
}

/** Write the manifest the pooling CLI consumes; paths are stored relative
 * to the manifest's own directory. */
export function writeManifest(outDir: string, entries: ManifestEntry[]): string {
  const file = path.join(outDir, 'manifest.json')
  fs.writeFileSync(file, JSON.stringify(entries, null, 2) + '\n')
  return file
}
