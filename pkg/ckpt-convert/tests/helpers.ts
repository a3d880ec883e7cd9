import * as fs from 'node:fs';
import * as path from 'node:path';

import { requiredTensors, TensorSpec } from '../src/graph.js';
import { MapEntry, formatNameMap } from '../src/namemap.js';
import { NpyArray, serializeNpy } from '../src/npy.js';
import { transposeOihwToHwio } from '../src/convert.js';
import { writeZipStored, ZipEntry } from '../src/zip.js';

/** Deterministic float32 tensor filler (mulberry32). */
export function seededArray(count: number, seed: number): Float32Array {
    let a = seed >>> 0;
    const data = new Float32Array(count);
    for (let i = 0; i < count; i++) {
        a |= 0; a = (a + 0x6d2b79f5) | 0;
        let t = Math.imul(a ^ (a >>> 15), 1 | a);
        t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
        data[i] = Math.fround((((t ^ (t >>> 14)) >>> 0) / 4294967296) - 0.5);
    }
    return data;
}

export interface SyntheticCheckpoint {
    ckptPath: string;
    mapPath: string;
    /** engine-layout tensors keyed by target name */
    originals: Map<string, NpyArray>;
}

export function sourceName(target: string): string {
    return `net/${target.replace(/\//g, '.')}`;
}

/**
 * Synthetic upstream checkpoint: every demanded tensor, random values,
 * kernels stored in (H, W, in, out) layout under upstream-style names,
 * plus the map file that binds them back.
 */
export function writeSyntheticCheckpoint(
    dir: string, opts: { skipTargets?: string[], breakShapes?: string[] } = {},
): SyntheticCheckpoint {
    const specs: TensorSpec[] = requiredTensors();
    const entries: ZipEntry[] = [];
    const mapEntries: MapEntry[] = [];
    const originals = new Map<string, NpyArray>();

    specs.forEach((spec, idx) => {
        const count = spec.shape.reduce((a, b) => a * b, 1);
        const arr: NpyArray = { shape: spec.shape,
                                data: seededArray(count, 1000 + idx) };
        originals.set(spec.name, arr);
        let stored = arr;
        if (spec.shape.length === 4) {
            stored = transposeOihwToHwio(arr);
        }
        if (opts.breakShapes?.includes(spec.name)) {
            stored = { shape: [...stored.shape].reverse(), data: stored.data };
        }
        entries.push({ name: `${sourceName(spec.name)}.npy`,
                       data: serializeNpy(stored) });
        if (!opts.skipTargets?.includes(spec.name)) {
            mapEntries.push({ source: sourceName(spec.name), target: spec.name });
        }
    });

    const ckptPath = path.join(dir, 'checkpoint.npz');
    const mapPath = path.join(dir, 'names.map');
    fs.writeFileSync(ckptPath, writeZipStored(entries));
    fs.writeFileSync(mapPath, '# synthetic checkpoint map\n'
        + formatNameMap(mapEntries));
    return { ckptPath, mapPath, originals };
}
