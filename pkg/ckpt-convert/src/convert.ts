/**
 * Checkpoint extraction: npz archive -> PYDW container under the engine's
 * naming convention, with layout transposition and full validation.
 */

import * as fs from 'node:fs';
import * as path from 'node:path';

import { requiredTensors, totalParams } from './graph.js';
import { Layout, MapEntry, parseNameMap } from './namemap.js';
import { NpyArray, parseNpy } from './npy.js';
import { PydwEntry, parsePydw, writePydw } from './pydw.js';
import { readZip } from './zip.js';

export interface Checkpoint {
    tensors: Map<string, NpyArray>;
}

export function loadCheckpoint(ckptPath: string): Checkpoint {
    const buf = fs.readFileSync(ckptPath);
    const entries = readZip(buf, ckptPath);
    const tensors = new Map<string, NpyArray>();
    for (const entry of entries) {
        if (!entry.name.endsWith('.npy')) {
            continue;
        }
        const name = entry.name.slice(0, -4);
        if (tensors.has(name)) {
            throw new Error(`${ckptPath}: duplicate tensor ${name}`);
        }
        tensors.set(name, parseNpy(entry.data, `${ckptPath}:${entry.name}`));
    }
    return { tensors };
}

export function transposeHwioToOihw(arr: NpyArray): NpyArray {
    const [h, w, ci, co] = arr.shape;
    const out = new Float32Array(arr.data.length);
    for (let o = 0; o < co; o++) {
        for (let i = 0; i < ci; i++) {
            for (let y = 0; y < h; y++) {
                for (let x = 0; x < w; x++) {
                    out[((o * ci + i) * h + y) * w + x] =
                        arr.data[((y * w + x) * ci + i) * co + o];
                }
            }
        }
    }
    return { shape: [co, ci, h, w], data: out };
}

export function transposeOihwToHwio(arr: NpyArray): NpyArray {
    const [co, ci, h, w] = arr.shape;
    const out = new Float32Array(arr.data.length);
    for (let y = 0; y < h; y++) {
        for (let x = 0; x < w; x++) {
            for (let i = 0; i < ci; i++) {
                for (let o = 0; o < co; o++) {
                    out[((y * w + x) * ci + i) * co + o] =
                        arr.data[((o * ci + i) * h + y) * w + x];
                }
            }
        }
    }
    return { shape: [h, w, ci, co], data: out };
}

function effectiveLayout(entry: MapEntry, rank: number): Layout {
    if (entry.layout) {
        return entry.layout;
    }
    return rank === 4 ? 'hwio' : 'none';
}

export interface ConvertResult {
    outPath: string;
    manifestPath: string;
    params: number;
    applied: number;
}

export function convert(ckptPath: string, mapPath: string,
                        outPath: string): ConvertResult {
    const ckpt = loadCheckpoint(ckptPath);
    const map = parseNameMap(fs.readFileSync(mapPath, 'utf-8'), mapPath);
    const specs = requiredTensors();
    const specByName = new Map(specs.map((s) => [s.name, s]));

    const converted = new Map<string, NpyArray>();
    const manifest: string[] = [];
    for (const entry of map) {
        const spec = specByName.get(entry.target);
        if (!spec) {
            throw new Error(`${mapPath}: target ${entry.target} is not a `
                + `tensor the network demands`);
        }
        if (converted.has(entry.target)) {
            throw new Error(`${mapPath}: duplicate target ${entry.target}`);
        }
        const src = ckpt.tensors.get(entry.source);
        if (!src) {
            throw new Error(`${ckptPath}: checkpoint has no tensor `
                + `${entry.source} (mapped to ${entry.target})`);
        }
        const layout = effectiveLayout(entry, src.shape.length);
        let arr = src;
        if (layout === 'hwio') {
            if (src.shape.length !== 4) {
                throw new Error(`${entry.source}: hwio layout needs a rank-4 `
                    + `tensor, got rank ${src.shape.length}`);
            }
            arr = transposeHwioToOihw(src);
        }
        if (arr.shape.length !== spec.shape.length
            || arr.shape.some((d, i) => d !== spec.shape[i])) {
            throw new Error(`${entry.target}: shape [${arr.shape}] after `
                + `${layout} transposition does not match expected `
                + `[${spec.shape}]`);
        }
        converted.set(entry.target, arr);
        manifest.push(`${entry.source} -> ${entry.target} ${layout} `
            + `[${arr.shape}]`);
    }

    const gaps = specs.filter((s) => !converted.has(s.name)).map((s) => s.name);
    if (gaps.length > 0) {
        throw new Error(`name map leaves ${gaps.length} required tensor(s) `
            + `unmapped: ${gaps.join(', ')}`);
    }

    // container entries follow the engine's canonical ordering
    const entries: PydwEntry[] = specs.map((s) => {
        const arr = converted.get(s.name)!;
        return { name: s.name, shape: arr.shape, data: arr.data };
    });
    const blob = writePydw(entries);
    const back = parsePydw(blob, outPath);   // self-validation before rename
    if (back.length !== entries.length) {
        throw new Error(`${outPath}: self-validation failed`);
    }

    const tmpPath = `${outPath}.tmp-${process.pid}`;
    fs.writeFileSync(tmpPath, blob);
    fs.renameSync(tmpPath, outPath);

    const manifestPath = `${outPath}.manifest.txt`;
    fs.writeFileSync(manifestPath, manifest.join('\n') + '\n');
    return {
        outPath: path.resolve(outPath),
        manifestPath: path.resolve(manifestPath),
        params: totalParams(specs),
        applied: manifest.length,
    };
}

export function dumpNames(ckptPath: string): string[] {
    const ckpt = loadCheckpoint(ckptPath);
    return [...ckpt.tensors.keys()].sort().map((name) => {
        const arr = ckpt.tensors.get(name)!;
        return `${name}  ${arr.shape.join('x')}`;
    });
}
