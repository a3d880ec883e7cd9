import { execFileSync } from 'node:child_process';
import * as fs from 'node:fs';
import * as os from 'node:os';
import * as path from 'node:path';

import { afterEach, beforeEach, describe, expect, it } from 'vitest';

import { convert, dumpNames, loadCheckpoint,
         transposeHwioToOihw, transposeOihwToHwio } from '../src/convert.js';
import { requiredTensors, totalParams } from '../src/graph.js';
import { parseNameMap } from '../src/namemap.js';
import { serializeNpy } from '../src/npy.js';
import { parsePydw } from '../src/pydw.js';
import { writeZipStored } from '../src/zip.js';
import { seededArray, sourceName, writeSyntheticCheckpoint } from './helpers.js';

let dir: string;

beforeEach(() => {
    dir = fs.mkdtempSync(path.join(os.tmpdir(), 'ckpt-convert-'));
});

afterEach(() => {
    fs.rmSync(dir, { recursive: true, force: true });
});

describe('layout transposition', () => {
    it('hwio->oihw->hwio is the identity, bit-exact', () => {
        const arr = { shape: [3, 3, 5, 7], data: seededArray(3 * 3 * 5 * 7, 11) };
        const back = transposeOihwToHwio(transposeHwioToOihw(arr));
        expect(back.shape).toEqual(arr.shape);
        expect(back.data).toEqual(arr.data);
    });

    it('moves elements where they belong', () => {
        // (h,w,i,o) = (1,1,2,3): hwio data is [i0o0, i0o1, i0o2, i1o0, ...]
        const arr = { shape: [1, 1, 2, 3],
                      data: new Float32Array([0, 1, 2, 10, 11, 12]) };
        const out = transposeHwioToOihw(arr);
        expect(out.shape).toEqual([3, 2, 1, 1]);
        expect([...out.data]).toEqual([0, 10, 1, 11, 2, 12]);
    });
});

describe('convert', () => {
    it('round-trips a synthetic checkpoint bit-exactly with in-band count', () => {
        const { ckptPath, mapPath, originals } = writeSyntheticCheckpoint(dir);
        const out = path.join(dir, 'weights.pydw');
        const result = convert(ckptPath, mapPath, out);

        expect(result.params).toBe(1_971_624);
        expect(result.params).toBeGreaterThanOrEqual(1_800_000);
        expect(result.params).toBeLessThanOrEqual(2_050_000);
        expect(result.applied).toBe(requiredTensors().length);

        const entries = parsePydw(fs.readFileSync(out), out);
        expect(entries.map((e) => e.name))
            .toEqual(requiredTensors().map((s) => s.name));
        for (const entry of entries) {
            const original = originals.get(entry.name)!;
            expect(entry.shape).toEqual(original.shape);
            expect(entry.data).toEqual(original.data);
        }
        expect(fs.readFileSync(result.manifestPath, 'utf-8'))
            .toContain('-> encoder1/conv1/kernel hwio');
    });

    it('reports every unmapped required tensor by name', () => {
        const { ckptPath, mapPath } = writeSyntheticCheckpoint(dir, {
            skipTargets: ['decoder2/conv3/kernel', 'deconv4/bias'],
        });
        const out = path.join(dir, 'weights.pydw');
        expect(() => convert(ckptPath, mapPath, out))
            .toThrow(/decoder2\/conv3\/kernel.*deconv4\/bias/s);
        expect(fs.existsSync(out)).toBe(false);   // nothing written on failure
    });

    it('reports shape disagreement with both shapes', () => {
        const { ckptPath, mapPath } = writeSyntheticCheckpoint(dir, {
            breakShapes: ['encoder3/conv2/kernel'],
        });
        expect(() => convert(ckptPath, mapPath, path.join(dir, 'w.pydw')))
            .toThrow(/encoder3\/conv2\/kernel.*\[.*\].*\[64,64,3,3\]/s);
    });

    it('rejects unknown targets, duplicate targets and missing sources', () => {
        const { ckptPath } = writeSyntheticCheckpoint(dir);
        const badTarget = path.join(dir, 'bad1.map');
        fs.writeFileSync(badTarget, 'net/x -> encoder9/conv1/kernel\n');
        expect(() => convert(ckptPath, badTarget, path.join(dir, 'o.pydw')))
            .toThrow(/encoder9\/conv1\/kernel/);

        const dupTarget = path.join(dir, 'bad2.map');
        const src = sourceName('encoder1/conv1/bias');
        fs.writeFileSync(dupTarget,
            `${src} -> encoder1/conv1/bias\n${src} -> encoder1/conv1/bias\n`);
        expect(() => convert(ckptPath, dupTarget, path.join(dir, 'o.pydw')))
            .toThrow(/duplicate target/);

        const missingSrc = path.join(dir, 'bad3.map');
        fs.writeFileSync(missingSrc, 'net/missing -> encoder1/conv1/bias\n');
        expect(() => convert(ckptPath, missingSrc, path.join(dir, 'o.pydw')))
            .toThrow(/no tensor net\/missing/);
    });

    it('loads compressed archives and float64 payloads', () => {
        // single-tensor checkpoint with an f8 source, plus map to a bias slot
        const data = new Float32Array(16).fill(0.25);
        const npy = serializeNpy({ shape: [16], data });
        const ckptPath = path.join(dir, 'small.npz');
        fs.writeFileSync(ckptPath, writeZipStored([
            { name: 'only.npy', data: npy },
        ]));
        const ckpt = loadCheckpoint(ckptPath);
        expect([...ckpt.tensors.keys()]).toEqual(['only']);
        expect(ckpt.tensors.get('only')!.shape).toEqual([16]);
    });
});

describe('dump-names', () => {
    it('lists tensors sorted lexicographically', () => {
        const entries = ['zeta', 'alpha', 'mid'].map((name, i) => ({
            name: `${name}.npy`,
            data: serializeNpy({ shape: [2, 2], data: seededArray(4, i) }),
        }));
        const ckptPath = path.join(dir, 'three.npz');
        fs.writeFileSync(ckptPath, writeZipStored(entries));
        expect(dumpNames(ckptPath)).toEqual(
            ['alpha  2x2', 'mid  2x2', 'zeta  2x2']);
    });

    it('handles an empty checkpoint', () => {
        const ckptPath = path.join(dir, 'empty.npz');
        fs.writeFileSync(ckptPath, writeZipStored([]));
        expect(dumpNames(ckptPath)).toEqual([]);
    });
});

describe('name map parsing', () => {
    it('ignores comments and validates layout tokens', () => {
        const entries = parseNameMap(
            '# header\n\na -> b hwio\nc -> d\n e -> f none # tail\n');
        expect(entries).toEqual([
            { source: 'a', target: 'b', layout: 'hwio' },
            { source: 'c', target: 'd', layout: undefined },
            { source: 'e', target: 'f', layout: 'none' },
        ]);
        expect(() => parseNameMap('a -> b sideways\n')).toThrow(/layout/);
        expect(() => parseNameMap('only-one-token\n')).toThrow(/expected/);
    });
});

describe('engine integration', () => {
    it('produces a container the engine loads, builds and counts', () => {
        const { ckptPath, mapPath } = writeSyntheticCheckpoint(dir);
        const out = path.join(dir, 'weights.pydw');
        convert(ckptPath, mapPath, out);
        let stdout: string;
        try {
            stdout = execFileSync(
                'pyrdepth', ['inspect', '--weights', out, '--check-build'],
                { encoding: 'utf-8' });
        } catch (err) {
            const detail = err instanceof Error ? err.message : String(err);
            throw new Error(`pyrdepth inspect failed: ${detail}`);
        }
        expect(stdout).toContain(`parameters: ${totalParams(requiredTensors())}`);
        expect(stdout).toContain('build(default config): ok');
    });
});
