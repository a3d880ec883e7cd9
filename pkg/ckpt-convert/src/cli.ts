#!/usr/bin/env node
/**
 * ckpt-convert convert --ckpt model.npz --map names.map --out weights.pydw
 * ckpt-convert dump-names --ckpt model.npz
 */

import { parseArgs } from 'node:util';

import { convert, dumpNames } from './convert.js';

function usage(): never {
    console.error('usage: ckpt-convert convert --ckpt P --map P --out P');
    console.error('       ckpt-convert dump-names --ckpt P');
    process.exit(2);
}

export function main(argv: string[]): number {
    const [command, ...rest] = argv;
    try {
        if (command === 'convert') {
            const { values } = parseArgs({
                args: rest,
                options: {
                    ckpt: { type: 'string' },
                    map: { type: 'string' },
                    out: { type: 'string' },
                },
            });
            if (!values.ckpt || !values.map || !values.out) {
                usage();
            }
            const result = convert(values.ckpt, values.map, values.out);
            console.log(`wrote ${result.outPath}: ${result.applied} tensors, `
                + `${result.params} parameters`);
            console.log(`manifest: ${result.manifestPath}`);
            return 0;
        }
        if (command === 'dump-names') {
            const { values } = parseArgs({
                args: rest,
                options: { ckpt: { type: 'string' } },
            });
            if (!values.ckpt) {
                usage();
            }
            for (const row of dumpNames(values.ckpt)) {
                console.log(row);
            }
            return 0;
        }
        usage();
    } catch (err) {
        console.error(`error: ${err instanceof Error ? err.message : err}`);
        return 1;
    }
}

const entry = process.argv[1] ?? '';
if (entry.endsWith('cli.js') || entry.endsWith('ckpt-convert')) {
    process.exit(main(process.argv.slice(2)));
}
