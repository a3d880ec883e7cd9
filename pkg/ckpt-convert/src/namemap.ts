/**
 * Editable text map binding checkpoint variable names to engine slots.
 *
 * One entry per line: `source -> target [layout]`, where layout is one of
 *   hwio  source kernel stored (height, width, in, out); transposed to
 *         the engine's (out, in, height, width). Default for rank-4 sources.
 *   oihw  source already in engine layout; copied as-is.
 *   none  no transposition (default for non-rank-4 sources, e.g. biases).
 * Blank lines and '#' comments are ignored.
 */

export type Layout = 'hwio' | 'oihw' | 'none';

export interface MapEntry {
    source: string;
    target: string;
    layout?: Layout;
}

const LAYOUTS: Layout[] = ['hwio', 'oihw', 'none'];

export function parseNameMap(text: string, source = '<map>'): MapEntry[] {
    const entries: MapEntry[] = [];
    text.split(/\r?\n/).forEach((raw, idx) => {
        const line = raw.replace(/#.*$/, '').trim();
        if (!line) {
            return;
        }
        const m = /^(\S+)\s*->\s*(\S+)(?:\s+(\S+))?$/.exec(line);
        if (!m) {
            throw new Error(`${source}:${idx + 1}: expected `
                + `"source -> target [layout]", got: ${raw.trim()}`);
        }
        const [, src, target, layout] = m;
        if (layout !== undefined && !LAYOUTS.includes(layout as Layout)) {
            throw new Error(`${source}:${idx + 1}: unknown layout `
                + `${layout} (expected ${LAYOUTS.join('|')})`);
        }
        entries.push({ source: src, target,
                       layout: layout as Layout | undefined });
    });
    return entries;
}

export function formatNameMap(entries: MapEntry[]): string {
    return entries.map((e) =>
        e.layout ? `${e.source} -> ${e.target} ${e.layout}`
                 : `${e.source} -> ${e.target}`).join('\n') + '\n';
}
