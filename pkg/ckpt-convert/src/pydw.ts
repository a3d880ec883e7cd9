/**
 * PYDW container serialization (the pyrdepth engine's weight format).
 *
 * Layout, little-endian, no padding:
 *   "PYDW" | u32 version = 1 | u32 entry count
 *   per entry: u32 name length | name utf-8 | u32 rank | u32 dims...
 *              | u8 dtype tag (0 = float32) | float32 data
 */

const MAGIC = Buffer.from('PYDW', 'latin1');
const VERSION = 1;
const DTYPE_F32 = 0;

export interface PydwEntry {
    name: string;
    shape: number[];
    data: Float32Array;
}

export function writePydw(entries: PydwEntry[]): Buffer {
    const parts: Buffer[] = [];
    const head = Buffer.alloc(12);
    MAGIC.copy(head, 0);
    head.writeUInt32LE(VERSION, 4);
    head.writeUInt32LE(entries.length, 8);
    parts.push(head);

    for (const entry of entries) {
        const count = entry.shape.reduce((a, b) => a * b, 1);
        if (count !== entry.data.length) {
            throw new Error(`${entry.name}: data length ${entry.data.length} `
                + `does not match shape [${entry.shape}]`);
        }
        const nameBuf = Buffer.from(entry.name, 'utf-8');
        const meta = Buffer.alloc(4 + nameBuf.length + 4 + 4 * entry.shape.length + 1);
        let off = 0;
        meta.writeUInt32LE(nameBuf.length, off); off += 4;
        nameBuf.copy(meta, off); off += nameBuf.length;
        meta.writeUInt32LE(entry.shape.length, off); off += 4;
        for (const d of entry.shape) {
            meta.writeUInt32LE(d, off); off += 4;
        }
        meta.writeUInt8(DTYPE_F32, off);
        const body = Buffer.alloc(4 * count);
        for (let i = 0; i < count; i++) {
            body.writeFloatLE(entry.data[i], 4 * i);
        }
        parts.push(meta, body);
    }
    return Buffer.concat(parts);
}

export function parsePydw(buf: Buffer, source = '<pydw>'): PydwEntry[] {
    if (buf.length < 12 || !buf.subarray(0, 4).equals(MAGIC)) {
        throw new Error(`${source}: bad magic`);
    }
    if (buf.readUInt32LE(4) !== VERSION) {
        throw new Error(`${source}: unsupported version ${buf.readUInt32LE(4)}`);
    }
    const count = buf.readUInt32LE(8);
    const entries: PydwEntry[] = [];
    const seen = new Set<string>();
    let off = 12;
    const need = (n: number, what: string) => {
        if (off + n > buf.length) {
            throw new Error(`${source}: truncated while reading ${what}`);
        }
    };
    for (let i = 0; i < count; i++) {
        need(4, `name length of entry ${i}`);
        const nameLen = buf.readUInt32LE(off); off += 4;
        need(nameLen, `name of entry ${i}`);
        const name = buf.subarray(off, off + nameLen).toString('utf-8');
        off += nameLen;
        need(4, `rank of ${name}`);
        const rank = buf.readUInt32LE(off); off += 4;
        need(4 * rank + 1, `dims of ${name}`);
        const shape: number[] = [];
        for (let d = 0; d < rank; d++) {
            shape.push(buf.readUInt32LE(off)); off += 4;
        }
        const tag = buf.readUInt8(off); off += 1;
        if (tag !== DTYPE_F32) {
            throw new Error(`${source}: ${name} has unknown dtype tag ${tag}`);
        }
        const n = shape.reduce((a, b) => a * b, 1);
        need(4 * n, `data of ${name}`);
        const data = new Float32Array(n);
        for (let k = 0; k < n; k++) {
            data[k] = buf.readFloatLE(off + 4 * k);
        }
        off += 4 * n;
        if (seen.has(name)) {
            throw new Error(`${source}: duplicate tensor name ${name}`);
        }
        seen.add(name);
        entries.push({ name, shape, data });
    }
    if (off !== buf.length) {
        throw new Error(`${source}: ${buf.length - off} trailing bytes`);
    }
    return entries;
}
