/**
 * Minimal .npy reader/writer: little-endian float32/float64, C order.
 */

const MAGIC = Buffer.from('\x93NUMPY', 'latin1');

export interface NpyArray {
    shape: number[];
    data: Float32Array;
}

export function parseNpy(buf: Buffer, name = '<npy>'): NpyArray {
    if (buf.length < 10 || !buf.subarray(0, 6).equals(MAGIC)) {
        throw new Error(`${name}: not an npy payload (bad magic)`);
    }
    const major = buf[6];
    let headerLen: number;
    let headerStart: number;
    if (major === 1) {
        headerLen = buf.readUInt16LE(8);
        headerStart = 10;
    } else if (major === 2 || major === 3) {
        headerLen = buf.readUInt32LE(8);
        headerStart = 12;
    } else {
        throw new Error(`${name}: unsupported npy version ${major}`);
    }
    const header = buf.subarray(headerStart, headerStart + headerLen)
        .toString('latin1');

    const descr = /'descr'\s*:\s*'([^']+)'/.exec(header)?.[1];
    const fortran = /'fortran_order'\s*:\s*(True|False)/.exec(header)?.[1];
    const shapeText = /'shape'\s*:\s*\(([^)]*)\)/.exec(header)?.[1];
    if (descr === undefined || fortran === undefined || shapeText === undefined) {
        throw new Error(`${name}: malformed npy header: ${header.trim()}`);
    }
    if (fortran === 'True') {
        throw new Error(`${name}: fortran-order arrays are not supported`);
    }
    const shape = shapeText.split(',').map((s) => s.trim()).filter((s) => s)
        .map((s) => {
            const v = Number(s);
            if (!Number.isInteger(v) || v < 0) {
                throw new Error(`${name}: bad shape entry ${s}`);
            }
            return v;
        });
    if (shape.length === 0) {
        throw new Error(`${name}: rank-0 arrays are not supported`);
    }

    const count = shape.reduce((a, b) => a * b, 1);
    const body = buf.subarray(headerStart + headerLen);
    if (descr === '<f4') {
        if (body.length < 4 * count) {
            throw new Error(`${name}: truncated data (need ${4 * count} bytes, `
                + `have ${body.length})`);
        }
        const data = new Float32Array(count);
        for (let i = 0; i < count; i++) {
            data[i] = body.readFloatLE(4 * i);
        }
        return { shape, data };
    }
    if (descr === '<f8') {
        if (body.length < 8 * count) {
            throw new Error(`${name}: truncated data (need ${8 * count} bytes, `
                + `have ${body.length})`);
        }
        const data = new Float32Array(count);
        for (let i = 0; i < count; i++) {
            data[i] = Math.fround(body.readDoubleLE(8 * i));
        }
        return { shape, data };
    }
    throw new Error(`${name}: unsupported dtype ${descr} (need <f4 or <f8)`);
}

export function serializeNpy(arr: NpyArray): Buffer {
    const shapeText = arr.shape.length === 1
        ? `(${arr.shape[0]},)`
        : `(${arr.shape.join(', ')})`;
    let header = `{'descr': '<f4', 'fortran_order': False, `
        + `'shape': ${shapeText}, }`;
    // pad so that magic+version+len+header is a multiple of 64, newline-terminated
    const base = MAGIC.length + 2 + 2;
    const total = Math.ceil((base + header.length + 1) / 64) * 64;
    header = header.padEnd(total - base - 1, ' ') + '\n';

    const head = Buffer.alloc(base);
    MAGIC.copy(head, 0);
    head[6] = 1;
    head[7] = 0;
    head.writeUInt16LE(header.length, 8);

    const body = Buffer.alloc(4 * arr.data.length);
    for (let i = 0; i < arr.data.length; i++) {
        body.writeFloatLE(arr.data[i], 4 * i);
    }
    return Buffer.concat([head, Buffer.from(header, 'latin1'), body]);
}
