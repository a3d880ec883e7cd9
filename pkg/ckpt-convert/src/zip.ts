/**
 * Just enough of the zip container for npz archives: reads stored and
 * deflated entries, writes stored entries (the synthetic-checkpoint path).
 */

import * as zlib from 'node:zlib';

const EOCD_SIG = 0x06054b50;
const CDIR_SIG = 0x02014b50;
const LOCAL_SIG = 0x04034b50;

export interface ZipEntry {
    name: string;
    data: Buffer;
}

export function readZip(buf: Buffer, source = '<zip>'): ZipEntry[] {
    let eocd = -1;
    const scanFrom = Math.max(0, buf.length - 22 - 65536);
    for (let i = buf.length - 22; i >= scanFrom; i--) {
        if (buf.readUInt32LE(i) === EOCD_SIG) {
            eocd = i;
            break;
        }
    }
    if (eocd < 0) {
        throw new Error(`${source}: not a zip archive (no end-of-central-directory)`);
    }
    const count = buf.readUInt16LE(eocd + 10);
    let offset = buf.readUInt32LE(eocd + 16);

    const entries: ZipEntry[] = [];
    for (let i = 0; i < count; i++) {
        if (buf.readUInt32LE(offset) !== CDIR_SIG) {
            throw new Error(`${source}: corrupt central directory at ${offset}`);
        }
        const method = buf.readUInt16LE(offset + 10);
        const compSize = buf.readUInt32LE(offset + 20);
        const nameLen = buf.readUInt16LE(offset + 28);
        const extraLen = buf.readUInt16LE(offset + 30);
        const commentLen = buf.readUInt16LE(offset + 32);
        const localOff = buf.readUInt32LE(offset + 42);
        const name = buf.subarray(offset + 46, offset + 46 + nameLen)
            .toString('utf-8');

        if (buf.readUInt32LE(localOff) !== LOCAL_SIG) {
            throw new Error(`${source}: corrupt local header for ${name}`);
        }
        const localNameLen = buf.readUInt16LE(localOff + 26);
        const localExtraLen = buf.readUInt16LE(localOff + 28);
        const dataStart = localOff + 30 + localNameLen + localExtraLen;
        const raw = buf.subarray(dataStart, dataStart + compSize);

        let data: Buffer;
        if (method === 0) {
            data = Buffer.from(raw);
        } else if (method === 8) {
            data = zlib.inflateRawSync(raw);
        } else {
            throw new Error(`${source}: entry ${name} uses unsupported `
                + `compression method ${method}`);
        }
        entries.push({ name, data });
        offset += 46 + nameLen + extraLen + commentLen;
    }
    return entries;
}

export function writeZipStored(entries: ZipEntry[]): Buffer {
    const locals: Buffer[] = [];
    const centrals: Buffer[] = [];
    let offset = 0;

    for (const entry of entries) {
        const nameBuf = Buffer.from(entry.name, 'utf-8');
        const crc = zlib.crc32(entry.data);

        const local = Buffer.alloc(30);
        local.writeUInt32LE(LOCAL_SIG, 0);
        local.writeUInt16LE(20, 4);               // version needed
        local.writeUInt16LE(0, 8);                // method: stored
        local.writeUInt32LE(crc, 14);
        local.writeUInt32LE(entry.data.length, 18);
        local.writeUInt32LE(entry.data.length, 22);
        local.writeUInt16LE(nameBuf.length, 26);
        locals.push(local, nameBuf, entry.data);

        const central = Buffer.alloc(46);
        central.writeUInt32LE(CDIR_SIG, 0);
        central.writeUInt16LE(20, 4);
        central.writeUInt16LE(20, 6);
        central.writeUInt16LE(0, 10);
        central.writeUInt32LE(crc, 16);
        central.writeUInt32LE(entry.data.length, 20);
        central.writeUInt32LE(entry.data.length, 24);
        central.writeUInt16LE(nameBuf.length, 28);
        central.writeUInt32LE(offset, 42);
        centrals.push(central, nameBuf);

        offset += 30 + nameBuf.length + entry.data.length;
    }

    const cdirSize = centrals.reduce((a, b) => a + b.length, 0);
    const eocd = Buffer.alloc(22);
    eocd.writeUInt32LE(EOCD_SIG, 0);
    eocd.writeUInt16LE(entries.length, 8);
    eocd.writeUInt16LE(entries.length, 10);
    eocd.writeUInt32LE(cdirSize, 12);
    eocd.writeUInt32LE(offset, 16);
    return Buffer.concat([...locals, ...centrals, eocd]);
}
