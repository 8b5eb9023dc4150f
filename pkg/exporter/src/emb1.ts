/**
 * EMB1 embedding-bank binary format.
 *
 * Layout (little-endian):
 *   magic 'EMB1' | section u8 (0=prompts, 1=frames) | dim u32 | count u32
 *   then per entry: nameLen u16 | name UTF-8 | dim x float32
 */

export type BankSection = "prompts" | "frames";

export interface BankEntry {
  name: string;
  vector: Float32Array;
}

const MAGIC = Buffer.from("EMB1", "ascii");
const SECTIONS: BankSection[] = ["prompts", "frames"];

export function encodeBank(section: BankSection, dim: number, entries: BankEntry[]): Buffer {
  if (!Number.isInteger(dim) || dim < 1) {
    throw new Error(`bank dim must be a positive integer, got ${dim}`);
  }
  const seen = new Set<string>();
  let size = 13;
  const names: Buffer[] = [];
  for (const entry of entries) {
    if (seen.has(entry.name)) {
      throw new Error(`duplicate bank entry name: "${entry.name}"`);
    }
    seen.add(entry.name);
    if (entry.vector.length !== dim) {
      throw new Error(
        `entry "${entry.name}" has ${entry.vector.length} values, expected ${dim}`,
      );
    }
    for (const v of entry.vector) {
      if (!Number.isFinite(v)) {
        throw new Error(`entry "${entry.name}" contains a non-finite value`);
      }
    }
    const name = Buffer.from(entry.name, "utf-8");
    if (name.length > 0xffff) {
      throw new Error(`entry name longer than 65535 bytes: "${entry.name.slice(0, 40)}..."`);
    }
    names.push(name);
    size += 2 + name.length + 4 * dim;
  }

  const out = Buffer.alloc(size);
  MAGIC.copy(out, 0);
  out.writeUInt8(SECTIONS.indexOf(section), 4);
  out.writeUInt32LE(dim, 5);
  out.writeUInt32LE(entries.length, 9);
  let pos = 13;
  entries.forEach((entry, i) => {
    out.writeUInt16LE(names[i].length, pos);
    pos += 2;
    names[i].copy(out, pos);
    pos += names[i].length;
    for (const v of entry.vector) {
      out.writeFloatLE(v, pos);
      pos += 4;
    }
  });
  return out;
}

export interface DecodedBank {
  section: BankSection;
  dim: number;
  entries: BankEntry[];
}

/** Structural reader used by the exporter's own tests. */
export function decodeBank(buf: Buffer): DecodedBank {
  if (buf.length < 13 || !buf.subarray(0, 4).equals(MAGIC)) {
    throw new Error("not an EMB1 bank: bad magic or truncated header");
  }
  const tag = buf.readUInt8(4);
  if (tag >= SECTIONS.length) {
    throw new Error(`unknown bank section tag ${tag}`);
  }
  const dim = buf.readUInt32LE(5);
  const count = buf.readUInt32LE(9);
  const entries: BankEntry[] = [];
  const seen = new Set<string>();
  let pos = 13;
  for (let i = 0; i < count; i++) {
    if (pos + 2 > buf.length) throw new Error(`truncated bank at entry ${i}`);
    const nameLen = buf.readUInt16LE(pos);
    pos += 2;
    if (pos + nameLen + 4 * dim > buf.length) throw new Error(`truncated bank at entry ${i}`);
    const name = buf.subarray(pos, pos + nameLen).toString("utf-8");
    pos += nameLen;
    if (seen.has(name)) throw new Error(`duplicate bank entry name: "${name}"`);
    seen.add(name);
    const vector = new Float32Array(dim);
    for (let k = 0; k < dim; k++) {
      vector[k] = buf.readFloatLE(pos);
      pos += 4;
    }
    entries.push({ name, vector });
  }
  return { section: SECTIONS[tag], dim, entries };
}

export function frameKey(videoId: string, frameIndex: number): string {
  return `${videoId}#${frameIndex}`;
}
