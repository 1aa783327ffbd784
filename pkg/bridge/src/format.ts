/**
 * TOPOEMB1 binary embedding file format.
 *
 * Layout (all integers little-endian):
 *   magic   8 bytes  "TOPOEMB1"
 *   dim     u32
 *   count   u64
 *   then per record: u16 id byte-length, id UTF-8 bytes, dim x float32
 *
 * The engine re-checks unit norms on load, but this writer normalizes every
 * vector before serialization so files are valid on their own.
 */

export const MAGIC = Buffer.from("TOPOEMB1", "ascii");

export interface EmbeddingRecord {
  id: string;
  vector: Float32Array;
}

export function normalize(values: number[] | Float32Array, dim: number): Float32Array {
  let sumSquares = 0;
  for (let i = 0; i < dim; i++) sumSquares += values[i] * values[i];
  const out = new Float32Array(dim);
  if (sumSquares < 1e-24) {
    out[0] = 1.0; // degenerate input maps to the fixed basis vector
    return out;
  }
  const inv = 1.0 / Math.sqrt(sumSquares);
  for (let i = 0; i < dim; i++) out[i] = Math.fround(values[i] * inv);
  return out;
}

export function encodeFile(dim: number, records: EmbeddingRecord[]): Buffer {
  const header = Buffer.alloc(MAGIC.length + 4 + 8);
  MAGIC.copy(header, 0);
  header.writeUInt32LE(dim, MAGIC.length);
  header.writeBigUInt64LE(BigInt(records.length), MAGIC.length + 4);

  const parts: Buffer[] = [header];
  const seen = new Set<string>();
  for (const record of records) {
    if (seen.has(record.id)) {
      throw new Error(`duplicate embedding id ${JSON.stringify(record.id)}`);
    }
    seen.add(record.id);
    const idBytes = Buffer.from(record.id, "utf-8");
    if (idBytes.length > 0xffff) {
      throw new Error(`embedding id longer than 65535 bytes: ${record.id.slice(0, 40)}...`);
    }
    if (record.vector.length !== dim) {
      throw new Error(
        `record ${JSON.stringify(record.id)}: vector length ${record.vector.length} != dim ${dim}`,
      );
    }
    const head = Buffer.alloc(2);
    head.writeUInt16LE(idBytes.length, 0);
    const body = Buffer.alloc(dim * 4);
    for (let i = 0; i < dim; i++) body.writeFloatLE(record.vector[i], i * 4);
    parts.push(head, idBytes, body);
  }
  return Buffer.concat(parts);
}

/** Reader used by the bridge's own tests; the engine has its own loader. */
export function decodeFile(data: Buffer): { dim: number; records: EmbeddingRecord[] } {
  if (data.length < MAGIC.length + 12 || !data.subarray(0, MAGIC.length).equals(MAGIC)) {
    throw new Error("not a TOPOEMB1 file");
  }
  const dim = data.readUInt32LE(MAGIC.length);
  const count = Number(data.readBigUInt64LE(MAGIC.length + 4));
  let offset = MAGIC.length + 12;
  const records: EmbeddingRecord[] = [];
  for (let r = 0; r < count; r++) {
    const idLength = data.readUInt16LE(offset);
    offset += 2;
    const id = data.subarray(offset, offset + idLength).toString("utf-8");
    offset += idLength;
    const vector = new Float32Array(dim);
    for (let i = 0; i < dim; i++) vector[i] = data.readFloatLE(offset + i * 4);
    offset += dim * 4;
    records.push({ id, vector });
  }
  if (offset !== data.length) {
    throw new Error(`${data.length - offset} trailing bytes after last record`);
  }
  return { dim, records };
}
