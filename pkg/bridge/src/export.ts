/**
 * Export pipeline: JSONL {id, text} in, TOPOEMB1 out.
 *
 * Invariants: input ids are unique (checked before anything is written),
 * the output dimension is constant across the run, record order equals
 * input order regardless of encode batching, and every vector is unit
 * length before serialization.
 */

import { readFile, writeFile } from "node:fs/promises";

import { Encoder } from "./encoders.js";
import { EmbeddingRecord, encodeFile } from "./format.js";

export interface ExportRequest {
  inputPath: string;
  outputPath: string;
  encoder: Encoder;
  batchSize: number;
}

export interface InputLine {
  id: string;
  text: string;
}

export function parseInputJsonl(raw: string): InputLine[] {
  const lines: InputLine[] = [];
  const seen = new Set<string>();
  raw.split("\n").forEach((line, index) => {
    const trimmed = line.trim();
    if (!trimmed) return;
    let obj: unknown;
    try {
      obj = JSON.parse(trimmed);
    } catch (error) {
      throw new Error(`line ${index + 1}: malformed JSON (${(error as Error).message})`);
    }
    const record = obj as Partial<InputLine>;
    if (typeof record.id !== "string" || record.id.length === 0) {
      throw new Error(`line ${index + 1}: needs a non-empty string "id"`);
    }
    if (typeof record.text !== "string") {
      throw new Error(`line ${index + 1}: needs a string "text"`);
    }
    if (seen.has(record.id)) {
      throw new Error(`line ${index + 1}: duplicate id ${JSON.stringify(record.id)}`);
    }
    seen.add(record.id);
    lines.push({ id: record.id, text: record.text });
  });
  return lines;
}

export async function exportEmbeddings(request: ExportRequest): Promise<{ count: number; dim: number }> {
  const raw = await readFile(request.inputPath, "utf-8");
  const inputs = parseInputJsonl(raw); // duplicate ids fail here, before any write

  const records: EmbeddingRecord[] = [];
  let dim = request.encoder.dim;
  for (let start = 0; start < inputs.length; start += request.batchSize) {
    const batch = inputs.slice(start, start + request.batchSize);
    const vectors = await request.encoder.encodeBatch(batch.map((item) => item.text));
    if (vectors.length !== batch.length) {
      throw new Error(`encoder returned ${vectors.length} vectors for a batch of ${batch.length}`);
    }
    for (let i = 0; i < batch.length; i++) {
      if (dim === 0) dim = vectors[i].length;
      if (vectors[i].length !== dim) {
        throw new Error(
          `dimension drift at ${JSON.stringify(batch[i].id)}: got ${vectors[i].length}, expected ${dim}`,
        );
      }
      records.push({ id: batch[i].id, vector: vectors[i] });
    }
  }
  if (dim === 0) dim = 1; // empty export still needs a valid header
  await writeFile(request.outputPath, encodeFile(dim, records));
  return { count: records.length, dim };
}
