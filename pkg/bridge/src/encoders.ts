/**
 * Encoder registry. Model ids:
 *   stub[:dim]        deterministic local encoder, no network (default dim 64)
 *   openai:<model>    OpenAI embeddings API, needs OPENAI_API_KEY
 */

import { normalize } from "./format.js";

export interface Encoder {
  readonly dim: number;
  encodeBatch(texts: string[]): Promise<Float32Array[]>;
}

function fnv1a(text: string): number {
  let hash = 0x811c9dc5;
  for (let i = 0; i < text.length; i++) {
    hash ^= text.charCodeAt(i);
    hash = Math.imul(hash, 0x01000193) >>> 0;
  }
  return hash >>> 0;
}

/** Seeded, dependency-free encoder for tests and offline runs. */
export class StubEncoder implements Encoder {
  constructor(readonly dim: number = 64) {
    if (dim < 8) throw new Error(`stub dim must be >= 8, got ${dim}`);
  }

  async encodeBatch(texts: string[]): Promise<Float32Array[]> {
    return texts.map((text) => {
      let state = fnv1a(text) || 0x9e3779b9;
      const values = new Array<number>(this.dim);
      for (let i = 0; i < this.dim; i++) {
        // xorshift32 keeps the stream deterministic per input text
        state ^= state << 13;
        state >>>= 0;
        state ^= state >> 17;
        state ^= state << 5;
        state >>>= 0;
        values[i] = state / 0x7fffffff - 1.0;
      }
      return normalize(values, this.dim);
    });
  }
}

class OpenAIEncoder implements Encoder {
  dim = 0; // learned from the first response; drift checked by the exporter

  constructor(
    private readonly model: string,
    private readonly apiKey: string,
    private readonly baseUrl = "https://api.openai.com/v1",
  ) {}

  async encodeBatch(texts: string[]): Promise<Float32Array[]> {
    const response = await fetch(`${this.baseUrl}/embeddings`, {
      method: "POST",
      headers: {
        "content-type": "application/json",
        authorization: `Bearer ${this.apiKey}`,
      },
      body: JSON.stringify({ model: this.model, input: texts }),
    });
    if (!response.ok) {
      throw new Error(`embeddings API failed: ${response.status} ${await response.text()}`);
    }
    const payload = (await response.json()) as { data: { index: number; embedding: number[] }[] };
    const sorted = [...payload.data].sort((a, b) => a.index - b.index);
    return sorted.map((item) => {
      if (this.dim === 0) this.dim = item.embedding.length;
      return normalize(item.embedding, item.embedding.length);
    });
  }
}

export function resolveEncoder(modelId: string): Encoder {
  if (modelId === "stub" || modelId.startsWith("stub:")) {
    const dim = modelId === "stub" ? 64 : Number.parseInt(modelId.slice(5), 10);
    if (!Number.isFinite(dim)) throw new Error(`bad stub dim in model id ${JSON.stringify(modelId)}`);
    return new StubEncoder(dim);
  }
  if (modelId.startsWith("openai:")) {
    const key = process.env.OPENAI_API_KEY;
    if (!key) throw new Error("openai:* models need OPENAI_API_KEY");
    return new OpenAIEncoder(modelId.slice(7), key);
  }
  throw new Error(`unknown model id ${JSON.stringify(modelId)}; try "stub[:dim]" or "openai:<model>"`);
}
