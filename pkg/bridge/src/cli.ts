#!/usr/bin/env node
/**
 * gridrag-bridge export --in texts.jsonl --out vecs.bin --model stub:64 --batch 64
 */

import { parseArgs } from "node:util";

import { resolveEncoder } from "./encoders.js";
import { exportEmbeddings } from "./export.js";

async function main(): Promise<number> {
  const [command, ...rest] = process.argv.slice(2);
  if (command !== "export") {
    console.error('usage: gridrag-bridge export --in <texts.jsonl> --out <vecs.bin> [--model <id>] [--batch <n>]');
    return 1;
  }
  let values;
  try {
    ({ values } = parseArgs({
      args: rest,
      options: {
        in: { type: "string" },
        out: { type: "string" },
        model: { type: "string", default: "stub" },
        batch: { type: "string", default: "64" },
      },
    }));
  } catch (error) {
    console.error(`usage error: ${(error as Error).message}`);
    return 1;
  }
  if (!values.in || !values.out) {
    console.error("usage error: --in and --out are required");
    return 1;
  }
  const batchSize = Number.parseInt(values.batch ?? "64", 10);
  if (!Number.isFinite(batchSize) || batchSize < 1) {
    console.error(`usage error: bad --batch ${values.batch}`);
    return 1;
  }
  try {
    const encoder = resolveEncoder(values.model ?? "stub");
    const { count, dim } = await exportEmbeddings({
      inputPath: values.in,
      outputPath: values.out,
      encoder,
      batchSize,
    });
    console.log(`wrote ${count} embeddings (dim ${dim}) to ${values.out}`);
    return 0;
  } catch (error) {
    console.error(`export failed: ${(error as Error).message}`);
    return 2;
  }
}

main().then((code) => {
  process.exitCode = code;
});
