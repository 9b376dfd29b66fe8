#!/usr/bin/env node
/**
 * pnpadmm-adapter --backend passthrough|quadratic|model [options]
 *
 * Serves the denoiser wire protocol on stdin/stdout. Options:
 *   --backend <name>   passthrough (default), quadratic, model
 *   --kappa <float>    quadratic prior weight (default 1.0)
 *   --mean <float>     quadratic prior mean (default 0.5)
 *   --model <path>     module with a denoise(image, map, dims) export
 */

import { loadModelHook, passthrough, quadratic, type Backend } from "./backends.js";
import { serve } from "./serve.js";

function parseArgs(argv: string[]): Map<string, string> {
  const out = new Map<string, string>();
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i]!;
    if (!arg.startsWith("--")) {
      throw new Error(`unexpected argument ${arg}`);
    }
    const value = argv[i + 1];
    if (value === undefined || value.startsWith("--")) {
      throw new Error(`${arg}: missing value`);
    }
    out.set(arg.slice(2), value);
    i++;
  }
  return out;
}

function parseNumber(args: Map<string, string>, name: string, fallback: number): number {
  const raw = args.get(name);
  if (raw === undefined) return fallback;
  const value = Number(raw);
  if (!Number.isFinite(value)) {
    throw new Error(`--${name}: expected a number, got ${raw}`);
  }
  return value;
}

async function pickBackend(args: Map<string, string>): Promise<Backend> {
  const name = args.get("backend") ?? "passthrough";
  switch (name) {
    case "passthrough":
      return passthrough;
    case "quadratic":
      return quadratic(parseNumber(args, "kappa", 1.0), parseNumber(args, "mean", 0.5));
    case "model": {
      const path = args.get("model");
      if (!path) throw new Error("--backend model needs --model <path>");
      return loadModelHook(path);
    }
    default:
      throw new Error(`unknown backend ${name}`);
  }
}

async function main(): Promise<number> {
  const backend = await pickBackend(parseArgs(process.argv.slice(2)));
  return serve(process.stdin, process.stdout, backend);
}

main().then(
  (code) => {
    process.exitCode = code;
  },
  (error) => {
    console.error(`pnpadmm-adapter: ${error instanceof Error ? error.message : error}`);
    process.exitCode = 2;
  },
);
