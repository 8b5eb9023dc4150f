#!/usr/bin/env node
/**
 * clip-exporter: encode class prompts and sampled video frames into EMB1
 * embedding banks.
 *
 *   clip-exporter export-prompts --prompts <json> --out <bank> [--model <id>]
 *   clip-exporter export-frames  --requests <json> --out <bank> [--model <id>]
 *
 * The request JSON maps video ids to a manifest path and frame indices:
 *   {"<video_id>": {"manifest": "<path>", "frames": [0, 1, ...]}}
 */

import { DEFAULT_MODEL, loadEncoder } from "./encoder.js";
import { exportFrameBank, exportPromptBank } from "./export.js";

interface Args {
  command: string;
  options: Map<string, string>;
}

function parseArgs(argv: string[]): Args {
  const [command, ...rest] = argv;
  const options = new Map<string, string>();
  for (let i = 0; i < rest.length; i += 2) {
    const flag = rest[i];
    if (!flag.startsWith("--") || i + 1 >= rest.length) {
      throw new Error(`malformed arguments near "${flag}"`);
    }
    options.set(flag.slice(2), rest[i + 1]);
  }
  return { command: command ?? "", options };
}

function required(args: Args, name: string): string {
  const value = args.options.get(name);
  if (value === undefined) {
    throw new Error(`${args.command}: missing required --${name}`);
  }
  return value;
}

const USAGE = `usage:
  clip-exporter export-prompts --prompts <json> --out <bank> [--model <id>]
  clip-exporter export-frames  --requests <json> --out <bank> [--model <id>]

default model: ${DEFAULT_MODEL} (needs the optional @xenova/transformers
package and network access for weights); use --model test:<dim> for the
deterministic offline encoder.`;

export async function main(argv: string[]): Promise<number> {
  let args: Args;
  try {
    args = parseArgs(argv);
  } catch (err) {
    console.error((err as Error).message);
    console.error(USAGE);
    return 2;
  }
  try {
    switch (args.command) {
      case "export-prompts": {
        const encoder = await loadEncoder(args.options.get("model") ?? DEFAULT_MODEL);
        const summary = await exportPromptBank(
          required(args, "prompts"),
          required(args, "out"),
          encoder,
        );
        console.log(
          `wrote ${summary.count} prompt vectors (dim ${summary.dim}) to ${summary.outPath}`,
        );
        return 0;
      }
      case "export-frames": {
        const encoder = await loadEncoder(args.options.get("model") ?? DEFAULT_MODEL);
        const summary = await exportFrameBank(
          required(args, "requests"),
          required(args, "out"),
          encoder,
        );
        console.log(
          `wrote ${summary.count} frame vectors (dim ${summary.dim}) to ${summary.outPath}`,
        );
        return 0;
      }
      case "":
      case "help":
      case "--help":
        console.log(USAGE);
        return args.command === "" ? 2 : 0;
      default:
        console.error(`unknown command "${args.command}"`);
        console.error(USAGE);
        return 2;
    }
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    return 1;
  }
}

const isDirectRun =
  process.argv[1] !== undefined && import.meta.url.endsWith(process.argv[1].split("/").pop()!);
if (isDirectRun) {
  main(process.argv.slice(2)).then((code) => {
    process.exitCode = code;
  });
}
