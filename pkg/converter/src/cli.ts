/**
 * Command line front end.
 *
 *   convert --in <file> --var <name> --kind {cube|labels} --out <file>
 *           [--expect MxNxD]
 *
 * --var may be omitted when the file holds exactly one numeric array.
 * --expect states the dimensions MATLAB would report (rows x cols for
 * labels, rows x cols x bands for cubes); a mismatch aborts before
 * anything is written. Exit code 0 on success, 2 for bad usage, 3 when
 * the input cannot be parsed or converted.
 */

import { ConversionError, Job, runJob } from "./convert";
import { MatFormatError } from "./mat";

const USAGE =
  "usage: convert --in <file.mat> [--var <name>] --kind {cube|labels} " +
  "--out <file> [--expect MxNxD]";

class UsageError extends Error {}

function parseExpect(text: string, kind: "cube" | "labels"): number[] {
  const parts = text.toLowerCase().split("x").map((p) => Number(p));
  const want = kind === "cube" ? 3 : 2;
  if (parts.length !== want || parts.some((p) => !Number.isInteger(p) || p <= 0)) {
    throw new UsageError(
      `--expect for ${kind} needs ${want} positive integers joined by "x", ` +
      `got "${text}"`);
  }
  return parts;
}

function parseArgs(argv: string[]): Job {
  if (argv[0] !== "convert") {
    throw new UsageError(
      argv.length === 0 ? "no command given" : `unknown command "${argv[0]}"`);
  }
  const flags = new Map<string, string>();
  for (let i = 1; i < argv.length; i += 2) {
    const flag = argv[i];
    if (!flag.startsWith("--")) {
      throw new UsageError(`unexpected argument "${flag}"`);
    }
    if (i + 1 >= argv.length) {
      throw new UsageError(`${flag} needs a value`);
    }
    if (flags.has(flag)) {
      throw new UsageError(`${flag} given twice`);
    }
    flags.set(flag, argv[i + 1]);
  }
  const known = ["--in", "--var", "--kind", "--out", "--expect"];
  for (const flag of flags.keys()) {
    if (!known.includes(flag)) {
      throw new UsageError(`unknown flag "${flag}"`);
    }
  }
  const input = flags.get("--in");
  const output = flags.get("--out");
  const kind = flags.get("--kind");
  if (!input || !output || !kind) {
    throw new UsageError("--in, --kind and --out are required");
  }
  if (kind !== "cube" && kind !== "labels") {
    throw new UsageError(`--kind must be "cube" or "labels", got "${kind}"`);
  }
  const job: Job = { input, output, kind };
  const variable = flags.get("--var");
  if (variable !== undefined) {
    job.variable = variable;
  }
  const expect = flags.get("--expect");
  if (expect !== undefined) {
    job.expect = parseExpect(expect, kind);
  }
  return job;
}

/** Entry point; argv excludes the node binary and script path. */
export function main(argv: string[]): number {
  let job: Job;
  try {
    job = parseArgs(argv);
  } catch (err) {
    if (err instanceof UsageError) {
      console.error(`error: ${err.message}`);
      console.error(USAGE);
      return 2;
    }
    throw err;
  }
  try {
    const summary = runJob(job);
    for (const line of summary.lines) {
      console.log(line);
    }
    return 0;
  } catch (err) {
    if (err instanceof ConversionError || err instanceof MatFormatError) {
      console.error(`error: ${err.message}`);
      return 3;
    }
    throw err;
  }
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)));
}
