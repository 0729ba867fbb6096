import { spawnSync } from "node:child_process";

/** Exit-code mirror of the native CLI: 1 usage, 2 data/validation, 3 generation. */
export class CliError extends Error {
  constructor(message: string, readonly exitCode: number, readonly stderr: string) {
    super(message);
  }
}
export class UsageError extends CliError {}
export class DataError extends CliError {}
export class GenerationError extends CliError {}

const PYTHON = process.env.FEWSEG_PYTHON ?? "python3";

export interface RunResult {
  stdout: string;
  stderr: string;
}

/** Run one native CLI subcommand; throw the mirrored error class on failure. */
export function runCli(args: string[], stdin?: string): RunResult {
  const proc = spawnSync(PYTHON, ["-m", "fewseg", ...args], {
    input: stdin,
    encoding: "utf-8",
    maxBuffer: 256 * 1024 * 1024,
  });
  if (proc.error) {
    throw proc.error;
  }
  const code = proc.status ?? -1;
  if (code !== 0) {
    const message = `fewseg ${args[0]} exited ${code}: ${proc.stderr.trim()}`;
    if (code === 1) throw new UsageError(message, code, proc.stderr);
    if (code === 2) throw new DataError(message, code, proc.stderr);
    if (code === 3) throw new GenerationError(message, code, proc.stderr);
    throw new CliError(message, code, proc.stderr);
  }
  return { stdout: proc.stdout, stderr: proc.stderr };
}
