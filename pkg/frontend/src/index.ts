/**
 * Thin bindings over the native `fewseg` toolkit for external ML pipelines.
 *
 * Every function shells out to the native CLI and exchanges data only through
 * its documented file formats; no generation, geometry, parsing, or scoring
 * logic is reimplemented here.  Pair content is verified against the native
 * canonical digest on every load.
 */

import { mkdtempSync, mkdirSync, readFileSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { pairContentDigest } from "./digest";
import { readPngMask, readPngRgb } from "./png";
import { DataError, runCli } from "./runner";
import type {
  BoundPair,
  DatasetManifest,
  GeneratePairOptions,
  ParsedPolygons,
  Polygon,
  ScheduleConfig,
  ScoreReport,
  StepParams,
} from "./types";

export { CliError, DataError, GenerationError, UsageError } from "./runner";
export type * from "./types";
export { pairContentDigest } from "./digest";

function scheduleLines(schedule?: ScheduleConfig): string[] {
  if (!schedule) return [];
  const lines: string[] = [];
  if (schedule.a0 !== undefined) lines.push(`a0 = ${schedule.a0}`);
  if (schedule.b0 !== undefined) lines.push(`b0 = ${schedule.b0}`);
  if (schedule.cFinal !== undefined) lines.push(`c_final = ${schedule.cFinal}`);
  if (schedule.dFinal !== undefined) lines.push(`d_final = ${schedule.dFinal}`);
  if (schedule.totalSteps !== undefined) lines.push(`total_steps = ${schedule.totalSteps}`);
  return lines;
}

function withTempDir<T>(fn: (dir: string) => T, keep = false): T {
  const dir = mkdtempSync(join(tmpdir(), "fewseg-"));
  try {
    return fn(dir);
  } finally {
    if (!keep) rmSync(dir, { recursive: true, force: true });
  }
}

export function readManifest(datasetDir: string): DatasetManifest {
  return JSON.parse(
    readFileSync(join(datasetDir, "manifest.json"), "utf-8"),
  ) as DatasetManifest;
}

/** Load one pair of an existing dataset, verifying its content digest. */
export function loadPair(datasetDir: string, index: number): BoundPair {
  const manifest = readManifest(datasetDir);
  const record = manifest.pairs[index];
  if (!record) {
    throw new DataError(`pair index ${index} not in manifest`, 2, "");
  }
  const supportImage = readPngRgb(join(datasetDir, record.files.support_image));
  const queryImage = readPngRgb(join(datasetDir, record.files.query_image));
  const supportMask = readPngMask(join(datasetDir, record.files.support_mask));
  const queryMask = readPngMask(join(datasetDir, record.files.query_mask));
  const recomputed = pairContentDigest(
    record, manifest.size, manifest.size,
    supportImage.rgb, queryImage.rgb, supportMask.bits, queryMask.bits,
  );
  if (recomputed !== record.content_digest) {
    throw new DataError(
      `content digest mismatch for pair ${index}: native ${record.content_digest}, ` +
      `recomputed ${recomputed}`, 2, "");
  }
  const toPolygons = (raw: number[][][]): Polygon[] =>
    raw.map((poly) => poly.map(([x, y]) => [x, y] as [number, number]));
  return {
    width: manifest.size,
    height: manifest.size,
    supportImage: supportImage.rgb,
    queryImage: queryImage.rgb,
    supportMask: supportMask.bits,
    queryMask: queryMask.bits,
    supportPolygons: toPolygons(record.support_polygons),
    queryPolygons: toPolygons(record.query_polygons),
    supportFgMean: record.support_fg_mean,
    supportBgMeans: record.support_bg_means,
    queryFgMean: record.query_fg_mean,
    queryBgMeans: record.query_bg_means,
    step: record.step,
    seed: record.seed,
    hintedIndices: record.hinted_indices,
    contentDigest: record.content_digest,
    recomputedDigest: recomputed,
    datasetDir,
  };
}

/**
 * Generate one pseudo support-query pair at curriculum step n.
 *
 * `seed` is the dataset master seed; the native generator derives the pair
 * seed from (seed, 0) exactly as `fewseg gen` does for pair index 0.
 */
export function generatePair(
  seed: number, n: number, options: GeneratePairOptions = {},
): BoundPair {
  const size = options.size ?? 384;
  return withTempDir((dir) => {
    const lines = [
      `seed = ${seed}`,
      "count = 1",
      `size = ${size}`,
      "step_policy = fixed",
      `fixed_n = ${n}`,
      ...(options.sigma !== undefined ? [`sigma = ${options.sigma}`] : []),
      ...(options.minArea !== undefined ? [`min_area = ${options.minArea}`] : []),
      ...scheduleLines(options.schedule),
    ];
    const configPath = join(dir, "gen.cfg");
    writeFileSync(configPath, lines.join("\n") + "\n");
    const outDir = join(dir, "data");
    runCli(["gen", "--config", configPath, "--out", outDir, "--jobs", "1"]);
    const pair = loadPair(outDir, 0);
    if (!options.keepDir) delete pair.datasetDir;
    return pair;
  }, options.keepDir ?? false);
}

/** Curriculum parameters at step n, straight from the native schedule. */
export function stepParams(n: number, schedule?: ScheduleConfig): StepParams {
  return withTempDir((dir) => {
    const args = ["schedule", "--n", String(n), "--format", "json"];
    const lines = scheduleLines(schedule);
    if (lines.length > 0) {
      const configPath = join(dir, "schedule.cfg");
      writeFileSync(configPath, lines.join("\n") + "\n");
      args.push("--config", configPath);
    }
    return JSON.parse(runCli(args).stdout) as StepParams;
  });
}

/** Polar 16-point polygons of a mask PNG (0 = background, nonzero = object). */
export function extractPolygonGt(maskPng: string | Uint8Array, minArea = 16): Polygon[] {
  return withTempDir((dir) => {
    let path: string;
    if (typeof maskPng === "string") {
      path = maskPng;
    } else {
      path = join(dir, "mask.png");
      writeFileSync(path, maskPng);
    }
    const out = runCli(["extract", "--mask", path, "--min-area", String(minArea)]);
    return (JSON.parse(out.stdout) as { polygons: Polygon[] }).polygons;
  });
}

/** Parse model polygon-tuple output; throws DataError with the byte offset. */
export function parsePolygonOutput(text: string): ParsedPolygons {
  const out = runCli(["parse", "--in", "-"], text);
  return JSON.parse(out.stdout) as ParsedPolygons;
}

/** Score prediction files (pred_XXXXX.txt) against a generated dataset. */
export function score(
  datasetDir: string, predDir: string, folds?: Record<number, string>,
): ScoreReport {
  return withTempDir((dir) => {
    const reportPath = join(dir, "report.json");
    const args = ["score", "--dataset", datasetDir, "--pred", predDir,
                  "--out", reportPath];
    if (folds) {
      const foldsPath = join(dir, "folds.json");
      writeFileSync(foldsPath, JSON.stringify(folds));
      args.push("--folds", foldsPath);
    }
    runCli(args);
    return JSON.parse(readFileSync(reportPath, "utf-8")) as ScoreReport;
  });
}

/** Score one episode: a single prediction text against one dataset pair. */
export function scoreEpisode(
  datasetDir: string, index: number, predictionText: string,
): ScoreReport["per_episode"][string] {
  return withTempDir((dir) => {
    const predDir = join(dir, "preds");
    mkdirSync(predDir);
    writeFileSync(
      join(predDir, `pred_${String(index).padStart(5, "0")}.txt`), predictionText);
    const report = score(datasetDir, predDir);
    return report.per_episode[String(index)];
  });
}
