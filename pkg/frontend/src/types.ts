/** Curriculum parameters in effect at one pretraining step. */
export interface StepParams {
  n: number;
  a: number;
  b: number;
  c: number;
  d: number;
  m: number;
}

/** Optional schedule overrides; defaults mirror the native config defaults. */
export interface ScheduleConfig {
  a0?: number;
  b0?: number;
  cFinal?: number;
  dFinal?: number;
  totalSteps?: number;
}

export interface GeneratePairOptions {
  size?: number;
  sigma?: number;
  minArea?: number;
  schedule?: ScheduleConfig;
  /** keep the generated dataset directory instead of deleting it */
  keepDir?: boolean;
}

export type Polygon = Array<[number, number]>;

/** Dense decoded episode content plus the digests proving native parity. */
export interface BoundPair {
  width: number;
  height: number;
  /** row-major RGB, length width*height*3 */
  supportImage: Uint8Array;
  queryImage: Uint8Array;
  /** row-major 0/1, length width*height */
  supportMask: Uint8Array;
  queryMask: Uint8Array;
  supportPolygons: Polygon[];
  queryPolygons: Polygon[];
  supportFgMean: number[];
  supportBgMeans: number[][];
  queryFgMean: number[];
  queryBgMeans: number[][];
  step: StepParams;
  /** derived per-pair seed (uint64, decimal string as stored in the manifest) */
  seed: string;
  hintedIndices: number[];
  /** canonical digest recorded by the native generator */
  contentDigest: string;
  /** the same digest recomputed here from the decoded files */
  recomputedDigest: string;
  /** dataset directory (only populated when keepDir was set) */
  datasetDir?: string;
}

export interface ParsedPolygons {
  objects: Polygon[];
  spans: Array<[number, number]>;
}

export interface EpisodeRecord {
  object_ious: number[];
  episode_iou: number;
  num_predictions: number;
  num_gts: number;
}

export interface ScoreReport {
  folds: Record<string, { mean_iou: number; episodes: number }>;
  overall_mean_iou: number;
  episodes: number;
  per_episode: Record<string, EpisodeRecord>;
}

export interface PairRecord {
  index: number;
  n: number;
  seed: string;
  step: StepParams;
  support_fg_mean: number[];
  support_bg_means: number[][];
  query_fg_mean: number[];
  query_bg_means: number[][];
  support_polygons: number[][][];
  query_polygons: number[][][];
  hinted_indices: number[];
  files: Record<string, string>;
  file_digests: Record<string, string>;
  content_digest: string;
}

export interface DatasetManifest {
  version: string;
  size: number;
  master_seed: number;
  count: number;
  sigma: number;
  min_area: number;
  step_policy: string;
  fixed_n: number;
  schedule: Record<string, number>;
  pairs: PairRecord[];
}
