import { createHash } from "node:crypto";

import type { PairRecord } from "./types";

function int64(values: number[] | bigint[]): Buffer {
  const buf = Buffer.alloc(values.length * 8);
  values.forEach((v, i) => buf.writeBigInt64LE(BigInt(v), i * 8));
  return buf;
}

function uint64(value: bigint): Buffer {
  const buf = Buffer.alloc(8);
  buf.writeBigUInt64LE(value);
  return buf;
}

function float64(values: number[]): Buffer {
  const buf = Buffer.alloc(values.length * 8);
  values.forEach((v, i) => buf.writeDoubleLE(v, i * 8));
  return buf;
}

/**
 * Recompute the native canonical pair digest (`pseudo-pair-v1`) from decoded
 * content.  Field order and widths must match the native definition exactly:
 * tag; width, height, n, m int64; seed uint64; a, b, c, d float64; images and
 * masks C-order; each polygon list as int64 count + int64 x,y rows; fg mean,
 * then count + rows for bg means, support then query.  Little-endian.
 */
export function pairContentDigest(
  record: PairRecord,
  width: number,
  height: number,
  supportImage: Uint8Array,
  queryImage: Uint8Array,
  supportMask: Uint8Array,
  queryMask: Uint8Array,
): string {
  const h = createHash("sha256");
  h.update(Buffer.from("pseudo-pair-v1"));
  h.update(int64([width, height, record.step.n, record.step.m]));
  h.update(uint64(BigInt(record.seed)));
  h.update(float64([record.step.a, record.step.b, record.step.c, record.step.d]));
  h.update(Buffer.from(supportImage));
  h.update(Buffer.from(queryImage));
  h.update(Buffer.from(supportMask));
  h.update(Buffer.from(queryMask));
  for (const polygons of [record.support_polygons, record.query_polygons]) {
    h.update(int64([polygons.length]));
    for (const polygon of polygons) {
      h.update(int64(polygon.flat()));
    }
  }
  h.update(float64(record.support_fg_mean));
  h.update(int64([record.support_bg_means.length]));
  for (const mean of record.support_bg_means) h.update(float64(mean));
  h.update(float64(record.query_fg_mean));
  h.update(int64([record.query_bg_means.length]));
  for (const mean of record.query_bg_means) h.update(float64(mean));
  return h.digest("hex");
}
