"""On-disk dataset format: generation config, pair files, and the manifest.

A dataset directory holds one subdirectory per pair (lossless PNG images and
masks, the rendered pretraining instruction, and a meta.json record) plus a
manifest.json written last.  Everything is reproducible from the config alone;
the manifest stores per-file SHA-256 digests and a canonical content digest per
pair so reruns and external consumers can verify byte-level parity.
"""

from __future__ import annotations

import hashlib
import io
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .curriculum import ScheduleConfig, StepParams, sample_hint_indices, step_params
from .errors import ConfigError, FewsegError, ManifestError, ParameterError
from .geometry import Mask, Polygon16
from .instruction import render_pretrain_instruction
from .synthesis import (
    STREAM_HINTS,
    derive_pair_seed,
    derive_rng,
    generate_pair,
    pair_digest,
)

MANIFEST_VERSION = "fewseg-dataset-v1"
MAX_IMAGE_SIDE = 384  # bound by the coordinate-token vocabulary
MIN_IMAGE_SIDE = 64
PNG_COMPRESS_LEVEL = 1

_CONFIG_DEFAULTS: dict[str, object] = {
    "seed": 0,
    "count": 1,
    "size": 384,
    "a0": 100.0,
    "b0": 150.0,
    "c_final": 50.0,
    "d_final": 100.0,
    "total_steps": 60_000,
    "sigma": 20.0,
    "min_area": 16,
    "step_policy": "sequential",
    "fixed_n": 0,
}


@dataclass(frozen=True)
class GenConfig:
    """Parsed generation config; every knob has a documented default."""

    seed: int = 0
    count: int = 1
    size: int = 384
    schedule: ScheduleConfig = ScheduleConfig()
    sigma: float = 20.0
    min_area: int = 16
    step_policy: str = "sequential"  # or "fixed"
    fixed_n: int = 0

    def __post_init__(self):
        if not (0 <= self.seed < 2**53):
            raise ConfigError("seed must be a non-negative JSON-safe integer (< 2^53)")
        if self.count < 0:
            raise ConfigError("count must be non-negative")
        if not (MIN_IMAGE_SIDE <= self.size <= MAX_IMAGE_SIDE):
            raise ConfigError(
                f"size must lie in [{MIN_IMAGE_SIDE}, {MAX_IMAGE_SIDE}] "
                f"(the token vocabulary encodes coordinates up to {MAX_IMAGE_SIDE - 1})")
        if self.sigma <= 0:
            raise ConfigError("sigma must be positive")
        if self.min_area < 1:
            raise ConfigError("min_area must be at least 1")
        if self.step_policy not in ("sequential", "fixed"):
            raise ConfigError(f"unknown step_policy {self.step_policy!r}")
        if not (0 <= self.fixed_n < self.schedule.total_steps):
            raise ConfigError("fixed_n must lie in [0, total_steps)")

    def step_index(self, pair_index: int) -> int:
        if self.step_policy == "fixed":
            return self.fixed_n
        return pair_index % self.schedule.total_steps


def parse_config(text: str) -> GenConfig:
    """Parse a flat ``key = value`` config; '#' starts a comment."""
    values = dict(_CONFIG_DEFAULTS)
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in values:
            raise ConfigError(f"line {lineno}: unknown config key {key!r}")
        try:
            if key == "step_policy":
                values[key] = value
            elif key in ("sigma", "a0", "b0", "c_final", "d_final"):
                values[key] = float(value)
            else:
                values[key] = int(value)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {value!r}") from exc
    try:
        schedule = ScheduleConfig(
            a0=values["a0"], b0=values["b0"],
            c_final=values["c_final"], d_final=values["d_final"],
            total_steps=values["total_steps"])
    except ParameterError as exc:
        raise ConfigError(str(exc)) from exc
    return GenConfig(
        seed=values["seed"], count=values["count"], size=values["size"],
        schedule=schedule, sigma=values["sigma"], min_area=values["min_area"],
        step_policy=values["step_policy"], fixed_n=values["fixed_n"])


def load_config(path: str | Path) -> GenConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))


def encode_png_rgb(image: np.ndarray) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(image, mode="RGB").save(buf, format="PNG",
                                            compress_level=PNG_COMPRESS_LEVEL)
    return buf.getvalue()


def encode_png_mask(mask: Mask) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(mask.pixels * np.uint8(255), mode="L").save(
        buf, format="PNG", compress_level=PNG_COMPRESS_LEVEL)
    return buf.getvalue()


def load_image(path: str | Path) -> np.ndarray:
    with Image.open(path) as img:
        return np.asarray(img.convert("RGB"))


def load_mask(path: str | Path) -> Mask:
    with Image.open(path) as img:
        return Mask((np.asarray(img.convert("L")) > 0).astype(np.uint8))


def _atomic_write(path: Path, data: bytes) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


@dataclass(frozen=True)
class PairRecord:
    """Manifest entry for one generated pair."""

    index: int
    n: int
    seed: int
    step: dict
    support_fg_mean: list
    support_bg_means: list
    query_fg_mean: list
    query_bg_means: list
    support_polygons: list
    query_polygons: list
    hinted_indices: list
    files: dict
    file_digests: dict
    content_digest: str

    def to_dict(self) -> dict:
        data = asdict(self)
        data["seed"] = str(self.seed)  # uint64 seeds are not JSON-number safe
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "PairRecord":
        data = dict(data)
        data["seed"] = int(data["seed"])
        return cls(**data)


@dataclass(frozen=True)
class DatasetManifest:
    """Self-describing index of a generated dataset, written after all pairs."""

    version: str
    size: int
    master_seed: int
    count: int
    sigma: float
    min_area: int
    step_policy: str
    fixed_n: int
    schedule: dict
    pairs: list

    def to_dict(self) -> dict:
        return {
            "version": self.version,
            "size": self.size,
            "master_seed": self.master_seed,
            "count": self.count,
            "sigma": self.sigma,
            "min_area": self.min_area,
            "step_policy": self.step_policy,
            "fixed_n": self.fixed_n,
            "schedule": self.schedule,
            "pairs": [p.to_dict() for p in self.pairs],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DatasetManifest":
        if data.get("version") != MANIFEST_VERSION:
            raise ManifestError(f"unsupported manifest version {data.get('version')!r}")
        return cls(
            version=data["version"], size=data["size"],
            master_seed=data["master_seed"], count=data["count"],
            sigma=data["sigma"], min_area=data["min_area"],
            step_policy=data["step_policy"], fixed_n=data["fixed_n"],
            schedule=data["schedule"],
            pairs=[PairRecord.from_dict(p) for p in data["pairs"]],
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def schedule_config(self) -> ScheduleConfig:
        return ScheduleConfig(**self.schedule)


def save_manifest(manifest: DatasetManifest, root: str | Path) -> Path:
    path = Path(root) / "manifest.json"
    _atomic_write(path, manifest.to_json().encode("utf-8"))
    return path


def load_manifest(root: str | Path, verify_files: bool = True) -> DatasetManifest:
    root = Path(root)
    path = root / "manifest.json"
    if not path.is_file():
        raise ManifestError(f"no manifest.json under {root}")
    manifest = DatasetManifest.from_dict(json.loads(path.read_text(encoding="utf-8")))
    if verify_files:
        validate_manifest(manifest, root)
    return manifest


def validate_manifest(manifest: DatasetManifest, root: str | Path) -> None:
    """Check ordering, file existence, and per-file digests."""
    root = Path(root)
    if [p.index for p in manifest.pairs] != list(range(manifest.count)):
        raise ManifestError("pair records are not a contiguous index sequence")
    for record in manifest.pairs:
        for role, rel in record.files.items():
            path = root / rel
            if not path.is_file():
                raise ManifestError(f"pair {record.index}: missing file {rel}")
            digest = _sha256(path.read_bytes())
            if digest != record.file_digests[role]:
                raise ManifestError(
                    f"pair {record.index}: digest mismatch for {rel}")


def _step_dict(step: StepParams) -> dict:
    return {"n": step.n, "a": step.a, "b": step.b, "c": step.c, "d": step.d,
            "m": step.m}


def step_from_dict(data: dict) -> StepParams:
    return StepParams(n=data["n"], a=data["a"], b=data["b"], c=data["c"],
                      d=data["d"], m=data["m"])


def _polygons_payload(polys) -> list:
    return [[list(v) for v in p.vertices] for p in polys]


def polygons_from_payload(payload: list) -> list[Polygon16]:
    return [Polygon16(tuple((int(x), int(y)) for x, y in verts)) for verts in payload]


def generate_one_pair(config: GenConfig, out_root: str | Path, index: int) -> PairRecord:
    """Generate, render, and write one pair; returns its manifest record."""
    out_root = Path(out_root)
    n = config.step_index(index)
    step = step_params(n, config.schedule)
    seed = derive_pair_seed(config.seed, index)
    try:
        pair = generate_pair(seed, step, config.size, config.size,
                             sigma=config.sigma, min_area=config.min_area)
        hinted = sample_hint_indices(derive_rng(seed, STREAM_HINTS), step.m)
        instruction = render_pretrain_instruction(pair, hinted, step.m)
    except FewsegError as exc:
        raise type(exc)(f"pair {index}: {exc}") from exc

    pair_dir = out_root / "pairs" / f"pair_{index:05d}"
    pair_dir.mkdir(parents=True, exist_ok=True)
    payloads = {
        "support_image": encode_png_rgb(pair.support_image),
        "query_image": encode_png_rgb(pair.query_image),
        "support_mask": encode_png_mask(pair.support_mask),
        "query_mask": encode_png_mask(pair.query_mask),
        "instruction": instruction.text.encode("utf-8"),
    }
    names = {
        "support_image": "support.png",
        "query_image": "query.png",
        "support_mask": "support_mask.png",
        "query_mask": "query_mask.png",
        "instruction": "instruction.txt",
    }
    files, digests = {}, {}
    for role, data in payloads.items():
        rel = (pair_dir / names[role]).relative_to(out_root)
        _atomic_write(out_root / rel, data)
        files[role] = str(rel)
        digests[role] = _sha256(data)

    record = PairRecord(
        index=index, n=n, seed=seed, step=_step_dict(step),
        support_fg_mean=[float(v) for v in pair.support_fg_mean],
        support_bg_means=[[float(v) for v in m] for m in pair.support_bg_means],
        query_fg_mean=[float(v) for v in pair.query_fg_mean],
        query_bg_means=[[float(v) for v in m] for m in pair.query_bg_means],
        support_polygons=_polygons_payload(pair.support_polygons),
        query_polygons=_polygons_payload(pair.query_polygons),
        hinted_indices=[int(i) for i in hinted],
        files=files,
        file_digests=digests,
        content_digest=pair_digest(pair),
    )
    _atomic_write(pair_dir / "meta.json",
                  json.dumps(record.to_dict(), indent=2, sort_keys=True).encode("utf-8"))
    return record


def _worker(args: tuple) -> PairRecord:
    config, out_root, index = args
    return generate_one_pair(config, out_root, index)


def generate_dataset(config: GenConfig, out_dir: str | Path,
                     jobs: int | None = None) -> DatasetManifest:
    """Generate the whole dataset; pairs are independent and may run in parallel."""
    out_root = Path(out_dir)
    out_root.mkdir(parents=True, exist_ok=True)
    if jobs is None:
        jobs = os.cpu_count() or 1
    indices = list(range(config.count))
    if jobs <= 1 or config.count <= 1:
        records = [generate_one_pair(config, out_root, i) for i in indices]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_worker, [(config, out_root, i) for i in indices],
                                    chunksize=max(1, config.count // (jobs * 4))))
    records.sort(key=lambda r: r.index)
    manifest = DatasetManifest(
        version=MANIFEST_VERSION, size=config.size, master_seed=config.seed,
        count=config.count, sigma=config.sigma, min_area=config.min_area,
        step_policy=config.step_policy, fixed_n=config.fixed_n,
        schedule={"a0": config.schedule.a0, "b0": config.schedule.b0,
                  "c_final": config.schedule.c_final,
                  "d_final": config.schedule.d_final,
                  "total_steps": config.schedule.total_steps},
        pairs=records,
    )
    save_manifest(manifest, out_root)
    return manifest
