"""End-to-end dataset synthesis: ingest sources, sample degradations, run
the pipeline and persist (lin, gt, raw, ref) quadruples with a manifest.

Layout: out/{lin,gt,raw,ref}/NNNNNN.{png,jpg} plus out/manifest.json. The
manifest records everything needed to regenerate any example bit-for-bit:
per-example parameters, seeds, the ISP profile and file checksums.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from pydantic import BaseModel, Field, model_validator

from . import __version__, io_utils
from .binning import bin_bayer_to_linear
from .core import BayerPattern, BayerRaw, ColorImage8, LinearImage, crop
from .degrade import DegradationParams, degrade, derive_seed, make_rng
from .isp import IspProfile, render_ground_truth, render_reference, srgb_decode

# Parameter bounds the generator was designed for.
DESIGN_BOUNDS = {
    "defocus": (1.0, 5.0),
    "motion_size": (3, 11),
    "sigma1": (0.0, 1e-2),
    "sigma2": (0.0, 1e-3),
}


class GenerationConfig(BaseModel):
    """Dataset generation settings; mirrors the JSON config document."""

    defocus_range: tuple[float, float] = (1.0, 5.0)
    motion_size_range: tuple[int, int] = (3, 11)
    sigma1_range: tuple[float, float] = (0.0, 1e-2)
    sigma2_range: tuple[float, float] = (0.0, 1e-3)
    patch_size: int = 256
    patches_per_image: int = 8
    pattern: str = "RGGB"
    isp_profile: IspProfile = Field(default_factory=IspProfile)
    non_blind: bool = False  # fixed radius-5 defocus, no motion
    allow_extended_ranges: bool = False

    model_config = {"extra": "forbid"}

    @model_validator(mode="after")
    def _check(self):
        for lo, hi in (
            self.defocus_range,
            self.motion_size_range,
            self.sigma1_range,
            self.sigma2_range,
        ):
            if hi < lo:
                raise ValueError("parameter ranges must be non-empty")
        if not self.allow_extended_ranges:
            checks = [
                ("defocus", self.defocus_range),
                ("motion_size", self.motion_size_range),
                ("sigma1", self.sigma1_range),
                ("sigma2", self.sigma2_range),
            ]
            for name, (lo, hi) in checks:
                blo, bhi = DESIGN_BOUNDS[name]
                if lo < blo or hi > bhi:
                    raise ValueError(
                        f"{name} range [{lo}, {hi}] outside [{blo}, {bhi}]; "
                        "set allow_extended_ranges to override"
                    )
        if self.patch_size % 4:
            raise ValueError("patch_size must be divisible by 4")
        BayerPattern(self.pattern)
        return self


def load_config(path) -> GenerationConfig:
    with open(path) as f:
        return GenerationConfig.model_validate(json.load(f))


def ingest_source(path, sidecar: dict | None = None):
    """Load a pre-extracted source plane and normalize it to [0, 1].

    16-bit single-plane files are Bayer mosaics and need a sidecar with
    pattern and black/white levels; 16-bit 3-plane files are taken as
    linear; 8-bit 3-plane files are inverse-sRGB mapped to pseudo-linear
    (flagged in the returned metadata).
    """
    a = io_utils.read_image_any(path)
    sidecar = sidecar or {}
    meta = {"pseudo_linear": False}
    if a.dtype == np.uint16:
        black = float(sidecar.get("black_level", 0))
        white = float(sidecar.get("white_level", 65535))
        if white <= black:
            raise ValueError("white level must exceed black level")
        norm = np.clip((a.astype(np.float64) - black) / (white - black), 0.0, 1.0)
        if a.ndim == 2:
            if "pattern" not in sidecar:
                raise ValueError(f"{path}: Bayer source requires a sidecar pattern")
            return BayerRaw(norm, BayerPattern(sidecar["pattern"])), meta
        return LinearImage(norm), meta
    if a.dtype == np.uint8 and a.ndim == 3:
        meta["pseudo_linear"] = True
        return LinearImage(srgb_decode(a.astype(np.float64) / 255.0)), meta
    raise ValueError(f"{path}: unsupported source format ({a.dtype}, ndim={a.ndim})")


def sample_params(rng: np.random.Generator, config: GenerationConfig) -> DegradationParams:
    """Draw one image's degradation parameters from the configured ranges."""
    seed = int(rng.integers(0, 2**63, dtype=np.uint64))
    if config.non_blind:
        return DegradationParams(
            defocus_radius=5.0,
            motion_max_size=3,
            motion_steps=0,
            sigma1=float(rng.uniform(*config.sigma1_range)),
            sigma2=float(rng.uniform(*config.sigma2_range)),
            seed=seed,
        )
    radius = float(rng.uniform(*config.defocus_range))
    lo, hi = config.motion_size_range
    size = int(rng.integers(lo, hi + 1))
    if size % 2 == 0:  # snap to odd within range
        size = size + 1 if size + 1 <= hi else size - 1
    steps = int(rng.integers(4, 2 * size + 1))
    return DegradationParams(
        defocus_radius=radius,
        motion_max_size=size,
        motion_steps=steps,
        sigma1=float(rng.uniform(*config.sigma1_range)),
        sigma2=float(rng.uniform(*config.sigma2_range)),
        seed=seed,
    )


@dataclass
class ExampleData:
    x_lin: LinearImage
    x_gt: ColorImage8
    x_raw: BayerRaw
    x_ref: ColorImage8
    ref_jpeg: bytes


def _crop_to_multiple_of_4(img: LinearImage) -> LinearImage:
    h = img.height - img.height % 4
    w = img.width - img.width % 4
    if h < 4 or w < 4:
        raise ValueError("source too small to degrade")
    if (h, w) == (img.height, img.width):
        return img
    return crop(img, 0, 0, h, w)


def generate_example(
    source, params: DegradationParams, profile: IspProfile, pattern: BayerPattern
) -> ExampleData:
    """Run the full synthesis chain for one source image."""
    if isinstance(source, BayerRaw):
        x_lin = bin_bayer_to_linear(source)
    elif isinstance(source, LinearImage):
        x_lin = source
    else:
        raise TypeError(f"cannot generate from {type(source).__name__}")
    x_lin = _crop_to_multiple_of_4(x_lin)
    x_gt = render_ground_truth(x_lin, profile)
    x_raw = degrade(x_lin, params, pattern=pattern)
    x_ref, jpeg = render_reference(x_raw, profile)
    return ExampleData(x_lin=x_lin, x_gt=x_gt, x_raw=x_raw, x_ref=x_ref, ref_jpeg=jpeg)


def _example_paths(index: int) -> dict[str, str]:
    stem = f"{index:06d}"
    return {
        "lin": f"lin/{stem}.png",
        "gt": f"gt/{stem}.png",
        "raw": f"raw/{stem}.png",
        "ref": f"ref/{stem}.jpg",
    }


def write_example(out_dir, index: int, ex: ExampleData) -> dict[str, dict]:
    out_dir = Path(out_dir)
    paths = _example_paths(index)
    io_utils.save_linear_png16(out_dir / paths["lin"], ex.x_lin)
    io_utils.save_color_png8(out_dir / paths["gt"], ex.x_gt)
    io_utils.save_raw_png16(out_dir / paths["raw"], ex.x_raw)
    io_utils.save_bytes(out_dir / paths["ref"], ex.ref_jpeg)
    checksums = {k: io_utils.sha256_file(out_dir / p) for k, p in paths.items()}
    return {"files": paths, "checksums": checksums}


def _load_sidecar(source_path) -> dict | None:
    sidecar_path = Path(source_path).with_suffix(".json")
    if sidecar_path.exists():
        with open(sidecar_path) as f:
            return json.load(f)
    return None


def _generate_one(out_dir, index, source_path, master_seed, config):
    sidecar = _load_sidecar(source_path)
    source, meta = ingest_source(source_path, sidecar)
    param_rng = make_rng(derive_seed(master_seed, index, "params"))
    params = sample_params(param_rng, config)
    ex = generate_example(source, params, config.isp_profile, BayerPattern(config.pattern))
    record = {
        "index": index,
        "source": str(source_path),
        "pseudo_linear": meta["pseudo_linear"],
        "bayer_pattern": config.pattern,
        "params": {
            "defocus_radius": params.defocus_radius,
            "motion_max_size": params.motion_max_size,
            "motion_steps": params.motion_steps,
            "sigma1": params.sigma1,
            "sigma2": params.sigma2,
            "seed": params.seed,
        },
    }
    record.update(write_example(out_dir, index, ex))
    return record


def generate_dataset(
    source_paths, config: GenerationConfig, master_seed: int, out_dir, jobs: int = 1
) -> dict:
    """Generate all examples and write out/manifest.json atomically.

    Failed sources are skipped and reported in the manifest; per-example
    RNG streams are derived from (master_seed, index) so results do not
    depend on the worker count.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    source_paths = [str(p) for p in source_paths]

    records: list[dict | None] = [None] * len(source_paths)
    failures: list[dict] = []

    def work(i):
        return _generate_one(out_dir, i, source_paths[i], master_seed, config)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            futures = {i: pool.submit(work, i) for i in range(len(source_paths))}
            for i, fut in futures.items():
                try:
                    records[i] = fut.result()
                except Exception as e:  # noqa: BLE001 - skip-and-log policy
                    failures.append({"index": i, "source": source_paths[i], "error": str(e)})
    else:
        for i in range(len(source_paths)):
            try:
                records[i] = work(i)
            except Exception as e:  # noqa: BLE001
                failures.append({"index": i, "source": source_paths[i], "error": str(e)})

    manifest = {
        "toolkit_version": __version__,
        "digest_algorithm": io_utils.DIGEST_ALGORITHM,
        "master_seed": master_seed,
        "isp_profile": config.isp_profile.model_dump(),
        "config": config.model_dump(),
        "examples": [r for r in records if r is not None],
        "failures": sorted(failures, key=lambda f: f["index"]),
    }
    write_manifest(out_dir / "manifest.json", manifest)
    return manifest


def write_manifest(path, manifest: dict):
    path = Path(path)
    tmp = path.with_suffix(".json.tmp")
    tmp.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    os.replace(tmp, path)


def load_manifest(path) -> dict:
    with open(path) as f:
        return json.load(f)


def regenerate_example(manifest: dict, record: dict, out_dir) -> dict[str, dict]:
    """Re-run one example from its manifest record; returns fresh checksums."""
    config = GenerationConfig.model_validate(manifest["config"])
    sidecar = _load_sidecar(record["source"])
    source, _ = ingest_source(record["source"], sidecar)
    params = DegradationParams(**record["params"])
    ex = generate_example(
        source, params, config.isp_profile, BayerPattern(record["bayer_pattern"])
    )
    return write_example(out_dir, record["index"], ex)


def patch_positions(
    gt_h: int, gt_w: int, size: int, count: int, rng: np.random.Generator
) -> list[tuple[int, int]]:
    """Random aligned ground-truth patch corners (divisible by 4)."""
    if size % 4:
        raise ValueError("patch size must be divisible by 4")
    if size > gt_h or size > gt_w:
        raise ValueError("source smaller than patch")
    max_top = (gt_h - size) // 4
    max_left = (gt_w - size) // 4
    tops = rng.integers(0, max_top + 1, size=count) * 4
    lefts = rng.integers(0, max_left + 1, size=count) * 4
    return [(int(t), int(l)) for t, l in zip(tops, lefts)]


def extract_patches(
    ex: ExampleData, size: int, count: int, rng: np.random.Generator
) -> list[dict]:
    """Aligned (lin, gt, raw, ref) patch quadruples.

    A size x size ground-truth window at (2r, 2c) pairs with the
    (size/2) x (size/2) raw/ref windows at (r, c), with r and c even so
    the Bayer phase is preserved.
    """
    out = []
    for top, left in patch_positions(ex.x_gt.height, ex.x_gt.width, size, count, rng):
        half = size // 2
        out.append(
            {
                "gt_position": (top, left),
                "lin": crop(ex.x_lin, top, left, size, size),
                "gt": crop(ex.x_gt, top, left, size, size),
                "raw": crop(ex.x_raw, top // 2, left // 2, half, half),
                "ref": crop(ex.x_ref, top // 2, left // 2, half, half),
            }
        )
    return out


def load_example(out_dir, record: dict) -> ExampleData:
    """Load a stored example back from a dataset directory."""
    out_dir = Path(out_dir)
    pattern = BayerPattern(record["bayer_pattern"])
    ref_jpeg = (out_dir / record["files"]["ref"]).read_bytes()
    from .isp import decode_jpeg

    return ExampleData(
        x_lin=io_utils.load_linear_png16(out_dir / record["files"]["lin"]),
        x_gt=io_utils.load_color_png8(out_dir / record["files"]["gt"]),
        x_raw=io_utils.load_raw_png16(out_dir / record["files"]["raw"], pattern),
        x_ref=decode_jpeg(ref_jpeg),
        ref_jpeg=ref_jpeg,
    )


def generate_patch_dataset(
    dataset_dir, size: int, count: int, master_seed: int, out_dir
) -> dict:
    """Extract aligned patch quadruples from a generated dataset."""
    dataset_dir = Path(dataset_dir)
    out_dir = Path(out_dir)
    manifest = load_manifest(dataset_dir / "manifest.json")
    records = []
    idx = 0
    for rec in manifest["examples"]:
        ex = load_example(dataset_dir, rec)
        rng = make_rng(derive_seed(master_seed, rec["index"], "patches"))
        for patch in extract_patches(ex, size, count, rng):
            stem = f"{idx:06d}"
            paths = {
                "lin": f"lin/{stem}.png",
                "gt": f"gt/{stem}.png",
                "raw": f"raw/{stem}.png",
                "ref": f"ref/{stem}.png",
            }
            io_utils.save_linear_png16(out_dir / paths["lin"], patch["lin"])
            io_utils.save_color_png8(out_dir / paths["gt"], patch["gt"])
            io_utils.save_raw_png16(out_dir / paths["raw"], patch["raw"])
            io_utils.save_color_png8(out_dir / paths["ref"], patch["ref"])
            records.append(
                {
                    "index": idx,
                    "example_index": rec["index"],
                    "gt_position": list(patch["gt_position"]),
                    "bayer_pattern": rec["bayer_pattern"],
                    "files": paths,
                    "checksums": {
                        k: io_utils.sha256_file(out_dir / p) for k, p in paths.items()
                    },
                }
            )
            idx += 1
    patch_manifest = {
        "toolkit_version": __version__,
        "digest_algorithm": io_utils.DIGEST_ALGORITHM,
        "master_seed": master_seed,
        "patch_size": size,
        "patches_per_image": count,
        "source_dataset": str(dataset_dir),
        "patches": records,
    }
    write_manifest(out_dir / "manifest.json", patch_manifest)
    return patch_manifest
