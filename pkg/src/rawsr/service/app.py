"""Service endpoints wrapping the synthesis toolkit."""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException

from .. import __version__, io_utils
from ..binning import bin_bayer_to_linear
from ..color_transform import (
    GlobalTransform,
    PixelTransformField,
    apply_global,
    apply_pixelwise,
)
from ..core import BayerPattern, BayerRaw, LinearImage
from ..dataset import (
    GenerationConfig,
    generate_dataset,
    generate_patch_dataset,
    ingest_source,
)
from ..degrade import DegradationParams, degrade
from ..demosaic import demosaic_ahd, demosaic_bilinear
from ..isp import IspProfile, render_ground_truth, render_reference
from ..metrics import psnr, ssim
from . import schemas

SOURCE_EXTENSIONS = (".png", ".tif", ".tiff")


def create_app() -> FastAPI:
    app = FastAPI(title="rawsr", version=__version__)

    def fail(e: Exception):
        raise HTTPException(status_code=400, detail=str(e))

    @app.get("/v1/health", response_model=schemas.HealthResponse)
    def health():
        return schemas.HealthResponse(status="ok", version=__version__)

    @app.post("/v1/bin", response_model=schemas.PathResponse)
    def bin_endpoint(req: schemas.BinRequest):
        try:
            source, _ = ingest_source(req.raw_path, req.sidecar)
            if not isinstance(source, BayerRaw):
                raise ValueError(f"{req.raw_path} is not a Bayer mosaic")
            io_utils.save_linear_png16(req.out_path, bin_bayer_to_linear(source))
        except (ValueError, IOError, TypeError) as e:
            fail(e)
        return schemas.PathResponse(out_path=req.out_path)

    @app.post("/v1/degrade", response_model=schemas.PathResponse)
    def degrade_endpoint(req: schemas.DegradeRequest):
        try:
            lin = io_utils.load_linear_png16(req.lin_path)
            params = DegradationParams(**req.params.model_dump())
            raw = degrade(lin, params, pattern=BayerPattern(req.pattern))
            io_utils.save_raw_png16(req.out_path, raw)
        except (ValueError, IOError) as e:
            fail(e)
        return schemas.PathResponse(out_path=req.out_path)

    @app.post("/v1/demosaic", response_model=schemas.PathResponse)
    def demosaic_endpoint(req: schemas.DemosaicRequest):
        try:
            raw = io_utils.load_raw_png16(req.raw_path, BayerPattern(req.pattern))
            fn = demosaic_ahd if req.method == "ahd" else demosaic_bilinear
            io_utils.save_linear_png16(req.out_path, fn(raw))
        except (ValueError, IOError) as e:
            fail(e)
        return schemas.PathResponse(out_path=req.out_path)

    @app.post("/v1/isp", response_model=schemas.PathResponse)
    def isp_endpoint(req: schemas.IspRequest):
        profile = req.profile or IspProfile()
        try:
            if req.mode == "gt":
                lin = io_utils.load_linear_png16(req.input_path)
                img = render_ground_truth(lin, profile)
                io_utils.save_color_png8(req.out_path, img)
            else:
                raw = io_utils.load_raw_png16(req.input_path, BayerPattern(req.pattern))
                _, jpeg = render_reference(raw, profile)
                io_utils.save_bytes(req.out_path, jpeg)
        except (ValueError, IOError) as e:
            fail(e)
        return schemas.PathResponse(out_path=req.out_path)

    @app.post("/v1/dataset", response_model=schemas.DatasetResponse)
    def dataset_endpoint(req: schemas.DatasetRequest):
        try:
            config = req.config or GenerationConfig()
            sources = sorted(
                p
                for p in Path(req.sources_dir).iterdir()
                if p.suffix.lower() in SOURCE_EXTENSIONS
            )
            if not sources:
                raise ValueError(f"no source images found in {req.sources_dir}")
            manifest = generate_dataset(sources, config, req.seed, req.out_dir, req.jobs)
        except (ValueError, IOError, OSError) as e:
            fail(e)
        if manifest["failures"]:
            raise HTTPException(
                status_code=422,
                detail={
                    "message": "some examples failed",
                    "manifest_path": str(Path(req.out_dir) / "manifest.json"),
                    "failures": manifest["failures"],
                },
            )
        return schemas.DatasetResponse(
            manifest_path=str(Path(req.out_dir) / "manifest.json"),
            num_examples=len(manifest["examples"]),
            num_failures=len(manifest["failures"]),
        )

    @app.post("/v1/patches", response_model=schemas.PatchesResponse)
    def patches_endpoint(req: schemas.PatchesRequest):
        try:
            manifest = generate_patch_dataset(
                req.dataset_dir, req.size, req.count, req.seed, req.out_dir
            )
        except (ValueError, IOError, OSError) as e:
            fail(e)
        return schemas.PatchesResponse(
            manifest_path=str(Path(req.out_dir) / "manifest.json"),
            num_patches=len(manifest["patches"]),
        )

    @app.post("/v1/metrics", response_model=schemas.MetricsResponse)
    def metrics_endpoint(req: schemas.MetricsRequest):
        try:
            a = io_utils.read_image_any(req.a_path)
            b = io_utils.read_image_any(req.b_path)
            if req.peak is not None:
                peak = req.peak
                a, b = a.astype(np.float64), b.astype(np.float64)
            elif a.dtype == np.uint8:
                peak = 255.0
            else:
                a = a.astype(np.float64) / 65535.0
                b = b.astype(np.float64) / 65535.0
                peak = 1.0
            p = psnr(a, b, peak)
            s = ssim(a, b, peak)
        except (ValueError, IOError) as e:
            fail(e)
        return schemas.MetricsResponse(psnr="inf" if math.isinf(p) else p, ssim=s)

    @app.post("/v1/apply-transform", response_model=schemas.PathResponse)
    def apply_transform_endpoint(req: schemas.ApplyTransformRequest):
        try:
            img = io_utils.load_linear_png16(req.image_path)
            if (req.field_path is None) == (req.matrix is None):
                raise ValueError("provide exactly one of field_path or matrix")
            if req.field_path is not None:
                field = PixelTransformField.from_array(
                    io_utils.load_field_npy(req.field_path)
                )
                out = apply_pixelwise(img, field)
            else:
                out = apply_global(img, GlobalTransform(np.asarray(req.matrix)))
            io_utils.save_linear_png16(req.out_path, out)
        except (ValueError, IOError) as e:
            fail(e)
        return schemas.PathResponse(out_path=req.out_path)

    return app


app = create_app()
