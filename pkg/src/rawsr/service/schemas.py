"""Request/response models for the toolkit service.

Pixel data never travels over the wire; requests reference files on the
filesystem shared with the service and responses return output paths.
"""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel

from ..dataset import GenerationConfig
from ..isp import IspProfile


class HealthResponse(BaseModel):
    status: str
    version: str


class PathResponse(BaseModel):
    out_path: str


class BinRequest(BaseModel):
    raw_path: str
    sidecar: Optional[dict] = None
    out_path: str


class DegradationParamsModel(BaseModel):
    defocus_radius: float
    motion_max_size: int
    motion_steps: int
    sigma1: float
    sigma2: float
    seed: int


class DegradeRequest(BaseModel):
    lin_path: str
    params: DegradationParamsModel
    pattern: str = "RGGB"
    out_path: str


class DemosaicRequest(BaseModel):
    raw_path: str
    pattern: str = "RGGB"
    method: Literal["bilinear", "ahd"] = "ahd"
    out_path: str


class IspRequest(BaseModel):
    input_path: str
    mode: Literal["gt", "ref"]
    pattern: str = "RGGB"  # only used in ref mode (input is a mosaic)
    profile: Optional[IspProfile] = None
    out_path: str


class DatasetRequest(BaseModel):
    sources_dir: str
    config: Optional[GenerationConfig] = None
    seed: int = 0
    out_dir: str
    jobs: int = 1


class DatasetResponse(BaseModel):
    manifest_path: str
    num_examples: int
    num_failures: int


class PatchesRequest(BaseModel):
    dataset_dir: str
    size: int = 256
    count: int = 8
    seed: int = 0
    out_dir: str


class PatchesResponse(BaseModel):
    manifest_path: str
    num_patches: int


class MetricsRequest(BaseModel):
    a_path: str
    b_path: str
    peak: Optional[float] = None  # default: 255 for 8-bit, 1.0 otherwise


class MetricsResponse(BaseModel):
    psnr: float | str  # "inf" sentinel when images are identical
    ssim: float


class ApplyTransformRequest(BaseModel):
    image_path: str
    field_path: Optional[str] = None  # HxWx9 .npy pixel-wise field
    matrix: Optional[list[list[float]]] = None  # 3x3 global transform
    out_path: str
