"""Reading patch datasets produced by the synthesis toolkit.

The trainer consumes the toolkit only through its documented on-disk
interchange: a dataset directory with lin/gt/raw/ref PNG files and a
manifest.json listing the examples.
"""

from __future__ import annotations

import json
from pathlib import Path

import cv2
import numpy as np
import torch


def _read_png(path) -> np.ndarray:
    a = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if a is None:
        raise IOError(f"cannot read {path}")
    if a.ndim == 3:
        a = cv2.cvtColor(a, cv2.COLOR_BGR2RGB)
    return a


def load_plane01(path) -> np.ndarray:
    """Any PNG -> float64 in [0, 1]."""
    a = _read_png(path)
    scale = 255.0 if a.dtype == np.uint8 else 65535.0
    return a.astype(np.float64) / scale


class PatchDataset:
    """In-memory (raw, ref, gt) triples from a patch-dataset directory."""

    def __init__(self, dataset_dir, limit: int | None = None):
        self.dir = Path(dataset_dir)
        with open(self.dir / "manifest.json") as f:
            self.manifest = json.load(f)
        records = self.manifest["patches"]
        if not records:
            raise ValueError(f"{dataset_dir}: empty patch dataset")
        if limit is not None:
            records = records[:limit]
        self.records = records
        self.raw = []
        self.ref = []
        self.gt = []
        for rec in records:
            files = rec["files"]
            self.raw.append(load_plane01(self.dir / files["raw"]))
            self.ref.append(load_plane01(self.dir / files["ref"]))
            self.gt.append(load_plane01(self.dir / files["gt"]))
        self.pattern = records[0]["bayer_pattern"]

    def __len__(self):
        return len(self.records)

    def tensors(self, dtype=torch.float32):
        """Stacked (raw (N,H,W), ref (N,3,H,W), gt (N,3,2H,2W)) tensors."""
        raw = torch.tensor(np.stack(self.raw), dtype=dtype)
        ref = torch.tensor(np.stack(self.ref), dtype=dtype).permute(0, 3, 1, 2)
        gt = torch.tensor(np.stack(self.gt), dtype=dtype).permute(0, 3, 1, 2)
        if gt.shape[-2:] != (2 * raw.shape[-2], 2 * raw.shape[-1]):
            raise ValueError("ground truth is not 2x the raw resolution")
        if ref.shape[-2:] != raw.shape[-2:]:
            raise ValueError("reference does not match the raw resolution")
        return raw, ref, gt
