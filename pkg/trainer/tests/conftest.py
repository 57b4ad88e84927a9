import json
import subprocess

import cv2
import numpy as np
import pytest
from scipy import ndimage


def smooth_rgb(seed: int, h: int, w: int, lo: float = 0.1, hi: float = 0.7) -> np.ndarray:
    rng = np.random.default_rng(seed)
    a = ndimage.gaussian_filter(rng.random((h, w, 3)), (4, 4, 0))
    a = (a - a.min()) / (a.max() - a.min())
    return lo + (hi - lo) * a


def write_png16(path, rgb01: np.ndarray):
    q = np.rint(rgb01 * 65535.0).astype(np.uint16)
    assert cv2.imwrite(str(path), cv2.cvtColor(q, cv2.COLOR_RGB2BGR))


def run_rawsr(*args):
    """Invoke the synthesis toolkit through its public CLI."""
    res = subprocess.run(
        ["rawsr", *map(str, args)], capture_output=True, text=True
    )
    assert res.returncode == 0, f"rawsr {args} failed: {res.stderr or res.stdout}"
    return res.stdout


@pytest.fixture(scope="session")
def patch_dataset(tmp_path_factory):
    """8 aligned patch quadruples generated via the toolkit CLI."""
    root = tmp_path_factory.mktemp("corpus")
    src = root / "src"
    src.mkdir()
    for i in range(4):
        write_png16(src / f"{i}.png", smooth_rgb(300 + i, 64, 64))
    cfg = root / "cfg.json"
    cfg.write_text(json.dumps({"patch_size": 32, "patches_per_image": 2}))
    run_rawsr("--seed", 7, "--config", cfg, "--out", root / "ds",
              "dataset", "--sources", src)
    run_rawsr("--seed", 7, "--out", root / "patches",
              "patches", "--data", root / "ds", "--size", 32, "--count", 2)
    return root / "patches"


@pytest.fixture(scope="session")
def overfit_run(patch_dataset, tmp_path_factory):
    """The acceptance overfit configuration, trained once per session."""
    from rawsr_trainer.train import TrainConfig, train

    out = tmp_path_factory.mktemp("overfit")
    config = TrainConfig(
        iterations=2000, batch_size=6, learning_rate=2e-3,
        seed=0, limit_patches=8,
    )
    summary = train(patch_dataset, config, out)
    return {"out": out, "summary": summary}


@pytest.fixture(scope="session")
def full_image_pair(tmp_path_factory):
    """A 128x128 raw mosaic and its rendered reference, via the CLI."""
    root = tmp_path_factory.mktemp("fullimg")
    write_png16(root / "lin.png", smooth_rgb(77, 256, 256, 0.1, 0.7))
    run_rawsr("--seed", 4, "--out", root / "raw.png", "degrade",
              "--lin", root / "lin.png", "--radius", 2.0,
              "--motion-size", 5, "--motion-steps", 6)
    run_rawsr("--out", root / "ref.jpg", "isp",
              "--input", root / "raw.png", "--mode", "ref")
    from rawsr_trainer.infer import load_raw01, load_ref01

    return load_raw01(root / "raw.png"), load_ref01(root / "ref.jpg")
