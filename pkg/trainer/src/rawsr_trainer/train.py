"""L1/Adam training loop with a step-decay learning-rate schedule."""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
import torch

from .data import PatchDataset
from .model import DualNet, init_weights


@dataclass
class TrainConfig:
    iterations: int = 2000
    batch_size: int = 6
    learning_rate: float = 2e-4
    lr_decay: float = 0.96
    lr_decay_every: int = 2000
    rest_width: int = 16
    growth: int = 8
    color_width: int = 8
    seed: int = 0
    limit_patches: int | None = None  # overfit mode: train on a fixed subset
    log_every: int = 100

    @classmethod
    def from_json(cls, path) -> "TrainConfig":
        with open(path) as f:
            return cls(**json.load(f))


def save_checkpoint(path, model: DualNet, config: TrainConfig, log: list[dict]):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    torch.save(
        {
            "state_dict": model.state_dict(),
            "config": asdict(config),
            "pattern": model.pattern,
            "log": log,
        },
        tmp,
    )
    os.replace(tmp, path)


def load_checkpoint(path) -> DualNet:
    ckpt = torch.load(path, map_location="cpu", weights_only=False)
    cfg = ckpt["config"]
    model = DualNet(
        rest_width=cfg["rest_width"],
        growth=cfg["growth"],
        color_width=cfg["color_width"],
        pattern=ckpt["pattern"],
    )
    model.load_state_dict(ckpt["state_dict"])
    model.eval()
    return model


def train(dataset_dir, config: TrainConfig, out_dir) -> dict:
    """Train on a patch dataset; writes checkpoint.pt and train_log.json."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    torch.manual_seed(config.seed)

    data = PatchDataset(dataset_dir, limit=config.limit_patches)
    raw, ref, gt = data.tensors()
    n = len(data)

    model = DualNet(config.rest_width, config.growth, config.color_width,
                    pattern=data.pattern)
    init_weights(model, seed=config.seed)
    opt = torch.optim.Adam(model.parameters(), lr=config.learning_rate)
    sched = torch.optim.lr_scheduler.StepLR(
        opt, step_size=config.lr_decay_every, gamma=config.lr_decay
    )

    rng = np.random.default_rng(config.seed)
    log: list[dict] = []
    model.train()
    for it in range(1, config.iterations + 1):
        idx = rng.integers(0, n, size=min(config.batch_size, n))
        batch_idx = torch.from_numpy(np.ascontiguousarray(idx))
        x_hat, _, _ = model(raw[batch_idx], ref[batch_idx])
        loss = torch.mean(torch.abs(x_hat - gt[batch_idx]))
        opt.zero_grad()
        loss.backward()
        opt.step()
        sched.step()
        if it % config.log_every == 0 or it == 1 or it == config.iterations:
            log.append({"iteration": it, "l1": float(loss.item()),
                        "lr": float(sched.get_last_lr()[0])})

    model.eval()
    with torch.no_grad():
        x_hat, _, _ = model(raw, ref)
        x_hat = x_hat.clamp(0.0, 1.0)
        final_l1 = float(torch.mean(torch.abs(x_hat - gt)))
        mse = float(torch.mean((x_hat - gt) ** 2))
        final_psnr = float("inf") if mse == 0 else 10.0 * float(np.log10(1.0 / mse))

    save_checkpoint(out_dir / "checkpoint.pt", model, config, log)
    summary = {
        "iterations": config.iterations,
        "num_patches": n,
        "final_train_l1": final_l1,
        "final_train_psnr": final_psnr,
        "log": log,
    }
    tmp = out_dir / "train_log.json.tmp"
    tmp.write_text(json.dumps(summary, indent=2) + "\n")
    os.replace(tmp, out_dir / "train_log.json")
    return summary
