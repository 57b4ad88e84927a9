"""Command-line interface for training and inference."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import cv2
import numpy as np


@click.group()
def main():
    """Toy-scale dual-branch raw super-resolution trainer."""


@main.command("train")
@click.option("--data", "data_dir", required=True, type=click.Path(exists=True),
              help="Patch dataset directory (with manifest.json).")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help="JSON training config; defaults when omitted.")
@click.option("--out", "out_dir", required=True, type=click.Path())
def train_cmd(data_dir, config_path, out_dir):
    """Train on a patch dataset; writes checkpoint.pt and train_log.json."""
    from .train import TrainConfig, train

    config = TrainConfig.from_json(config_path) if config_path else TrainConfig()
    summary = train(data_dir, config, out_dir)
    click.echo(json.dumps({
        "checkpoint": str(Path(out_dir) / "checkpoint.pt"),
        "final_train_l1": summary["final_train_l1"],
        "final_train_psnr": summary["final_train_psnr"],
    }))


@main.command("infer")
@click.option("--ckpt", "ckpt_path", required=True, type=click.Path(exists=True))
@click.option("--raw", "raw_path", required=True, type=click.Path(exists=True))
@click.option("--ref", "ref_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--tile", type=int, default=0, show_default=True,
              help="Tile size for tiled inference; 0 runs untiled.")
@click.option("--overlap", type=int, default=8, show_default=True)
@click.option("--field-out", type=click.Path(), default=None,
              help="Also export the HxWx9 transform field as .npy (untiled only).")
def infer_cmd(ckpt_path, raw_path, ref_path, out_path, tile, overlap, field_out):
    """Super-resolve one raw mosaic with its rendered reference."""
    from .infer import infer, infer_tiled, load_raw01, load_ref01
    from .train import load_checkpoint

    model = load_checkpoint(ckpt_path)
    raw = load_raw01(raw_path)
    ref = load_ref01(ref_path)
    if tile:
        x_hat = infer_tiled(model, raw, ref, tile=tile, overlap=overlap)
        if field_out:
            raise click.ClickException("--field-out requires untiled inference")
    else:
        x_hat, _, field = infer(model, raw, ref)
        if field_out:
            Path(field_out).parent.mkdir(parents=True, exist_ok=True)
            np.save(field_out, field)
    out = np.rint(x_hat * 65535.0).astype(np.uint16)
    Path(out_path).parent.mkdir(parents=True, exist_ok=True)
    if not cv2.imwrite(str(out_path), cv2.cvtColor(out, cv2.COLOR_RGB2BGR)):
        raise click.ClickException(f"failed to write {out_path}")
    click.echo(out_path)


if __name__ == "__main__":
    sys.exit(main())
