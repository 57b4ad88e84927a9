"""Command-line interface: a thin client for the toolkit service.

Every subcommand posts a JSON request to the HTTP API. With --server it
talks to a running instance; without it, the requests are dispatched to
an in-process copy of the app (same code path, no daemon needed).
"""

from __future__ import annotations

import asyncio
import json
import sys

import click
import httpx


def _call(ctx, method: str, path: str, payload: dict) -> dict:
    server = ctx.obj.get("server")
    if server:
        resp = httpx.request(
            method, server.rstrip("/") + path, json=payload, timeout=None
        )
    else:
        from .service import create_app

        async def go():
            transport = httpx.ASGITransport(app=create_app())
            async with httpx.AsyncClient(
                transport=transport, base_url="http://rawsr", timeout=None
            ) as client:
                return await client.request(method, path, json=payload)

        resp = asyncio.run(go())
    if resp.status_code != 200:
        try:
            detail = resp.json().get("detail", resp.text)
        except ValueError:
            detail = resp.text
        raise click.ClickException(f"{path} failed ({resp.status_code}): {detail}")
    return resp.json()


def _load_json(path) -> dict:
    try:
        with open(path) as f:
            return json.load(f)
    except OSError as e:
        raise click.ClickException(f"cannot read {path}: {e}")
    except json.JSONDecodeError as e:
        raise click.ClickException(f"{path} is not valid JSON: {e}")


@click.group()
@click.option("--server", default=None, help="Service URL; default runs in-process.")
@click.option("--seed", type=int, default=0, show_default=True, help="Master seed.")
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="JSON config file.")
@click.option("--out", "out_path", type=click.Path(), default=None,
              help="Output file or directory.")
@click.option("--jobs", type=int, default=1, show_default=True,
              help="Concurrent workers.")
@click.pass_context
def main(ctx, server, seed, config_path, out_path, jobs):
    """Raw-domain super-resolution data synthesis toolkit."""
    ctx.ensure_object(dict)
    ctx.obj.update(
        server=server, seed=seed, config_path=config_path, out=out_path, jobs=jobs
    )


def _require_out(ctx) -> str:
    out = ctx.obj.get("out")
    if not out:
        raise click.ClickException("--out is required (pass it before the subcommand)")
    return out


@main.command("bin")
@click.option("--raw", "raw_path", required=True, type=click.Path())
@click.option("--sidecar", type=click.Path(), default=None,
              help="JSON sidecar with pattern/black/white levels.")
@click.pass_context
def bin_cmd(ctx, raw_path, sidecar):
    """Bin a high-quality Bayer mosaic into a linear RGB image."""
    payload = {
        "raw_path": raw_path,
        "sidecar": _load_json(sidecar) if sidecar else None,
        "out_path": _require_out(ctx),
    }
    res = _call(ctx, "POST", "/v1/bin", payload)
    click.echo(res["out_path"])


@main.command("degrade")
@click.option("--lin", "lin_path", required=True, type=click.Path())
@click.option("--radius", type=float, default=3.0, show_default=True)
@click.option("--motion-size", type=int, default=7, show_default=True)
@click.option("--motion-steps", type=int, default=10, show_default=True)
@click.option("--sigma1", type=float, default=5e-3, show_default=True)
@click.option("--sigma2", type=float, default=5e-4, show_default=True)
@click.option("--pattern", default="RGGB", show_default=True)
@click.pass_context
def degrade_cmd(ctx, lin_path, radius, motion_size, motion_steps, sigma1, sigma2, pattern):
    """Degrade a linear image into a low-resolution noisy mosaic."""
    payload = {
        "lin_path": lin_path,
        "params": {
            "defocus_radius": radius,
            "motion_max_size": motion_size,
            "motion_steps": motion_steps,
            "sigma1": sigma1,
            "sigma2": sigma2,
            "seed": ctx.obj["seed"],
        },
        "pattern": pattern,
        "out_path": _require_out(ctx),
    }
    res = _call(ctx, "POST", "/v1/degrade", payload)
    click.echo(res["out_path"])


@main.command("demosaic")
@click.option("--raw", "raw_path", required=True, type=click.Path())
@click.option("--pattern", default="RGGB", show_default=True)
@click.option("--method", type=click.Choice(["bilinear", "ahd"]), default="ahd",
              show_default=True)
@click.pass_context
def demosaic_cmd(ctx, raw_path, pattern, method):
    """Demosaic a Bayer mosaic to a full-RGB linear image."""
    payload = {
        "raw_path": raw_path,
        "pattern": pattern,
        "method": method,
        "out_path": _require_out(ctx),
    }
    res = _call(ctx, "POST", "/v1/demosaic", payload)
    click.echo(res["out_path"])


@main.command("isp")
@click.option("--input", "input_path", required=True, type=click.Path())
@click.option("--mode", type=click.Choice(["gt", "ref"]), required=True,
              help="gt: render a linear image; ref: demosaic+render+JPEG a mosaic.")
@click.option("--pattern", default="RGGB", show_default=True)
@click.option("--profile", "profile_path", type=click.Path(), default=None,
              help="JSON ISP profile; default profile when omitted.")
@click.pass_context
def isp_cmd(ctx, input_path, mode, pattern, profile_path):
    """Render linear or raw data to a display-referred color image."""
    payload = {
        "input_path": input_path,
        "mode": mode,
        "pattern": pattern,
        "profile": _load_json(profile_path) if profile_path else None,
        "out_path": _require_out(ctx),
    }
    res = _call(ctx, "POST", "/v1/isp", payload)
    click.echo(res["out_path"])


@main.command("dataset")
@click.option("--sources", "sources_dir", required=True, type=click.Path(),
              help="Directory of source images (optional .json sidecars).")
@click.pass_context
def dataset_cmd(ctx, sources_dir):
    """Generate a full (lin, gt, raw, ref) dataset with a manifest."""
    config = _load_json(ctx.obj["config_path"]) if ctx.obj["config_path"] else None
    payload = {
        "sources_dir": sources_dir,
        "config": config,
        "seed": ctx.obj["seed"],
        "out_dir": _require_out(ctx),
        "jobs": ctx.obj["jobs"],
    }
    res = _call(ctx, "POST", "/v1/dataset", payload)
    click.echo(json.dumps(res))


@main.command("patches")
@click.option("--data", "dataset_dir", required=True, type=click.Path())
@click.option("--size", type=int, default=256, show_default=True)
@click.option("--count", type=int, default=8, show_default=True,
              help="Patches per source image.")
@click.pass_context
def patches_cmd(ctx, dataset_dir, size, count):
    """Extract aligned training patch quadruples from a dataset."""
    payload = {
        "dataset_dir": dataset_dir,
        "size": size,
        "count": count,
        "seed": ctx.obj["seed"],
        "out_dir": _require_out(ctx),
    }
    res = _call(ctx, "POST", "/v1/patches", payload)
    click.echo(json.dumps(res))


@main.command("metrics")
@click.argument("a", type=click.Path())
@click.argument("b", type=click.Path())
@click.option("--peak", type=float, default=None,
              help="Dynamic range; default 255 for 8-bit files, 1.0 for 16-bit.")
@click.pass_context
def metrics_cmd(ctx, a, b, peak):
    """Print PSNR/SSIM between two images as a JSON line."""
    payload = {"a_path": a, "b_path": b, "peak": peak}
    res = _call(ctx, "POST", "/v1/metrics", payload)
    click.echo(json.dumps({"a": a, "b": b, "psnr": res["psnr"], "ssim": res["ssim"]}))


@main.command("apply-transform")
@click.option("--image", "image_path", required=True, type=click.Path())
@click.option("--field", "field_path", type=click.Path(), default=None,
              help="HxWx9 .npy pixel-wise transform field.")
@click.option("--matrix", default=None,
              help="9 comma-separated values of a row-major 3x3 global matrix.")
@click.pass_context
def apply_transform_cmd(ctx, image_path, field_path, matrix):
    """Apply a global or pixel-wise 3x3 color transform to a linear image."""
    m = None
    if matrix is not None:
        vals = [float(v) for v in matrix.split(",")]
        if len(vals) != 9:
            raise click.ClickException("--matrix needs 9 comma-separated values")
        m = [vals[0:3], vals[3:6], vals[6:9]]
    payload = {
        "image_path": image_path,
        "field_path": field_path,
        "matrix": m,
        "out_path": _require_out(ctx),
    }
    res = _call(ctx, "POST", "/v1/apply-transform", payload)
    click.echo(res["out_path"])


@main.command("serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve_cmd(host, port):
    """Run the HTTP service."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=host, port=port)


if __name__ == "__main__":
    sys.exit(main(obj={}))
