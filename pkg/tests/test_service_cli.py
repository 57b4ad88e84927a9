import json

import numpy as np
import pytest
from click.testing import CliRunner
from fastapi.testclient import TestClient

from conftest import smooth_image
from rawsr import io_utils
from rawsr.cli import main as cli_main
from rawsr.core import BayerPattern, BayerRaw, LinearImage
from rawsr.degrade import DegradationParams, degrade
from rawsr.service import create_app


@pytest.fixture
def client():
    return TestClient(create_app())


def _write_lin(path, seed=1, h=32, w=32, hi=0.6):
    img = LinearImage(smooth_image(seed, h, w, 0.1, hi))
    io_utils.save_linear_png16(path, img)
    return img


def _write_raw(path, seed=2, h=16, w=16):
    raw = BayerRaw(smooth_image(seed, h, w)[..., 0], BayerPattern.RGGB)
    io_utils.save_raw_png16(path, raw)
    return raw


class TestService:
    def test_health(self, client):
        res = client.get("/v1/health")
        assert res.status_code == 200
        body = res.json()
        assert body["status"] == "ok" and body["version"]

    def test_bin(self, client, tmp_path):
        _write_raw(tmp_path / "r.png", h=32, w=32)
        out = tmp_path / "lin.png"
        res = client.post(
            "/v1/bin",
            json={
                "raw_path": str(tmp_path / "r.png"),
                "sidecar": {"pattern": "RGGB"},
                "out_path": str(out),
            },
        )
        assert res.status_code == 200
        assert io_utils.load_linear_png16(out).data.shape == (16, 16, 3)

    def test_bin_rejects_non_bayer(self, client, tmp_path):
        _write_lin(tmp_path / "a.png")
        res = client.post(
            "/v1/bin",
            json={"raw_path": str(tmp_path / "a.png"), "out_path": str(tmp_path / "o.png")},
        )
        assert res.status_code == 400

    def test_degrade_matches_library(self, client, tmp_path):
        _write_lin(tmp_path / "a.png")
        out = tmp_path / "raw.png"
        params = {
            "defocus_radius": 2.0,
            "motion_max_size": 5,
            "motion_steps": 6,
            "sigma1": 1e-3,
            "sigma2": 1e-4,
            "seed": 5,
        }
        res = client.post(
            "/v1/degrade",
            json={
                "lin_path": str(tmp_path / "a.png"),
                "params": params,
                "pattern": "RGGB",
                "out_path": str(out),
            },
        )
        assert res.status_code == 200
        lin = io_utils.load_linear_png16(tmp_path / "a.png")
        expected = degrade(lin, DegradationParams(**params), pattern=BayerPattern.RGGB)
        got = io_utils.load_raw_png16(out, BayerPattern.RGGB)
        np.testing.assert_allclose(got.data, expected.data, atol=1.0 / 65535)

    def test_demosaic(self, client, tmp_path):
        _write_raw(tmp_path / "r.png")
        for method in ("bilinear", "ahd"):
            out = tmp_path / f"{method}.png"
            res = client.post(
                "/v1/demosaic",
                json={
                    "raw_path": str(tmp_path / "r.png"),
                    "pattern": "RGGB",
                    "method": method,
                    "out_path": str(out),
                },
            )
            assert res.status_code == 200
            assert io_utils.load_linear_png16(out).data.shape == (16, 16, 3)

    def test_isp_modes(self, client, tmp_path):
        _write_lin(tmp_path / "a.png")
        _write_raw(tmp_path / "r.png")
        res = client.post(
            "/v1/isp",
            json={
                "input_path": str(tmp_path / "a.png"),
                "mode": "gt",
                "out_path": str(tmp_path / "gt.png"),
            },
        )
        assert res.status_code == 200
        assert io_utils.load_color_png8(tmp_path / "gt.png").data.dtype == np.uint8
        res = client.post(
            "/v1/isp",
            json={
                "input_path": str(tmp_path / "r.png"),
                "mode": "ref",
                "pattern": "RGGB",
                "out_path": str(tmp_path / "ref.jpg"),
            },
        )
        assert res.status_code == 200
        assert (tmp_path / "ref.jpg").read_bytes()[:2] == b"\xff\xd8"

    def test_dataset_and_patches(self, client, tmp_path):
        src = tmp_path / "src"
        src.mkdir()
        for i in range(2):
            _write_lin(src / f"{i}.png", seed=20 + i)
        out = tmp_path / "out"
        res = client.post(
            "/v1/dataset",
            json={
                "sources_dir": str(src),
                "config": {"patch_size": 16, "patches_per_image": 2},
                "seed": 7,
                "out_dir": str(out),
                "jobs": 1,
            },
        )
        assert res.status_code == 200
        body = res.json()
        assert body["num_examples"] == 2 and body["num_failures"] == 0
        res = client.post(
            "/v1/patches",
            json={
                "dataset_dir": str(out),
                "size": 16,
                "count": 2,
                "seed": 7,
                "out_dir": str(tmp_path / "patches"),
            },
        )
        assert res.status_code == 200
        assert res.json()["num_patches"] == 4

    def test_dataset_empty_dir_rejected(self, client, tmp_path):
        empty = tmp_path / "empty"
        empty.mkdir()
        res = client.post(
            "/v1/dataset",
            json={"sources_dir": str(empty), "seed": 0, "out_dir": str(tmp_path / "o")},
        )
        assert res.status_code == 400

    def test_dataset_partial_failure_422(self, client, tmp_path):
        src = tmp_path / "src"
        src.mkdir()
        _write_lin(src / "ok.png", seed=30)
        (src / "zz_bad.png").write_bytes(b"junk")
        res = client.post(
            "/v1/dataset",
            json={"sources_dir": str(src), "seed": 0, "out_dir": str(tmp_path / "o")},
        )
        assert res.status_code == 422
        detail = res.json()["detail"]
        assert len(detail["failures"]) == 1

    def test_metrics_identical_is_inf(self, client, tmp_path):
        _write_lin(tmp_path / "a.png")
        res = client.post(
            "/v1/metrics",
            json={"a_path": str(tmp_path / "a.png"), "b_path": str(tmp_path / "a.png")},
        )
        assert res.status_code == 200
        body = res.json()
        assert body["psnr"] == "inf"
        assert body["ssim"] == pytest.approx(1.0, abs=1e-9)

    def test_apply_transform_matrix(self, client, tmp_path):
        img = _write_lin(tmp_path / "a.png", hi=0.4)
        out = tmp_path / "o.png"
        m = [[0.5, 0.0, 0.0], [0.0, 0.5, 0.0], [0.0, 0.0, 0.5]]
        res = client.post(
            "/v1/apply-transform",
            json={"image_path": str(tmp_path / "a.png"), "matrix": m, "out_path": str(out)},
        )
        assert res.status_code == 200
        got = io_utils.load_linear_png16(out)
        np.testing.assert_allclose(got.data, img.data * 0.5, atol=1.0 / 65535)

    def test_apply_transform_field(self, client, tmp_path):
        img = _write_lin(tmp_path / "a.png", hi=0.4)
        field = np.zeros((img.height, img.width, 9))
        field[..., 0] = field[..., 4] = field[..., 8] = 2.0
        io_utils.save_field_npy(tmp_path / "f.npy", field)
        out = tmp_path / "o.png"
        res = client.post(
            "/v1/apply-transform",
            json={
                "image_path": str(tmp_path / "a.png"),
                "field_path": str(tmp_path / "f.npy"),
                "out_path": str(out),
            },
        )
        assert res.status_code == 200
        got = io_utils.load_linear_png16(out)
        np.testing.assert_allclose(got.data, np.clip(img.data * 2, 0, 1), atol=2.0 / 65535)

    def test_apply_transform_requires_exactly_one(self, client, tmp_path):
        _write_lin(tmp_path / "a.png")
        res = client.post(
            "/v1/apply-transform",
            json={"image_path": str(tmp_path / "a.png"), "out_path": str(tmp_path / "o.png")},
        )
        assert res.status_code == 400


class TestCli:
    def _run(self, args):
        return CliRunner().invoke(cli_main, args, obj={})

    def test_degrade_and_demosaic(self, tmp_path):
        _write_lin(tmp_path / "a.png")
        raw = tmp_path / "raw.png"
        res = self._run(
            ["--seed", "5", "--out", str(raw), "degrade", "--lin", str(tmp_path / "a.png"),
             "--radius", "2.0", "--motion-size", "5", "--motion-steps", "6"]
        )
        assert res.exit_code == 0, res.output
        assert raw.exists()
        out = tmp_path / "demo.png"
        res = self._run(["--out", str(out), "demosaic", "--raw", str(raw)])
        assert res.exit_code == 0, res.output
        assert io_utils.load_linear_png16(out).data.shape == (16, 16, 3)

    def test_metrics_json_line(self, tmp_path):
        _write_lin(tmp_path / "a.png")
        res = self._run(["metrics", str(tmp_path / "a.png"), str(tmp_path / "a.png")])
        assert res.exit_code == 0, res.output
        line = json.loads(res.output.strip())
        assert line["psnr"] == "inf" and line["ssim"] == pytest.approx(1.0, abs=1e-9)
        assert line["a"] == str(tmp_path / "a.png")

    def test_dataset_cli(self, tmp_path):
        src = tmp_path / "src"
        src.mkdir()
        for i in range(2):
            _write_lin(src / f"{i}.png", seed=40 + i)
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"patch_size": 16, "patches_per_image": 2}))
        out = tmp_path / "out"
        res = self._run(
            ["--seed", "7", "--config", str(cfg), "--out", str(out),
             "dataset", "--sources", str(src)]
        )
        assert res.exit_code == 0, res.output
        body = json.loads(res.output.strip())
        assert body["num_examples"] == 2
        assert (out / "manifest.json").exists()

    def test_missing_config_fails_nonzero(self, tmp_path):
        src = tmp_path / "src"
        src.mkdir()
        res = self._run(
            ["--config", str(tmp_path / "nope.json"), "--out", str(tmp_path / "o"),
             "dataset", "--sources", str(src)]
        )
        assert res.exit_code != 0

    def test_missing_out_fails_nonzero(self, tmp_path):
        _write_lin(tmp_path / "a.png")
        res = self._run(["demosaic", "--raw", str(tmp_path / "a.png")])
        assert res.exit_code != 0

    def test_apply_transform_matrix(self, tmp_path):
        img = _write_lin(tmp_path / "a.png", hi=0.4)
        out = tmp_path / "o.png"
        res = self._run(
            ["--out", str(out), "apply-transform", "--image", str(tmp_path / "a.png"),
             "--matrix", "0.5,0,0,0,0.5,0,0,0,0.5"]
        )
        assert res.exit_code == 0, res.output
        got = io_utils.load_linear_png16(out)
        np.testing.assert_allclose(got.data, img.data * 0.5, atol=1.0 / 65535)

    def test_bad_matrix_length(self, tmp_path):
        _write_lin(tmp_path / "a.png")
        res = self._run(
            ["--out", str(tmp_path / "o.png"), "apply-transform",
             "--image", str(tmp_path / "a.png"), "--matrix", "1,2,3"]
        )
        assert res.exit_code != 0
