"""Command-line front end.

Every subcommand is a thin client of the HTTP service: it collects local
files and flags into a request, posts it (in-process by default, or to a
remote server via --server / QUADKIT_SERVER), and writes the canonical
text or bytes from the response back to disk or standard output.

Exit codes: 0 success, 2 usage error, 3 data error.
"""

from __future__ import annotations

import base64
import os
from pathlib import Path

import click

from .config import Config, load_config
from .errors import ConfigError


class DataError(click.ClickException):
    """Domain failure (bad file contents, unmatched stems, bad geometry)."""

    exit_code = 3


class ServiceClient:
    """POST JSON to the service, in-process unless a server URL is given."""

    def __init__(self, server: str | None):
        if server:
            import httpx

            self._client = httpx.Client(base_url=server, timeout=120.0)
        else:
            import warnings

            with warnings.catch_warnings():
                # The test-client import warns about its transport pairing;
                # that is framework noise, not a user-facing diagnostic.
                warnings.simplefilter("ignore")
                from fastapi.testclient import TestClient

            from .service import app

            self._client = TestClient(app)

    def post(self, path: str, payload: dict) -> dict:
        try:
            resp = self._client.post(path, json=payload)
        except Exception as exc:  # connection refused, timeouts, ...
            raise DataError(f"service request failed: {exc}") from exc
        if resp.status_code == 422:
            raise click.UsageError(f"invalid request: {resp.text}")
        if resp.status_code != 200:
            try:
                body = resp.json()
                message = f"{body['error']}: {body['detail']}"
            except Exception:
                message = f"HTTP {resp.status_code}: {resp.text}"
            raise DataError(message)
        return resp.json()


def _atomic_write_bytes(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def _atomic_write_text(path: Path, text: str) -> None:
    _atomic_write_bytes(path, text.encode("utf-8"))


def _load_config_path(path: str | None) -> Config:
    if path is None:
        return Config()
    try:
        return load_config(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise DataError(f"cannot read config: {exc}") from exc
    except ConfigError as exc:
        raise DataError(str(exc)) from exc


def _parse_corners(text: str, flag: str) -> list[float]:
    parts = [p for p in text.replace(" ", "").split(",") if p]
    if len(parts) != 8:
        raise click.BadParameter(f"expected 8 comma-separated coordinates, got {len(parts)}", param_hint=flag)
    try:
        return [float(p) for p in parts]
    except ValueError as exc:
        raise click.BadParameter(str(exc), param_hint=flag)


def _parse_taus(text: str) -> list[float]:
    try:
        return [float(p) for p in text.split(",") if p.strip()]
    except ValueError as exc:
        raise click.BadParameter(str(exc), param_hint="--iou")


def _levels_payload(cfg: Config) -> list[dict]:
    return [
        {"level": s.level, "lo": s.lo, "hi": None if s.hi == float("inf") else s.hi} for s in cfg.levels
    ]


@click.group()
@click.option("--server", envvar="QUADKIT_SERVER", default=None, help="Remote service URL (default: in-process).")
@click.pass_context
def main(ctx, server):
    """Quadrilateral detection toolkit."""
    ctx.obj = server


@main.command("eval")
@click.option("--gt-dir", required=True, type=click.Path(), help="Directory of gt_<stem>.txt files.")
@click.option("--det-dir", required=True, type=click.Path(), help="Directory of <stem>.txt detection files.")
@click.option("--iou", "taus", default=None, help="Comma-separated IoU thresholds (default from config).")
@click.option("--config", "config_path", default=None, type=click.Path(), help="Config file.")
@click.pass_obj
def cmd_eval(server, gt_dir, det_dir, taus, config_path):
    """Evaluate detections against ground truth; prints one row per threshold."""
    cfg = _load_config_path(config_path)
    gt_path, det_path = Path(gt_dir), Path(det_dir)
    if not gt_path.is_dir():
        raise DataError(f"ground-truth directory not found: {gt_path}")
    if not det_path.is_dir():
        raise DataError(f"detection directory not found: {det_path}")
    gt_files = {p.name[3:-4]: p.read_text(encoding="utf-8") for p in sorted(gt_path.glob("gt_*.txt"))}
    det_files = {p.name[:-4]: p.read_text(encoding="utf-8") for p in sorted(det_path.glob("*.txt"))}
    payload = {
        "gt_files": gt_files,
        "det_files": det_files,
        "taus": _parse_taus(taus) if taus else list(cfg.eval_taus),
    }
    resp = ServiceClient(server).post("/v1/evaluate", payload)
    click.echo(resp["report"], nl=False)


@main.command("pnms")
@click.option("--in", "in_file", required=True, type=click.Path(), help="Input detection file.")
@click.option("--out", "out_file", required=True, type=click.Path(), help="Output detection file.")
@click.option("--threshold", default=None, type=float, help="Suppression IoU threshold (default from config).")
@click.option("--config", "config_path", default=None, type=click.Path(), help="Config file.")
@click.pass_obj
def cmd_pnms(server, in_file, out_file, threshold, config_path):
    """Suppress redundant detections by polygon IoU."""
    cfg = _load_config_path(config_path)
    try:
        file_text = Path(in_file).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read input: {exc}") from exc
    payload = {"file_text": file_text, "threshold": threshold if threshold is not None else cfg.pnms_thresh}
    resp = ServiceClient(server).post("/v1/pnms", payload)
    _atomic_write_text(Path(out_file), resp["file_text"])


@main.command("targets")
@click.option("--gt", "gt_file", required=True, type=click.Path(), help="Ground-truth file.")
@click.option("--width", required=True, type=int, help="Image width in pixels.")
@click.option("--height", required=True, type=int, help="Image height in pixels.")
@click.option("--config", "config_path", default=None, type=click.Path(), help="Config file.")
@click.option("--out", "out_file", required=True, type=click.Path(), help="Output target blob.")
@click.pass_obj
def cmd_targets(server, gt_file, width, height, config_path, out_file):
    """Rasterise ground truth into per-level target maps; prints a summary."""
    cfg = _load_config_path(config_path)
    try:
        gt_text = Path(gt_file).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read ground truth: {exc}") from exc
    payload = {
        "gt_text": gt_text,
        "width": width,
        "height": height,
        "shrink_r": cfg.shrink_r,
        "levels": _levels_payload(cfg),
    }
    resp = ServiceClient(server).post("/v1/targets", payload)
    _atomic_write_bytes(Path(out_file), base64.b64decode(resp["blob_b64"]))
    click.echo(resp["summary"], nl=False)


@main.command("grid")
@click.option("--quad", required=True, help='Corners "x1,y1,...,x4,y4" in image pixels.')
@click.option("--stride", default=1, type=int, help="Feature-map stride.")
@click.option("--kernel", default="3x3", help="Grid size HxW.")
@click.pass_obj
def cmd_grid(server, quad, stride, kernel):
    """Print the sampling grid (and, for odd kernels, per-tap offsets)."""
    try:
        h_str, w_str = kernel.lower().split("x")
        kernel_h, kernel_w = int(h_str), int(w_str)
    except ValueError:
        raise click.BadParameter(f"expected HxW, got {kernel!r}", param_hint="--kernel")
    payload = {
        "quad": _parse_corners(quad, "--quad"),
        "stride": stride,
        "kernel_h": kernel_h,
        "kernel_w": kernel_w,
    }
    resp = ServiceClient(server).post("/v1/grid", payload)
    click.echo(resp["text"], nl=False)


@main.command("synth")
@click.option("--seed", required=True, type=int, help="Random seed.")
@click.option("--images", default=1, type=int, help="Number of images.")
@click.option("--noise", default=0.0, type=float, help="Gaussian corner noise sigma (pixels).")
@click.option("--out", "out_dir", required=True, type=click.Path(), help="Output dataset directory.")
@click.pass_obj
def cmd_synth(server, seed, images, noise, out_dir):
    """Write a deterministic synthetic dataset (gt/ and det/ subdirectories)."""
    payload = {"seed": seed, "images": images, "noise": noise}
    resp = ServiceClient(server).post("/v1/synth", payload)
    base = Path(out_dir)
    for rel, text in resp["files"].items():
        _atomic_write_text(base / rel, text)


@main.command("iou")
@click.option("--a", "quad_a", required=True, help='First quad "x1,y1,...,y4".')
@click.option("--b", "quad_b", required=True, help='Second quad "x1,y1,...,y4".')
@click.pass_obj
def cmd_iou(server, quad_a, quad_b):
    """Print the exact polygon IoU of two quads."""
    payload = {"a": _parse_corners(quad_a, "--a"), "b": _parse_corners(quad_b, "--b")}
    resp = ServiceClient(server).post("/v1/iou", payload)
    click.echo(resp["text"], nl=False)


@main.command("serve")
@click.option("--host", default="127.0.0.1", help="Bind address.")
@click.option("--port", default=8000, type=int, help="Port.")
def cmd_serve(host, port):
    """Run the HTTP service."""
    import uvicorn

    from .service import app

    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
