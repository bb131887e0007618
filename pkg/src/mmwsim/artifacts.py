"""File artifacts: RDM CSV, RDM images (PGM + PNG), point-cloud CSV and
run summaries.

Every artifact carries the run seed and the config hash so outputs can
be traced back to the exact configuration that produced them.  CSV files
use CRLF line endings and quote fields only when needed (RFC 4180);
leading lines starting with '#' are metadata comments.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np
from PIL import Image
from PIL.PngImagePlugin import PngInfo

from .dsp import PointCloud, Rdm


class ArtifactError(OSError):
    pass


def _meta_line(seed: int, config_hash: str) -> str:
    return f"# seed={seed} config={config_hash}"


def _write_text(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8", newline="")
    except OSError as exc:
        raise ArtifactError(f"cannot write {path}: {exc}") from exc


def write_rdm_csv(rdm: Rdm, path, seed: int, config_hash: str) -> None:
    """RDM magnitudes in dB; one row per range bin, one column per
    Doppler bin, with the physical axes in the header row/column."""
    buf = io.StringIO()
    buf.write(_meta_line(seed, config_hash) + "\r\n")
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(["range_m"] + [f"v_{v:+.4f}" for v in rdm.velocity_axis])
    for i, r in enumerate(rdm.range_axis):
        writer.writerow([f"{r:.4f}"] + [f"{x:.4f}" for x in rdm.magnitude[i]])
    _write_text(Path(path), buf.getvalue())


def write_point_cloud_csv(cloud: PointCloud, path, seed: int, config_hash: str) -> None:
    buf = io.StringIO()
    buf.write(_meta_line(seed, config_hash) + "\r\n")
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(["x", "y", "z", "v", "intensity"])
    for x, y, z, v, inten in cloud.points:
        writer.writerow([f"{x:.4f}", f"{y:.4f}", f"{z:.4f}", f"{v:.4f}", f"{inten:.2f}"])
    _write_text(Path(path), buf.getvalue())


def rdm_to_image_array(rdm: Rdm, size: int = 451,
                       dynamic_range_db: float = 60.0) -> np.ndarray:
    """8-bit grayscale image of the RDM: range along x, velocity along y
    (positive velocities up), clipped to the top dynamic_range_db below
    the peak and min-max scaled to 0..255.  A constant map maps to 128."""
    mag = rdm.magnitude
    peak = float(mag.max())
    clipped = np.clip(mag, peak - dynamic_range_db, peak)
    lo, hi = float(clipped.min()), float(clipped.max())
    if hi - lo < 1e-12:
        img = np.full(mag.shape, 128, dtype=np.uint8)
    else:
        img = np.round((clipped - lo) / (hi - lo) * 255.0).astype(np.uint8)
    # (K_r, K_d) -> rows = velocity (descending, so positive up), cols = range
    img = img.T[::-1, :]
    if img.shape != (size, size):
        pil = Image.fromarray(img, mode="L").resize((size, size), Image.BILINEAR)
        img = np.asarray(pil)
    return img


def write_pgm(img: np.ndarray, path, seed: int, config_hash: str) -> None:
    """Binary (P5) PGM with the provenance comment in the header."""
    h, w = img.shape
    header = f"P5\n{_meta_line(seed, config_hash)}\n{w} {h}\n255\n".encode("ascii")
    try:
        p = Path(path)
        p.parent.mkdir(parents=True, exist_ok=True)
        with open(p, "wb") as fh:
            fh.write(header)
            fh.write(np.ascontiguousarray(img, dtype=np.uint8).tobytes())
    except OSError as exc:
        raise ArtifactError(f"cannot write {path}: {exc}") from exc


def read_pgm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        data = fh.read()
    if not data.startswith(b"P5"):
        raise ArtifactError(f"{path}: not a binary PGM")
    fields = []
    pos = 2
    while len(fields) < 3:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            pos = data.index(b"\n", pos) + 1
            continue
        end = pos
        while end < len(data) and not data[end:end + 1].isspace():
            end += 1
        fields.append(int(data[pos:end]))
        pos = end
    pos += 1  # single whitespace after maxval
    w, h, _maxval = fields
    return np.frombuffer(data[pos:pos + w * h], dtype=np.uint8).reshape(h, w)


def write_png(img: np.ndarray, path, seed: int, config_hash: str) -> None:
    try:
        p = Path(path)
        p.parent.mkdir(parents=True, exist_ok=True)
        pil = Image.fromarray(np.ascontiguousarray(img, dtype=np.uint8), mode="L")
        info = PngInfo()
        info.add_text("provenance", _meta_line(seed, config_hash)[2:])
        pil.save(p, format="PNG", pnginfo=info)
    except OSError as exc:
        raise ArtifactError(f"cannot write {path}: {exc}") from exc


def export_rdm_image(rdm: Rdm, base_path, seed: int, config_hash: str,
                     size: int = 451, dynamic_range_db: float = 60.0) -> dict:
    """Write <base>.pgm and <base>.png; returns the written paths."""
    img = rdm_to_image_array(rdm, size, dynamic_range_db)
    base = Path(base_path)
    pgm = base.with_suffix(".pgm")
    png = base.with_suffix(".png")
    write_pgm(img, pgm, seed, config_hash)
    write_png(img, png, seed, config_hash)
    return {"pgm": str(pgm), "png": str(png)}


def write_json(obj, path, seed: int, config_hash: str) -> None:
    payload = {"seed": seed, "config": config_hash, **obj}
    _write_text(Path(path), json.dumps(payload, indent=2, sort_keys=True) + "\n")
