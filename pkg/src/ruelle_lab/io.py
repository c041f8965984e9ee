"""File output helpers: JSON, CSV rows, JSONL and binary PPM images."""
from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

# verdict -> RGB for scan heatmaps
VERDICT_COLORS = {
    "condition-1": (46, 139, 87),
    "condition-2": (65, 105, 225),
    "inconclusive": (200, 200, 200),
    "degenerate": (178, 34, 34),
    "error": (0, 0, 0),
}


def write_json(obj, path: str | Path) -> None:
    Path(path).write_text(json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n")


def write_jsonl(records: Iterable[dict], path: str | Path) -> None:
    with open(path, "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True, allow_nan=False) + "\n")


def _cell(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_rows_csv(rows: Sequence[dict], columns: Sequence[str], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_cell(row.get(c, "")) for c in columns])


def write_ppm(path: str | Path, rgb: np.ndarray, comment: str | None = None) -> None:
    """Binary P6 image from an ``(h, w, 3)`` uint8 array."""
    rgb = np.ascontiguousarray(rgb, dtype=np.uint8)
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise ValueError("expected an (h, w, 3) array")
    h, w, _ = rgb.shape
    header = b"P6\n"
    if comment:
        for line in comment.splitlines():
            header += b"# " + line.encode("ascii", "replace") + b"\n"
    header += f"{w} {h}\n255\n".encode()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(rgb.tobytes())


def read_ppm(path: str | Path) -> np.ndarray:
    data = Path(path).read_bytes()
    tokens: list[bytes] = []
    pos = 0
    while len(tokens) < 4:
        while data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            pos = data.index(b"\n", pos) + 1
            continue
        end = pos
        while not data[end:end + 1].isspace():
            end += 1
        tokens.append(data[pos:end])
        pos = end
    if tokens[0] != b"P6":
        raise ValueError("not a binary PPM")
    w, h = int(tokens[1]), int(tokens[2])
    pos += 1
    return np.frombuffer(data[pos:pos + w * h * 3], dtype=np.uint8).reshape(h, w, 3)


def verdict_heatmap(verdicts: Sequence[str], res: int, scale: int = 1) -> np.ndarray:
    """Row-major verdicts to an image with the imaginary axis pointing up."""
    img = np.zeros((res, res, 3), dtype=np.uint8)
    for k, v in enumerate(verdicts):
        iy, ix = divmod(k, res)
        img[res - 1 - iy, ix] = VERDICT_COLORS.get(v, VERDICT_COLORS["error"])
    if scale > 1:
        img = img.repeat(scale, axis=0).repeat(scale, axis=1)
    return img


def heatmap_legend() -> str:
    return "colors: " + ", ".join(f"{k}={r},{g},{b}" for k, (r, g, b) in VERDICT_COLORS.items())
