"""File formats: field CSV, PGM images/masks, results JSON, domain configs.

Formats are deliberately plain so artifacts stay diff-friendly and
round-trip exactly:

* field CSV: header line ``nx,ny,h``, a line with their values, then one
  value per line in row-major grid order, ``nan`` outside the domain.
  Floats are written with ``repr`` so reading reproduces the exact doubles.
* PGM: P2 (ASCII) written; P2 and P5 read.  For masks, nonzero = in-domain.
* results JSON: sorted keys, fixed separators: byte-identical for
  identical runs.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from . import grid as _grid
from .grid import GridDomain, ScalarField


def write_field_csv(path: str | Path, f: ScalarField) -> None:
    domain = f.domain
    ny, nx = domain.shape
    values = f.to_grid().ravel()
    lines = ["nx,ny,h", f"{nx},{ny},{f.domain.h!r}"]
    lines.extend("nan" if np.isnan(v) else repr(float(v)) for v in values)
    Path(path).write_text("\n".join(lines) + "\n")


def read_field_csv(path: str | Path, domain: GridDomain | None = None) -> ScalarField:
    """Read a field CSV; reconstructs the domain from the nan pattern unless
    one is supplied (then shapes and spacing must match)."""
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0].strip() != "nx,ny,h":
        raise ValueError(f"{path}: expected 'nx,ny,h' header")
    nx_s, ny_s, h_s = lines[1].split(",")
    nx, ny, h = int(nx_s), int(ny_s), float(h_s)
    data = np.array([float(s) for s in lines[2:]], dtype=float)
    if data.size != nx * ny:
        raise ValueError(f"{path}: expected {nx * ny} values, found {data.size}")
    grid_vals = data.reshape(ny, nx)
    mask = ~np.isnan(grid_vals)
    if domain is None:
        domain = GridDomain(mask, h)
    else:
        if domain.shape != (ny, nx) or domain.h != h:
            raise ValueError(f"{path}: grid does not match the given domain")
        if not np.array_equal(mask, domain.mask):
            raise ValueError(f"{path}: nan pattern does not match the domain mask")
    return ScalarField(domain, grid_vals[domain.cell_rows, domain.cell_cols])


def write_pgm(path: str | Path, image: np.ndarray) -> None:
    """Write a 2D uint8 array as ASCII PGM (P2)."""
    image = np.asarray(image)
    if image.ndim != 2:
        raise ValueError("PGM image must be 2D")
    if image.dtype != np.uint8:
        if image.min() < 0 or image.max() > 255:
            raise ValueError("PGM values must be in [0, 255]")
        image = image.astype(np.uint8)
    ny, nx = image.shape
    rows = [" ".join(str(int(v)) for v in row) for row in image]
    Path(path).write_text(f"P2\n{nx} {ny}\n255\n" + "\n".join(rows) + "\n")


def _pgm_tokens(raw: bytes):
    """Header tokens of a PGM, skipping '#' comments; yields (token, end_pos)."""
    i = 0
    n = len(raw)
    while i < n:
        c = raw[i:i + 1]
        if c.isspace():
            i += 1
        elif c == b"#":
            while i < n and raw[i:i + 1] not in (b"\n", b"\r"):
                i += 1
        else:
            j = i
            while j < n and not raw[j:j + 1].isspace() and raw[j:j + 1] != b"#":
                j += 1
            yield raw[i:j], j
            i = j


def read_pgm(path: str | Path) -> np.ndarray:
    """Read a P2 or P5 PGM into a 2D integer array."""
    raw = Path(path).read_bytes()
    tokens = _pgm_tokens(raw)
    try:
        magic, _ = next(tokens)
        (w_tok, _), (h_tok, _), (max_tok, end) = next(tokens), next(tokens), next(tokens)
    except StopIteration:
        raise ValueError(f"{path}: truncated PGM header") from None
    if magic not in (b"P2", b"P5"):
        raise ValueError(f"{path}: not a PGM (P2/P5) file")
    nx, ny, maxval = int(w_tok), int(h_tok), int(max_tok)
    if nx <= 0 or ny <= 0 or maxval <= 0:
        raise ValueError(f"{path}: invalid PGM dimensions")
    if magic == b"P2":
        values = [int(t) for t, _ in _pgm_tokens(raw[end:])]
        data = np.array(values, dtype=np.int64)
    else:
        # P5: exactly one whitespace byte after maxval, then binary samples
        body = raw[end + 1:]
        dtype = np.dtype(">u2") if maxval > 255 else np.uint8
        data = np.frombuffer(body, dtype=dtype, count=nx * ny).astype(np.int64)
    if data.size != nx * ny:
        raise ValueError(f"{path}: expected {nx * ny} samples, found {data.size}")
    return data.reshape(ny, nx)


def heatmap_image(f: ScalarField) -> np.ndarray:
    """Field values linearly mapped to 0..255; out-of-domain cells map to 0,
    a constant in-domain field maps to 255."""
    grid_vals = f.to_grid()
    out = np.zeros(grid_vals.shape, dtype=np.uint8)
    lo, hi = f.values.min(), f.values.max()
    if hi > lo:
        scaled = np.floor((f.values - lo) / (hi - lo) * 255.0 + 0.5)
    else:
        scaled = np.full_like(f.values, 255.0)
    out[f.domain.cell_rows, f.domain.cell_cols] = scaled.astype(np.uint8)
    return out


def _json_default(obj):
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    raise TypeError(f"not JSON serializable: {type(obj)}")


def write_results_json(path: str | Path, results: dict) -> None:
    Path(path).write_text(
        json.dumps(results, sort_keys=True, indent=2, allow_nan=False,
                   default=_json_default) + "\n"
    )


def domain_from_config(cfg: dict, base_dir: str | Path = ".") -> GridDomain:
    """Build a domain from the JSON config schema.

    ``{"shape": "rectangle"|"ellipse"|"mask_file", "nx", "ny", "h",
    "semi_axes"?, "mask_path"?}``
    """
    shape = cfg.get("shape")
    if shape == "rectangle":
        return _grid.make_rectangle(int(cfg["nx"]), int(cfg["ny"]), float(cfg["h"]))
    if shape == "ellipse":
        a, b = cfg["semi_axes"]
        return _grid.make_ellipse(
            int(cfg["nx"]), int(cfg["ny"]), float(cfg["h"]), (float(a), float(b))
        )
    if shape == "mask_file":
        mask = read_pgm(Path(base_dir) / cfg["mask_path"]) != 0
        return _grid.from_mask(mask, float(cfg["h"]))
    raise ValueError(f"unknown domain shape: {shape!r}")
