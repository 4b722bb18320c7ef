"""Sample-matrix and image containers, file formats, and patch plumbing.

Matrices are float64 numpy arrays of shape (M, N) whose columns are samples.
Images are float64 arrays of shape (H, W) with pixels in [0, 1]. Two matrix
formats are supported: a small binary container (``.usm``) and plain CSV
(``.csv``), plus 8-bit PGM for images.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

USM_MAGIC = b"USM1"

__all__ = [
    "FormatError",
    "PatchGeometry",
    "PatchSet",
    "read_matrix",
    "write_matrix",
    "read_pgm",
    "write_pgm",
    "extract_patches",
    "reassemble",
    "psnr",
]


class FormatError(ValueError):
    """Raised when a file does not conform to its declared format."""


def _check_finite(x: np.ndarray, path: Path) -> None:
    if np.isfinite(x).all():
        return
    i, j = np.argwhere(~np.isfinite(x))[0]
    raise FormatError(f"{path}: non-finite value at row {i}, col {j}")


def _as_matrix(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] == 0 or x.shape[1] == 0:
        raise ValueError(f"expected a non-empty 2-d matrix, got shape {x.shape}")
    return x


def read_matrix(path) -> np.ndarray:
    """Read a sample matrix from ``path``; format chosen by extension."""
    path = Path(path)
    ext = path.suffix.lower()
    if ext == ".usm":
        return _read_usm(path)
    if ext == ".csv":
        return _read_csv(path)
    raise FormatError(f"{path}: unknown matrix extension {ext!r} (use .usm or .csv)")


def write_matrix(path, x) -> None:
    """Write a sample matrix to ``path``; format chosen by extension."""
    path = Path(path)
    x = _as_matrix(x)
    _check_finite(x, path)
    ext = path.suffix.lower()
    if ext == ".usm":
        _write_usm(path, x)
    elif ext == ".csv":
        _write_csv(path, x)
    else:
        raise FormatError(f"{path}: unknown matrix extension {ext!r} (use .usm or .csv)")


def _read_usm(path: Path) -> np.ndarray:
    raw = path.read_bytes()
    if len(raw) < 12:
        raise FormatError(f"{path}: truncated header ({len(raw)} bytes)")
    if raw[:4] != USM_MAGIC:
        raise FormatError(f"{path}: bad magic {raw[:4]!r}")
    rows, cols = struct.unpack("<II", raw[4:12])
    if rows == 0 or cols == 0:
        raise FormatError(f"{path}: empty matrix ({rows}x{cols})")
    need = rows * cols * 8
    payload = raw[12:]
    if len(payload) != need:
        raise FormatError(
            f"{path}: payload is {len(payload)} bytes, expected {need} for {rows}x{cols}"
        )
    x = np.frombuffer(payload, dtype="<f8").reshape((rows, cols), order="F")
    x = np.ascontiguousarray(x)
    _check_finite(x, path)
    return x


def _write_usm(path: Path, x: np.ndarray) -> None:
    rows, cols = x.shape
    if rows >= 2**32 or cols >= 2**32:
        raise FormatError(f"{path}: shape {x.shape} exceeds u32 dims")
    with open(path, "wb") as fh:
        fh.write(USM_MAGIC)
        fh.write(struct.pack("<II", rows, cols))
        fh.write(x.astype("<f8").tobytes(order="F"))


def _read_csv(path: Path) -> np.ndarray:
    rows: list[list[float]] = []
    with open(path, "r", encoding="ascii") as fh:
        lines = fh.read().split("\n")
    while lines and lines[-1] == "":
        lines.pop()
    for i, line in enumerate(lines, start=1):
        fields = line.split(",")
        vals = []
        for j, field in enumerate(fields, start=1):
            try:
                vals.append(float(field))
            except ValueError:
                raise FormatError(
                    f"{path}: line {i}, field {j}: not a number: {field.strip()!r}"
                ) from None
        if rows and len(vals) != len(rows[0]):
            raise FormatError(
                f"{path}: line {i} has {len(vals)} fields, expected {len(rows[0])}"
            )
        rows.append(vals)
    if not rows or not rows[0]:
        raise FormatError(f"{path}: empty matrix")
    x = np.array(rows, dtype=np.float64)
    _check_finite(x, path)
    return x


def _write_csv(path: Path, x: np.ndarray) -> None:
    with open(path, "w", encoding="ascii") as fh:
        for row in x:
            fh.write(",".join(f"{v:.17g}" for v in row))
            fh.write("\n")


def _pgm_tokens(raw: bytes, path: Path):
    """Yield whitespace-separated header tokens, skipping '#' comments."""
    i = 0
    n = len(raw)
    while i < n:
        c = raw[i : i + 1]
        if c in b" \t\r\n":
            i += 1
        elif c == b"#":
            while i < n and raw[i : i + 1] != b"\n":
                i += 1
        else:
            j = i
            while j < n and raw[j : j + 1] not in b" \t\r\n":
                j += 1
            yield raw[i:j], j
            i = j
    raise FormatError(f"{path}: truncated header")


def read_pgm(path) -> np.ndarray:
    """Read an 8-bit PGM (P5 or P2, maxval 255) as an image in [0, 1]."""
    path = Path(path)
    raw = path.read_bytes()
    toks = _pgm_tokens(raw, path)
    magic, _ = next(toks)
    if magic not in (b"P5", b"P2"):
        raise FormatError(f"{path}: not a PGM file (magic {magic!r})")
    dims = []
    for name in ("width", "height", "maxval"):
        tok, end = next(toks)
        try:
            dims.append(int(tok))
        except ValueError:
            raise FormatError(f"{path}: bad {name} token {tok!r}") from None
    width, height, maxval = dims
    if width <= 0 or height <= 0:
        raise FormatError(f"{path}: bad dimensions {width}x{height}")
    if maxval != 255:
        raise FormatError(f"{path}: unsupported maxval {maxval} (only 255)")
    if magic == b"P5":
        start = end + 1  # single whitespace byte after maxval
        pix = raw[start : start + width * height]
        if len(pix) != width * height:
            raise FormatError(
                f"{path}: raster has {len(pix)} bytes, expected {width * height}"
            )
        img = np.frombuffer(pix, dtype=np.uint8).reshape((height, width))
    else:
        vals = []
        try:
            while len(vals) < width * height:
                tok, end = next(toks)
                vals.append(int(tok))
        except FormatError:
            raise FormatError(
                f"{path}: raster has {len(vals)} values, expected {width * height}"
            ) from None
        except ValueError:
            raise FormatError(f"{path}: bad raster token") from None
        img = np.array(vals, dtype=np.int64).reshape((height, width))
        if img.min() < 0 or img.max() > 255:
            raise FormatError(f"{path}: raster value out of range 0..255")
    return np.clip(img / 255.0, 0.0, 1.0)


def write_pgm(path, img) -> None:
    """Write an image as binary PGM (P5, maxval 255), clamping to [0, 1]."""
    path = Path(path)
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 2 or img.size == 0:
        raise ValueError(f"expected a non-empty 2-d image, got shape {img.shape}")
    if not np.isfinite(img).all():
        raise ValueError("image has non-finite pixels")
    h, w = img.shape
    quant = np.clip(np.round(np.clip(img, 0.0, 1.0) * 255.0), 0, 255).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(quant.tobytes())


@dataclass
class PatchGeometry:
    """Bookkeeping needed to put extracted patches back into an image.

    Attributes:
        image_shape: (H, W) of the source image.
        width: patch side length.
        stride: step between consecutive top-left corners.
        dc: per-patch means that were subtracted, or None.
    """

    image_shape: tuple[int, int]
    width: int
    stride: int
    dc: np.ndarray | None = None

    def positions(self) -> tuple[np.ndarray, np.ndarray]:
        h, w = self.image_shape
        return (
            np.arange(0, h - self.width + 1, self.stride),
            np.arange(0, w - self.width + 1, self.stride),
        )


@dataclass
class PatchSet:
    """Vectorized patches (one column per patch) plus their geometry."""

    patches: np.ndarray
    geometry: PatchGeometry


def extract_patches(img, width: int, stride: int = 1, remove_dc: bool = True) -> PatchSet:
    """Slide a width x width window over ``img`` and vectorize each patch.

    Only positions where the window fits entirely are used; the window moves
    in steps of ``stride``, scanning rows first. Each patch is flattened in
    row-major order into one column. With ``remove_dc`` the patch mean is
    subtracted and stored in the geometry so reassemble can add it back.
    """
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 2:
        raise ValueError(f"expected a 2-d image, got shape {img.shape}")
    h, w = img.shape
    if width < 1 or width > min(h, w):
        raise ValueError(f"patch width {width} does not fit image {img.shape}")
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    ii = np.arange(0, h - width + 1, stride)
    jj = np.arange(0, w - width + 1, stride)
    views = np.lib.stride_tricks.sliding_window_view(img, (width, width))
    block = views[np.ix_(ii, jj)]  # (n_i, n_j, width, width)
    patches = block.reshape(len(ii) * len(jj), width * width).T.copy()
    geom = PatchGeometry(image_shape=(h, w), width=width, stride=stride)
    if remove_dc:
        dc = patches.mean(axis=0)
        patches -= dc
        geom.dc = dc
    return PatchSet(patches=patches, geometry=geom)


def reassemble(patches: np.ndarray, geometry: PatchGeometry) -> np.ndarray:
    """Average overlapping patches back into an image.

    Per-pixel sums are accumulated unclamped and divided by coverage counts;
    the finished image is then clamped to [0, 1]. Pixels no patch covers
    stay 0.
    """
    h, w = geometry.image_shape
    width = geometry.width
    patches = np.asarray(patches, dtype=np.float64)
    ii, jj = geometry.positions()
    if patches.shape != (width * width, len(ii) * len(jj)):
        raise ValueError(
            f"patch matrix shape {patches.shape} does not match geometry "
            f"({width * width} x {len(ii) * len(jj)})"
        )
    if geometry.dc is not None:
        patches = patches + geometry.dc
    acc = np.zeros((h, w))
    cnt = np.zeros((h, w))
    k = 0
    for i in ii:
        row = patches[:, k : k + len(jj)].T.reshape(len(jj), width, width)
        for t, j in enumerate(jj):
            acc[i : i + width, j : j + width] += row[t]
            cnt[i : i + width, j : j + width] += 1.0
        k += len(jj)
    out = np.divide(acc, cnt, out=np.zeros_like(acc), where=cnt > 0)
    return np.clip(out, 0.0, 1.0)


def psnr(a, b) -> float:
    """PSNR in dB between two same-shape arrays on a unit signal range.

    Returns the 999 dB sentinel when the arrays are identical.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return 999.0
    return min(10.0 * np.log10(1.0 / mse), 999.0)
