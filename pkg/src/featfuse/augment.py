"""Image-space augmentation: reflect, rotate, translate, and resize.

Images are uint8 arrays of shape (H, W, C) with C in {1, 3} and RGB
channel order.  One augmentation is applied per image, in the fixed
order reflection -> rotation about the center -> integer translation,
with exposed pixels filled with 0.  Parameters are drawn per image from
a generator derived from (seed, sample_id), so a dataset pass yields the
same augmented files regardless of processing order.
"""

from __future__ import annotations

import csv
import hashlib
import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image as PILImage

from .errors import ConfigError, DataError, EmptyInputError

SHIFT_LIMIT = 30
ROTATION_LIMIT = 90.0

IMAGE_EXTENSIONS = (".png", ".jpg", ".jpeg", ".bmp")


def _check_image(img) -> np.ndarray:
    a = np.asarray(img)
    if a.ndim == 2:
        a = a[:, :, None]
    if a.ndim != 3 or a.shape[2] not in (1, 3):
        raise DataError(
            f"expected an (H, W, C) image with C in {{1, 3}}, got shape {np.asarray(img).shape}"
        )
    if a.shape[0] < 1 or a.shape[1] < 1:
        raise DataError(f"image dimensions must be positive, got {a.shape[:2]}")
    if a.dtype != np.uint8:
        raise DataError(f"image dtype must be uint8, got {a.dtype}")
    return a


@dataclass(frozen=True)
class AugmentationParams:
    """One draw of the augmentation operator's parameters."""

    shift_x: int
    shift_y: int
    flip_x: bool
    flip_y: bool
    rotation: float

    def __post_init__(self):
        for name in ("shift_x", "shift_y"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or isinstance(v, bool):
                raise ConfigError(f"{name} must be an integer, got {v!r}")
            if abs(v) > SHIFT_LIMIT:
                raise ConfigError(f"{name}={v} outside [-{SHIFT_LIMIT}, {SHIFT_LIMIT}]")
        if not 0.0 <= self.rotation <= ROTATION_LIMIT:
            raise ConfigError(
                f"rotation={self.rotation} outside [0, {ROTATION_LIMIT}]"
            )

    @classmethod
    def identity(cls) -> "AugmentationParams":
        return cls(shift_x=0, shift_y=0, flip_x=False, flip_y=False, rotation=0.0)


def sample_params(rng: np.random.Generator) -> AugmentationParams:
    """Draw shift_x, shift_y, flip_x, flip_y, rotation, in that order."""
    return AugmentationParams(
        shift_x=int(rng.integers(-SHIFT_LIMIT, SHIFT_LIMIT + 1)),
        shift_y=int(rng.integers(-SHIFT_LIMIT, SHIFT_LIMIT + 1)),
        flip_x=bool(rng.random() < 0.5),
        flip_y=bool(rng.random() < 0.5),
        rotation=float(rng.uniform(0.0, ROTATION_LIMIT)),
    )


def rng_for_sample(seed: int, sample_id: str) -> np.random.Generator:
    """Generator keyed by (seed, sample_id); independent of file order."""
    if seed < 0:
        raise ConfigError(f"seed must be non-negative, got {seed}")
    digest = hashlib.sha256(sample_id.encode("utf-8")).digest()
    key = int.from_bytes(digest[:16], "big")
    return np.random.default_rng(np.random.SeedSequence([seed, key]))


def _rotate_right_angle(img: np.ndarray) -> np.ndarray:
    """Exact 90-degree counterclockwise rotation on the same canvas.

    Valid only when H and W share parity, so the half-pixel center lands
    on the source grid; callers fall back to bilinear otherwise.
    """
    h, w = img.shape[:2]
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    r = np.arange(h)[:, None]
    c = np.arange(w)[None, :]
    r_src = np.rint(cy + (c - cx)).astype(np.int64)
    c_src = np.rint(cx - (r - cy)).astype(np.int64)
    r_src, c_src = np.broadcast_arrays(r_src, c_src)
    valid = (r_src >= 0) & (r_src < h) & (c_src >= 0) & (c_src < w)
    out = np.zeros_like(img)
    out[valid] = img[r_src[valid], c_src[valid]]
    return out


def _rotate_bilinear(img: np.ndarray, degrees: float) -> np.ndarray:
    """Counterclockwise rotation about the center, zero fill outside."""
    h, w = img.shape[:2]
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    theta = np.radians(degrees)
    cos_t, sin_t = np.cos(theta), np.sin(theta)
    x = np.arange(w)[None, :] - cx
    y = np.arange(h)[:, None] - cy
    x_src = x * cos_t - y * sin_t + cx
    y_src = x * sin_t + y * cos_t + cy
    x_src, y_src = np.broadcast_arrays(x_src, y_src)

    r0 = np.floor(y_src).astype(np.int64)
    c0 = np.floor(x_src).astype(np.int64)
    fr = y_src - r0
    fc = x_src - c0
    acc = np.zeros(img.shape, dtype=np.float64)
    for dr, wr in ((0, 1.0 - fr), (1, fr)):
        for dc, wc in ((0, 1.0 - fc), (1, fc)):
            rr = r0 + dr
            cc = c0 + dc
            valid = (rr >= 0) & (rr < h) & (cc >= 0) & (cc < w)
            vals = img[rr.clip(0, h - 1), cc.clip(0, w - 1)].astype(np.float64)
            acc += (wr * wc * valid)[:, :, None] * vals
    return np.floor(acc + 0.5).clip(0, 255).astype(np.uint8)


def _shift(img: np.ndarray, shift_x: int, shift_y: int) -> np.ndarray:
    """Translate by whole pixels: positive x moves right, positive y down."""
    h, w = img.shape[:2]
    out = np.zeros_like(img)
    dr0, dr1 = max(0, shift_y), h + min(0, shift_y)
    dc0, dc1 = max(0, shift_x), w + min(0, shift_x)
    if dr1 > dr0 and dc1 > dc0:
        out[dr0:dr1, dc0:dc1] = img[dr0 - shift_y : dr1 - shift_y, dc0 - shift_x : dc1 - shift_x]
    return out


def augment(img, params: AugmentationParams) -> np.ndarray:
    """Apply reflection, then rotation, then translation.

    Identity parameters return a bit-exact copy.  A 90-degree rotation
    of an image whose H and W share parity takes an exact permutation
    path; other angles resample bilinearly with zero fill.
    """
    a = _check_image(img)
    if params.flip_x:
        a = a[:, ::-1]
    if params.flip_y:
        a = a[::-1, :]
    if params.rotation != 0.0:
        h, w = a.shape[:2]
        if params.rotation == 90.0 and (h + w) % 2 == 0:
            a = _rotate_right_angle(np.ascontiguousarray(a))
        else:
            a = _rotate_bilinear(a, params.rotation)
    if params.shift_x or params.shift_y:
        a = _shift(a, params.shift_x, params.shift_y)
    return np.ascontiguousarray(a)


def resize_bilinear(img, out_h: int, out_w: int) -> np.ndarray:
    """Edge-aligned bilinear resize: corner pixels map to corners.

    Source coordinates are dst * (in - 1) / (out - 1) per axis (the
    center when out == 1); channel values round half up.
    """
    a = _check_image(img)
    if out_h < 1 or out_w < 1:
        raise DataError(f"output dimensions must be positive, got {(out_h, out_w)}")
    h, w = a.shape[:2]

    def axis_coords(n_in: int, n_out: int) -> np.ndarray:
        if n_out == 1:
            return np.full(1, (n_in - 1) / 2.0)
        return np.arange(n_out) * ((n_in - 1) / (n_out - 1))

    ys = axis_coords(h, out_h)
    xs = axis_coords(w, out_w)
    r0 = np.floor(ys).astype(np.int64)
    c0 = np.floor(xs).astype(np.int64)
    fr = (ys - r0)[:, None, None]
    fc = (xs - c0)[None, :, None]
    r1 = np.minimum(r0 + 1, h - 1)
    c1 = np.minimum(c0 + 1, w - 1)

    top = a[r0][:, c0].astype(np.float64) * (1 - fc) + a[r0][:, c1] * fc
    bot = a[r1][:, c0].astype(np.float64) * (1 - fc) + a[r1][:, c1] * fc
    out = top * (1 - fr) + bot * fr
    return np.floor(out + 0.5).clip(0, 255).astype(np.uint8)


def load_image(path) -> tuple[str, np.ndarray]:
    """Read one raster file as (sample_id, uint8 array).

    Grayscale stays single-channel; everything else converts to RGB.
    The sample id is the filename stem.
    """
    p = Path(path)
    with PILImage.open(p) as im:
        mode = "L" if im.mode in ("1", "L", "I;16", "I") else "RGB"
        arr = np.asarray(im.convert(mode), dtype=np.uint8)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    return p.stem, arr


def save_image(path, img: np.ndarray) -> None:
    a = _check_image(img)
    pil = PILImage.fromarray(a[:, :, 0] if a.shape[2] == 1 else a)
    pil.save(Path(path), format="PNG")


def stage_augmented_images(
    input_dir,
    output_dir,
    seed: int = 0,
    extensions: tuple[str, ...] = IMAGE_EXTENSIONS,
) -> list[tuple[str, AugmentationParams]]:
    """Augment every image in a directory into a PNG staging directory.

    Files are discovered in sorted name order, but each image's
    parameters depend only on (seed, sample_id), so the output bytes are
    reproducible.  A params table is written alongside the images as
    ``augmentation_params.csv`` with a ``# seed=<seed>`` header line.
    """
    src = Path(input_dir)
    dst = Path(output_dir)
    if not src.is_dir():
        raise DataError(f"input directory not found: {src}")
    files = sorted(
        p for p in src.iterdir() if p.suffix.lower() in extensions and p.is_file()
    )
    if not files:
        raise EmptyInputError(f"no images with extensions {extensions} in {src}")
    seen: dict[str, Path] = {}
    for p in files:
        if p.stem in seen:
            raise DataError(
                f"duplicate sample id {p.stem!r}: {seen[p.stem].name} and {p.name}"
            )
        seen[p.stem] = p
    dst.mkdir(parents=True, exist_ok=True)

    records: list[tuple[str, AugmentationParams]] = []
    for p in files:
        sample_id, arr = load_image(p)
        params = sample_params(rng_for_sample(seed, sample_id))
        save_image(dst / f"{sample_id}.png", augment(arr, params))
        records.append((sample_id, params))

    buf = io.StringIO()
    buf.write(f"# seed={seed}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["sample_id", "shift_x", "shift_y", "flip_x", "flip_y", "rotation"])
    for sample_id, params in records:
        writer.writerow(
            [
                sample_id,
                params.shift_x,
                params.shift_y,
                int(params.flip_x),
                int(params.flip_y),
                repr(params.rotation),
            ]
        )
    (dst / "augmentation_params.csv").write_text(buf.getvalue(), encoding="utf-8")
    return records
