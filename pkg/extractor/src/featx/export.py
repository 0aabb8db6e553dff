"""Run one network over an image directory and write a feature container.

Output lands in the featfuse binary format (one float32 row per image,
keyed by filename stem) plus a JSON sidecar `<output>.manifest.json`
recording the network, width, image count, wall-clock seconds, and the
input normalization applied.
"""

from __future__ import annotations

import json
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from featfuse import FeatureMatrix, write_features

from .errors import InputError
from .networks import ExtractorSpec, build_runner, get_spec

IMAGE_EXTENSIONS = (".png", ".jpg", ".jpeg", ".bmp")


@dataclass(frozen=True)
class ExtractionResult:
    features_path: Path
    manifest_path: Path
    network: str
    dim: int
    image_count: int
    seconds: float
    skipped: tuple[str, ...] = ()


def discover_images(input_dir, extensions=IMAGE_EXTENSIONS):
    """Sorted (sample_id, path) pairs; stems must be unique."""
    root = Path(input_dir)
    if not root.is_dir():
        raise InputError(f"input directory not found: {root}")
    pairs = sorted(
        (p.stem, p)
        for p in root.iterdir()
        if p.is_file() and p.suffix.lower() in extensions
    )
    if not pairs:
        raise InputError(f"no images with extensions {extensions} in {root}")
    seen = set()
    for stem, path in pairs:
        if stem in seen:
            raise InputError(f"duplicate sample id {stem!r} in {root}")
        seen.add(stem)
    return pairs


def _load_resized(path: Path, size: tuple[int, int]) -> np.ndarray:
    h, w = size
    with Image.open(path) as img:
        rgb = img.convert("RGB").resize((w, h), Image.BILINEAR)
    return np.asarray(rgb, dtype=np.uint8)


def extract(
    input_dir,
    network: str | ExtractorSpec,
    out_path,
    batch_size: int = 16,
    device: str = "cpu",
    pretrained: bool = True,
    skip_unreadable: bool = False,
    log=sys.stderr,
) -> ExtractionResult:
    spec = network if isinstance(network, ExtractorSpec) else get_spec(network)
    if batch_size < 1:
        raise InputError(f"batch_size must be >= 1, got {batch_size}")
    pairs = discover_images(input_dir)

    start = time.perf_counter()
    runner = build_runner(spec, pretrained=pretrained, device=device)

    ids: list[str] = []
    skipped: list[str] = []
    chunks: list[np.ndarray] = []
    batch_imgs: list[np.ndarray] = []

    def flush():
        if batch_imgs:
            chunks.append(runner(np.stack(batch_imgs)))
            batch_imgs.clear()

    for stem, path in pairs:
        try:
            arr = _load_resized(path, spec.input_size)
        except (OSError, ValueError) as exc:
            if not skip_unreadable:
                raise InputError(f"unreadable image {path}: {exc}") from exc
            skipped.append(stem)
            print(f"featx: skipping unreadable {path}: {exc}", file=log)
            continue
        ids.append(stem)
        batch_imgs.append(arr)
        if len(batch_imgs) == batch_size:
            flush()
    flush()

    if not ids:
        raise InputError(f"no readable images in {input_dir}")
    features = np.concatenate(chunks).astype(np.float32)
    seconds = time.perf_counter() - start

    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    write_features(
        FeatureMatrix(
            data=features, sample_ids=tuple(ids), extractor_name=spec.name
        ),
        out_path,
    )
    manifest_path = out_path.with_name(out_path.name + ".manifest.json")
    manifest_path.write_text(
        json.dumps(
            {
                "network": spec.name,
                "d": spec.expected_dim,
                "image_count": len(ids),
                "seconds": seconds,
                "input_size": list(spec.input_size),
                "normalization": spec.normalization,
                "pretrained": pretrained,
                "skipped": skipped,
            },
            indent=2,
            sort_keys=True,
        )
        + "\n",
        encoding="utf-8",
    )
    return ExtractionResult(
        features_path=out_path,
        manifest_path=manifest_path,
        network=spec.name,
        dim=spec.expected_dim,
        image_count=len(ids),
        seconds=seconds,
        skipped=tuple(skipped),
    )
