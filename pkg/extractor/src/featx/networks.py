"""The six supported networks and their feature tap points.

Each network is used as a fixed feature extractor: the classification head
is cut off and the layer feeding it becomes the output. The expected
output width is asserted at runtime, so a wrong tap point fails loudly
instead of producing misshapen files.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .errors import InputError, TapPointError

TORCH_MEAN = (0.485, 0.456, 0.406)
TORCH_STD = (0.229, 0.224, 0.225)


@dataclass(frozen=True)
class ExtractorSpec:
    name: str
    input_size: tuple[int, int]
    expected_dim: int
    framework: str  # "torch" or "keras"

    @property
    def normalization(self) -> dict:
        if self.framework == "torch":
            return {"kind": "imagenet_mean_std", "mean": list(TORCH_MEAN),
                    "std": list(TORCH_STD)}
        return {"kind": "scale_shift", "scale": 1 / 127.5, "shift": -1.0}


NETWORKS = {
    "alexnet": ExtractorSpec("alexnet", (224, 224), 4096, "torch"),
    "resnet50": ExtractorSpec("resnet50", (224, 224), 2048, "torch"),
    "googlenet": ExtractorSpec("googlenet", (224, 224), 1024, "torch"),
    "vgg16": ExtractorSpec("vgg16", (224, 224), 4096, "torch"),
    "densenet201": ExtractorSpec("densenet201", (224, 224), 1920, "torch"),
    "inceptionresnetv2": ExtractorSpec(
        "inceptionresnetv2", (299, 299), 1536, "keras"
    ),
}


def get_spec(name: str) -> ExtractorSpec:
    try:
        return NETWORKS[name]
    except KeyError:
        raise InputError(
            f"unknown network {name!r}; choose from {sorted(NETWORKS)}"
        ) from None


class _TorchRunner:
    def __init__(self, spec: ExtractorSpec, pretrained: bool, device: str):
        import torch
        from torch import nn
        from torchvision import models

        self._torch = torch
        kwargs = {}
        if spec.name == "googlenet" and not pretrained:
            # Constructor-default module inits; skips the slow legacy re-init.
            kwargs["init_weights"] = False
        model = models.get_model(
            spec.name, weights="DEFAULT" if pretrained else None, **kwargs
        )
        # Cut the classification head; eval mode freezes dropout/batchnorm.
        if spec.name in ("alexnet", "vgg16"):
            model.classifier[6] = nn.Identity()
        elif spec.name in ("resnet50", "googlenet"):
            model.fc = nn.Identity()
        elif spec.name == "densenet201":
            model.classifier = nn.Identity()
        self.model = model.to(device).eval()
        self.device = device

    def __call__(self, batch: np.ndarray) -> np.ndarray:
        torch = self._torch
        x = batch.astype(np.float32) / 255.0
        x = (x - np.array(TORCH_MEAN, dtype=np.float32)) \
            / np.array(TORCH_STD, dtype=np.float32)
        t = torch.from_numpy(np.ascontiguousarray(x.transpose(0, 3, 1, 2)))
        with torch.inference_mode():
            out = self.model(t.to(self.device))
        return out.cpu().numpy()


class _KerasRunner:
    def __init__(self, spec: ExtractorSpec, pretrained: bool, device: str):
        os.environ.setdefault("TF_ENABLE_ONEDNN_OPTS", "0")
        os.environ.setdefault("TF_CPP_MIN_LOG_LEVEL", "2")
        from tensorflow import keras

        h, w = spec.input_size
        self.model = keras.applications.InceptionResNetV2(
            include_top=False,
            weights="imagenet" if pretrained else None,
            pooling="avg",
            input_shape=(h, w, 3),
        )

    def __call__(self, batch: np.ndarray) -> np.ndarray:
        x = batch.astype(np.float32) / 127.5 - 1.0
        return np.asarray(self.model(x, training=False))


def build_runner(spec: ExtractorSpec, pretrained: bool = True,
                 device: str = "cpu"):
    """Callable mapping a uint8 NHWC batch to (N, expected_dim) features."""
    if spec.framework == "torch":
        runner = _TorchRunner(spec, pretrained, device)
    else:
        runner = _KerasRunner(spec, pretrained, device)

    def run(batch: np.ndarray) -> np.ndarray:
        out = runner(batch)
        if out.ndim != 2 or out.shape[1] != spec.expected_dim:
            raise TapPointError(
                f"{spec.name}: tap produced shape {out.shape}, "
                f"expected (n, {spec.expected_dim})"
            )
        return out

    return run
