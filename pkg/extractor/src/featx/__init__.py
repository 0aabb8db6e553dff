"""Feature-export bridge: pretrained ImageNet networks -> featfuse containers."""

from .errors import BridgeError, InputError, TapPointError
from .export import ExtractionResult, discover_images, extract
from .networks import NETWORKS, ExtractorSpec, build_runner, get_spec

__all__ = [
    "BridgeError",
    "ExtractionResult",
    "ExtractorSpec",
    "InputError",
    "NETWORKS",
    "TapPointError",
    "build_runner",
    "discover_images",
    "extract",
    "get_spec",
]
