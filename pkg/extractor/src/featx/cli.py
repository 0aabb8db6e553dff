"""Command-line entry point: one network over one directory, one file out."""

from __future__ import annotations

import argparse
import sys

from .errors import BridgeError, InputError
from .export import extract
from .networks import NETWORKS


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="featx",
        description=(
            "Export deepest-layer feature vectors from a pretrained ImageNet "
            "network into a featfuse feature container."
        ),
    )
    parser.add_argument("--input", required=True, help="image directory")
    parser.add_argument(
        "--network", required=True, choices=sorted(NETWORKS),
        help="which network to run",
    )
    parser.add_argument("--output", required=True, help="feature file to write")
    parser.add_argument("--batch-size", type=int, default=16)
    parser.add_argument("--device", default="cpu",
                        help="torch device string (keras path ignores it)")
    parser.add_argument("--random-weights", action="store_true",
                        help="skip pretrained weights (testing only)")
    parser.add_argument("--skip-unreadable", action="store_true",
                        help="log and skip unreadable images instead of failing")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        result = extract(
            args.input,
            args.network,
            args.output,
            batch_size=args.batch_size,
            device=args.device,
            pretrained=not args.random_weights,
            skip_unreadable=args.skip_unreadable,
        )
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except BridgeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(
        f"{result.network}: {result.image_count} images -> "
        f"{result.features_path} (d={result.dim}, {result.seconds:.1f}s)"
    )
    if result.skipped:
        print(f"  skipped {len(result.skipped)}: {', '.join(result.skipped)}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
