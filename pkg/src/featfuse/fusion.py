"""Column-wise concatenation of image features with encoded metadata."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .codec import EncodedMetadata
from .errors import AlignmentError, StructuralError
from .featureio import FeatureMatrix


@dataclass(frozen=True)
class FusedMatrix:
    """Block matrix [image features | metadata codes] with span bookkeeping.

    Spans are (offset, width) pairs into the column axis; the image block
    always comes first.
    """

    data: np.ndarray
    image_span: tuple[int, int]
    metadata_span: tuple[int, int]
    extractor_name: str = ""
    field_spans: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        d_img = self.image_span[1]
        d_meta = self.metadata_span[1]
        if self.image_span != (0, d_img) or self.metadata_span != (d_img, d_meta):
            raise StructuralError("spans must tile the columns, image block first")
        if self.data.shape[1] != d_img + d_meta:
            raise StructuralError(
                f"{self.data.shape[1]} columns, spans cover {d_img + d_meta}"
            )

    @property
    def n_samples(self) -> int:
        return self.data.shape[0]


def fuse(
    f: FeatureMatrix,
    g: EncodedMetadata,
    metadata_sample_ids=None,
) -> FusedMatrix:
    """Concatenate [F | G]; integer codes widen to float exactly, nothing else.

    Rows must already be in matching order; pass metadata_sample_ids to have
    the pairing checked against f.sample_ids.
    """
    if f.n_samples != g.values.shape[0]:
        raise AlignmentError(
            f"feature matrix has {f.n_samples} rows, metadata has "
            f"{g.values.shape[0]}"
        )
    if metadata_sample_ids is not None:
        for fid, mid in zip(f.sample_ids, metadata_sample_ids):
            if fid != mid:
                raise AlignmentError(
                    f"sample id mismatch: features {fid!r} vs metadata {mid!r}"
                )
    data = np.hstack([f.data, g.values.astype(np.float32)])
    return FusedMatrix(
        data=data,
        image_span=(0, f.n_features),
        metadata_span=(f.n_features, g.width),
        extractor_name=f.extractor_name,
        field_spans=g.field_spans,
    )
