"""Row-wise affine int8 quantization for embedding matrices."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class QuantizedTensor:
    """A float matrix stored as one byte per cell plus per-row scale/offset.

    value ~= offset[row] + scale[row] * code. Rows whose values are all
    identical get scale 0 and decode exactly to the offset.
    """

    scales: np.ndarray   # (rows,) float32
    offsets: np.ndarray  # (rows,) float32
    codes: np.ndarray    # (rows, cols) uint8

    def __post_init__(self):
        if self.codes.ndim != 2:
            raise ValueError("codes must be a 2-d array")
        if self.scales.shape != (self.codes.shape[0],):
            raise ValueError("one scale per row required")
        if self.offsets.shape != (self.codes.shape[0],):
            raise ValueError("one offset per row required")

    @property
    def shape(self) -> tuple[int, int]:
        return self.codes.shape

    @property
    def nbytes(self) -> int:
        return self.scales.nbytes + self.offsets.nbytes + self.codes.nbytes


def quantize_tensor(arr: np.ndarray) -> QuantizedTensor:
    """Quantize each row of a 2-d float array to uint8 codes.

    scale = (max - min) / 255 and offset = min, both computed per row and
    stored as float32. Codes are rounded against the stored float32
    values so the round-trip error is bounded by one quantization step.
    """
    if arr.ndim != 2:
        raise ValueError("expected a 2-d array")
    arr = np.asarray(arr, dtype=np.float64)
    mins = arr.min(axis=1)
    maxs = arr.max(axis=1)
    scales = ((maxs - mins) / 255.0).astype(np.float32)
    offsets = mins.astype(np.float32)

    codes = np.zeros(arr.shape, dtype=np.uint8)
    live = scales > 0
    if live.any():
        norm = (arr[live] - offsets[live].astype(np.float64)[:, None]) / scales[
            live
        ].astype(np.float64)[:, None]
        codes[live] = np.clip(np.rint(norm), 0, 255).astype(np.uint8)
    return QuantizedTensor(scales=scales, offsets=offsets, codes=codes)


def dequantize(qt: QuantizedTensor, rows: np.ndarray | None = None) -> np.ndarray:
    """Decode back to float64, optionally gathering only the given rows."""
    if rows is None:
        codes = qt.codes
        scales = qt.scales.astype(np.float64)
        offsets = qt.offsets.astype(np.float64)
    else:
        codes = qt.codes[rows]
        scales = qt.scales[rows].astype(np.float64)
        offsets = qt.offsets[rows].astype(np.float64)
    return offsets[:, None] + scales[:, None] * codes.astype(np.float64)
