"""Loss response to circular shifts of an image."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ..losses import FdlConfig, fdl, mse, spatial_swd
from ..numerics import as_tensor

__all__ = ["ShiftRow", "shift_curve", "CURVE_KINDS"]

CURVE_KINDS = ("mse", "fdl", "fdl_amplitude", "spatial")
ZERO_RESPONSE = 1e-12


@dataclass(frozen=True)
class ShiftRow:
    loss_kind: str
    shift: int
    value: float
    normalized: float


def _evaluate(kind: str, a, b, cfg: FdlConfig) -> float:
    if kind == "mse":
        return mse(a, b).item()
    if kind == "fdl":
        return fdl(a, b, cfg, 0).item()
    if kind == "fdl_amplitude":
        return fdl(a, b, replace(cfg, lam=0.0), 0).item()
    if kind == "spatial":
        return spatial_swd(a, b, cfg, 0).item()
    raise ValueError(f"unknown loss kind {kind!r}; expected one of {CURVE_KINDS}")


def shift_curve(image, loss_kinds, max_shift: int, cfg: FdlConfig, axis: int = -1) -> list[ShiftRow]:
    """Loss between ``image`` and its circular shift by 0..max_shift along ``axis``.

    Each kind's values are also reported relative to its shift-1 response; a
    kind whose shift-1 response is numerically zero is normalized to 0. All
    evaluations use eval id 0, so every shift sees the same projections.
    """
    image = as_tensor(image)
    kinds = list(loss_kinds)
    for kind in kinds:
        if kind not in CURVE_KINDS:
            raise ValueError(f"unknown loss kind {kind!r}; expected one of {CURVE_KINDS}")
    spatial = image.shape[-2:] if image.ndim >= 2 else image.shape
    if max_shift < 1 or 2 * max_shift >= min(spatial):
        raise ValueError(f"max_shift must be in [1, {(min(spatial) - 1) // 2}], got {max_shift}")
    rows = []
    for kind in kinds:
        values = [
            _evaluate(kind, image, np.roll(image.data, s, axis=axis), cfg) for s in range(max_shift + 1)
        ]
        ref = values[1]
        for s, v in enumerate(values):
            norm = v / ref if ref > ZERO_RESPONSE else 0.0
            rows.append(ShiftRow(kind, s, v, norm))
    return rows
