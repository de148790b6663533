"""Matching-cost primitives: SAD, motion-vector rate, Lagrangian cost, MV predictor.

The matching criterion everywhere is cost = SAD + round(lambda_motion * R(mv)),
with R the signed Exp-Golomb bit count of the quarter-pel MV difference.  Costs
are kept integral so comparisons are exact on every platform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np


class MotionVector(NamedTuple):
    """A displacement in quarter-pel units; integer positions have x, y = 0 mod 4."""

    x: int
    y: int


ZERO_MV = MotionVector(0, 0)


def se_code_length(v: int) -> int:
    """Bit length of the signed Exp-Golomb code of v."""
    k = 2 * abs(v) - (1 if v > 0 else 0)
    return 2 * ((k + 1).bit_length() - 1) + 1


def mv_bits(mv: MotionVector, pred_mv: MotionVector) -> int:
    """Bits to code the MV difference, per component."""
    return se_code_length(mv[0] - pred_mv[0]) + se_code_length(mv[1] - pred_mv[1])


@dataclass(frozen=True)
class LambdaModel:
    """Motion-search Lagrange multiplier for a quantization parameter."""

    qp: int
    lambda_motion: float

    @classmethod
    def from_qp(cls, qp: int) -> "LambdaModel":
        return cls(qp=qp, lambda_motion=math.sqrt(0.85 * 2.0 ** ((qp - 12) / 3.0)))


def lagrange_term(lambda_motion: float, bits: int) -> int:
    """round(lambda * bits) as an integer; the product is always non-negative."""
    return int(lambda_motion * bits + 0.5)


def cost(sad_value: int, mv: MotionVector, pred_mv: MotionVector, lam: LambdaModel) -> int:
    return sad_value + lagrange_term(lam.lambda_motion, mv_bits(mv, pred_mv))


def sad(cur: np.ndarray, pred: np.ndarray) -> int:
    """Sum of absolute sample differences of two equal-size blocks."""
    if cur.shape != pred.shape:
        raise ValueError(f"block shape mismatch: {cur.shape} vs {pred.shape}")
    return int(np.abs(np.subtract(cur, pred, dtype=np.int32)).sum())


def predict_mv(
    left: MotionVector | None,
    top: MotionVector | None,
    top_right: MotionVector | None,
) -> MotionVector:
    """Median MV prediction from the left, top, and top-right neighbors.

    If only the left neighbor exists its MV is used directly; otherwise missing
    neighbors count as (0, 0).  With no neighbors at all the prediction is (0, 0).
    """
    if left is None and top is None and top_right is None:
        return ZERO_MV
    if left is not None and top is None and top_right is None:
        return left
    a = left if left is not None else ZERO_MV
    b = top if top is not None else ZERO_MV
    c = top_right if top_right is not None else ZERO_MV
    return MotionVector(_median3(a[0], b[0], c[0]), _median3(a[1], b[1], c[1]))


def _median3(a: int, b: int, c: int) -> int:
    return sorted((a, b, c))[1]
