"""Aggregated search measurements: points per partition, distance histogram,
cost totals, and motion-compensated prediction PSNR."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cost_model import MotionVector
from .subpel import SubpelOutcome

PEAK_SQ = 255.0 * 255.0


@dataclass
class PartitionDetail:
    """Per-(partition, reference) instrumentation row, kept only on request."""

    frame: int
    mb: int
    mode: str
    winner: bool
    rough_points: int
    refine_points: int


@dataclass
class FrameRow:
    frame: int
    cost: int
    points: int
    partitions: int
    psnr_db: float


@dataclass
class SearchStats:
    """Associative accumulator of one strategy run's measurements.

    ``partitions`` counts rough searches, one per (partition, reference);
    ``points`` counts every unique sub-pel evaluation, refinement included.
    The distance histogram buckets Manhattan distances (in quarter-pel) between
    each predicted-step MV and the brute-force best sub-pel MV; it only fills
    in audit mode, when the oracle is supplied.
    """

    points_rough: int = 0
    points_refine: int = 0
    partitions: int = 0
    winner_partitions: int = 0
    refined_partitions: int = 0
    hist: list[int] = field(default_factory=lambda: [0, 0, 0, 0])
    total_cost: int = 0
    sse: int = 0
    n_samples: int = 0
    frames: int = 0
    per_frame: list[FrameRow] = field(default_factory=list)
    details: list[PartitionDetail] | None = None

    @property
    def points(self) -> int:
        return self.points_rough + self.points_refine

    @property
    def sp_per_pt(self) -> float:
        return self.points / self.partitions if self.partitions else 0.0

    def record_partition(self, outcome: SubpelOutcome,
                         oracle_best: MotionVector | None = None) -> None:
        self.partitions += 1
        self.points_rough += outcome.points
        if oracle_best is not None and outcome.mv_step2 is not None:
            d = abs(outcome.mv_step2[0] - oracle_best[0]) + abs(
                outcome.mv_step2[1] - oracle_best[1]
            )
            self.hist[min(d, 3)] += 1

    def record_winner(self, refine_points: int, refined: bool) -> None:
        self.winner_partitions += 1
        self.points_refine += refine_points
        if refined:
            self.refined_partitions += 1

    def record_frame(self, frame: int, cost: int, points: int, partitions: int,
                     sse: int, n_samples: int) -> None:
        self.frames += 1
        self.total_cost += cost
        self.sse += sse
        self.n_samples += n_samples
        self.per_frame.append(
            FrameRow(frame, cost, points, partitions, psnr_from_sse(sse, n_samples))
        )

    def record_detail(self, detail: PartitionDetail) -> None:
        if self.details is not None:
            self.details.append(detail)

    @property
    def mc_pred_psnr(self) -> float:
        return psnr_from_sse(self.sse, self.n_samples)

    def hist_shares(self) -> tuple[float, float, float]:
        """Cumulative shares of distances d<=0, d<=1, d<=2 (zeros if no audit data)."""
        n = sum(self.hist)
        if n == 0:
            return (0.0, 0.0, 0.0)
        c0 = self.hist[0]
        c1 = c0 + self.hist[1]
        c2 = c1 + self.hist[2]
        return (c0 / n, c1 / n, c2 / n)

    def merge(self, other: "SearchStats") -> None:
        self.points_rough += other.points_rough
        self.points_refine += other.points_refine
        self.partitions += other.partitions
        self.winner_partitions += other.winner_partitions
        self.refined_partitions += other.refined_partitions
        for i in range(4):
            self.hist[i] += other.hist[i]
        self.total_cost += other.total_cost
        self.sse += other.sse
        self.n_samples += other.n_samples
        self.frames += other.frames
        self.per_frame.extend(other.per_frame)
        if self.details is not None and other.details is not None:
            self.details.extend(other.details)


def psnr_from_sse(sse: int, n_samples: int) -> float:
    if n_samples <= 0:
        return math.inf
    if sse == 0:
        return math.inf
    return 10.0 * math.log10(PEAK_SQ * n_samples / sse)


def mc_prediction_psnr(cur, predicted) -> float:
    """PSNR of a motion-compensated prediction against the source plane, in dB.

    A perfect prediction reports +inf.
    """
    a = cur.samples if hasattr(cur, "samples") else np.asarray(cur)
    b = predicted.samples if hasattr(predicted, "samples") else np.asarray(predicted)
    if a.shape != b.shape:
        raise ValueError(f"plane shape mismatch: {a.shape} vs {b.shape}")
    d = np.subtract(a, b, dtype=np.int64)
    return psnr_from_sse(int((d * d).sum()), a.size)
