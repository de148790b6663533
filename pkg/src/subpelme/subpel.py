"""Sub-pixel search strategies behind one evaluation context.

Five strategies share a per-partition evaluation cache so search points are
counted as unique positions actually evaluated:

* ``full``   - 8 half-pel neighbors of the integer best, then 8 quarter-pel
  neighbors of the round-1 winner (16 points per partition, always).
* ``cbfps``  - start at the remainder-predicted candidate, then a small
  quarter-pel diamond descent.
* ``fpme``   - same descent, started at the quadratic-surface candidate.
* ``rfsme``  - gated rough search: skip when the integer cost surface is flat,
  otherwise probe the two predicted candidates, and only when the cost drop
  looks unreliable probe two slope-selected quarter neighbors.  A separate
  8-neighbor refinement runs later, for winning partitions only.
* ``ie_sme`` - no rough sub-pel work at all; handled by the mode-decision layer,
  which runs ``full`` on winners afterwards.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .cost_model import LambdaModel, MotionVector, lagrange_term, mv_bits, sad
from .integer_me import BLOCK_TYPE_SMALL, CostCross, mv_tie_key
from .interpolation import PaddedReference, QuarterPos

PATH_FLAT_SKIP = "flat_skip"
PATH_STEP2_STOP = "step2_stop"
PATH_STEP3 = "step3"
PATH_REFINED = "refined"
PATH_FULL = "full"

_DIAMOND = (
    MotionVector(-1, 0),
    MotionVector(1, 0),
    MotionVector(0, -1),
    MotionVector(0, 1),
)
_RING8 = tuple(
    MotionVector(dx, dy)
    for dy in (-1, 0, 1)
    for dx in (-1, 0, 1)
    if (dx, dy) != (0, 0)
)
_HALF8 = tuple(
    MotionVector(dx, dy)
    for dy in (-2, 0, 2)
    for dx in (-2, 0, 2)
    if (dx, dy) != (0, 0)
)


@dataclass(frozen=True)
class GateParams:
    """Thresholds of the flatness and cost-drop gates."""

    th1: int = 10
    th2: int = 20
    r_flat: Fraction = Fraction(5, 4)
    r_drop: Fraction = Fraction(3, 2)

    def __post_init__(self):
        if self.th1 <= 0 or self.th2 <= 0 or self.r_flat <= 0 or self.r_drop <= 0:
            raise ValueError("gate parameters must be positive")


@dataclass(frozen=True)
class SubpelOutcome:
    """Result of one partition's sub-pel stage.

    points counts unique positions evaluated for this partition beyond the
    integer stage; mv_step2 is the best predicted candidate (for the audit
    histogram) and is None when the stage was skipped entirely.
    """

    mv: MotionVector
    cost: int
    points: int
    path: str
    mv_step2: MotionVector | None = None


@dataclass
class SearchCtx:
    """Evaluation context of one partition against one reference.

    The cache is seeded with the integer best and its four cross neighbors, so
    re-probing a known position is free and the points counter only advances on
    genuinely new evaluations.
    """

    cur: np.ndarray
    ref: PaddedReference
    base_q: tuple[int, int]
    pred_mv: MotionVector
    lam: LambdaModel
    mv_bound: int
    cache: dict = field(default_factory=dict)
    points: int = 0

    def legal(self, mv: MotionVector) -> bool:
        return abs(mv[0]) <= self.mv_bound and abs(mv[1]) <= self.mv_bound

    def evaluate(self, mv: MotionVector) -> int:
        c = self.cache.get(mv)
        if c is None:
            c = self.raw_cost(mv)
            self.cache[mv] = c
            self.points += 1
        return c

    def raw_cost(self, mv: MotionVector) -> int:
        """Cost at mv without touching the cache or the points counter."""
        cached = self.cache.get(mv)
        if cached is not None:
            return cached
        h, w = self.cur.shape
        pos = QuarterPos(self.base_q[0] + mv[0], self.base_q[1] + mv[1])
        block = self.ref.fetch_block(pos, w, h)
        d = self.cur - block  # both int16 in [0, 255]; no overflow
        np.abs(d, out=d)
        return int(d.sum()) + lagrange_term(
            self.lam.lambda_motion, mv_bits(mv, self.pred_mv)
        )

    def evaluate_many(self, mvs) -> list[tuple[MotionVector, int]]:
        """Evaluate several legal positions; one fused SAD pass for the new ones."""
        out = []
        fresh = []
        blocks = []
        h, w = self.cur.shape
        for mv in mvs:
            c = self.cache.get(mv)
            if c is not None:
                out.append((mv, c))
                continue
            pos = QuarterPos(self.base_q[0] + mv[0], self.base_q[1] + mv[1])
            blocks.append(self.ref.fetch_block(pos, w, h))
            fresh.append(mv)
        if fresh:
            stack = np.stack(blocks)
            d = stack - self.cur[None]
            np.abs(d, out=d)
            sads = d.reshape(len(fresh), -1).sum(axis=1)
            lam = self.lam.lambda_motion
            for mv, s in zip(fresh, sads):
                c = int(s) + lagrange_term(lam, mv_bits(mv, self.pred_mv))
                self.cache[mv] = c
                self.points += 1
                out.append((mv, c))
        return out


def make_ctx(cur_block, ref, base_q, pred_mv, lam, mv_bound,
             best_int: MotionVector, cross: CostCross) -> SearchCtx:
    """Build a context seeded with the integer-stage costs."""
    cache = {
        best_int: cross.cost_full,
        MotionVector(best_int[0] - 4, best_int[1]): cross.cost_left,
        MotionVector(best_int[0] + 4, best_int[1]): cross.cost_right,
        MotionVector(best_int[0], best_int[1] - 4): cross.cost_up,
        MotionVector(best_int[0], best_int[1] + 4): cross.cost_down,
    }
    return SearchCtx(
        cur=cur_block, ref=ref, base_q=base_q, pred_mv=pred_mv, lam=lam,
        mv_bound=mv_bound, cache=cache,
    )


def truncated_rem(a: int, b: int) -> int:
    """Remainder with the sign of the dividend (C-style %)."""
    return (abs(a) % b) * (1 if a >= 0 else -1)


def cbfps_offset(pred_mv: MotionVector, best_int: MotionVector) -> MotionVector:
    """Sub-pel offset predicted from the spatial MV prediction.

    The candidate position is best_int + offset; each component lies in [-3, 3].
    """
    return MotionVector(
        truncated_rem(pred_mv[0] - best_int[0], 4),
        truncated_rem(pred_mv[1] - best_int[1], 4),
    )


def _round_half_away(num: int, den: int) -> int:
    # round(num/den) with halves away from zero, in exact integer arithmetic
    if den < 0:
        num, den = -num, -den
    if num >= 0:
        return (2 * num + den) // (2 * den)
    return -((-2 * num + den) // (2 * den))


def quad_offset(cross: CostCross) -> MotionVector:
    """Sub-pel offset at the minimum of a separable quadratic fit of the cross.

    Each axis fits cost differences of the two integer neighbors; the continuous
    minimizer is quantized to quarter-pel half-away-from-zero and clamped to
    [-3, 3].  A zero second-difference leaves that axis at 0.
    """
    i = cross.cost_right - cross.cost_full
    j = cross.cost_left - cross.cost_full
    k = cross.cost_down - cross.cost_full
    l = cross.cost_up - cross.cost_full
    return MotionVector(_quad_axis(i, j), _quad_axis(k, l))


def _quad_axis(fwd: int, back: int) -> int:
    den = fwd + back          # 2x the quadratic coefficient
    if den == 0:
        return 0
    q = _round_half_away(-2 * (fwd - back), den)
    return max(-3, min(3, q))


@dataclass(frozen=True)
class QuadraticFit:
    """Separable quadratic model of the cost cross, kept 2x-scaled integral."""

    i: int
    j: int
    k: int
    l: int

    @property
    def a2(self) -> int:
        return self.i + self.j

    @property
    def b2(self) -> int:
        return self.i - self.j

    @property
    def c2(self) -> int:
        return self.k + self.l

    @property
    def d2(self) -> int:
        return self.k - self.l

    @classmethod
    def from_cross(cls, cross: CostCross) -> "QuadraticFit":
        return cls(
            i=cross.cost_right - cross.cost_full,
            j=cross.cost_left - cross.cost_full,
            k=cross.cost_down - cross.cost_full,
            l=cross.cost_up - cross.cost_full,
        )

    def offset(self) -> MotionVector:
        return MotionVector(_quad_axis(self.i, self.j), _quad_axis(self.k, self.l))


def flatness_gate(cross: CostCross, blk_class: str, p: GateParams) -> bool:
    """True when the integer cost surface is flat enough to skip sub-pel search.

    Not flat if either neighbor average exceeds r_flat times the best cost, or
    the smaller |best - average| difference exceeds the class threshold.  All
    comparisons run 2x-scaled in exact integers.
    """
    c2 = 2 * cross.cost_full
    num, den = p.r_flat.numerator, p.r_flat.denominator
    if cross.sum_vertical * den > 2 * num * cross.cost_full:
        return False
    if cross.sum_horizontal * den > 2 * num * cross.cost_full:
        return False
    th = p.th1 if blk_class == BLOCK_TYPE_SMALL else p.th2
    min_diff2 = min(abs(c2 - cross.sum_vertical), abs(c2 - cross.sum_horizontal))
    return min_diff2 <= 2 * th


def drop_gate(cost_step2: int, cost_best_full: int, cross: CostCross,
              blk_class: str, p: GateParams) -> bool:
    """True when the cost drop after the predicted probes is large (keep searching).

    Large if either neighbor average exceeds r_drop times min(cost_step2,
    cost_best_full), or |cost_step2 - cost_best_full| exceeds half the class
    threshold.
    """
    cost_min = min(cost_step2, cost_best_full)
    num, den = p.r_drop.numerator, p.r_drop.denominator
    if cross.sum_vertical * den > 2 * num * cost_min:
        return True
    if cross.sum_horizontal * den > 2 * num * cost_min:
        return True
    d = abs(cost_step2 - cost_best_full)
    th = p.th1 if blk_class == BLOCK_TYPE_SMALL else p.th2
    return 2 * d > th


def bilinear_picks(mv_step2: MotionVector, cost_min_step2: int, cross: CostCross,
                   best_int: MotionVector) -> tuple[MotionVector, MotionVector]:
    """One horizontal and one vertical quarter-pel neighbor of mv_step2.

    Per axis, the slope toward each flanking integer-pel point is
    |integer cost - cost_min_step2| / quarter-pel distance; the neighbor on the
    smaller-slope side wins.  Flank costs come from the integer cross.  On an
    exact tie (and when mv_step2 sits on the integer coordinate itself) the
    neighbor toward the best integer MV is taken, falling back to the
    negative-direction neighbor when already centered on it.
    """
    hx = _axis_pick(
        mv_step2[0] - best_int[0], cross.cost_left, cross.cost_full,
        cross.cost_right, cost_min_step2,
    )
    vy = _axis_pick(
        mv_step2[1] - best_int[1], cross.cost_up, cross.cost_full,
        cross.cost_down, cost_min_step2,
    )
    return (
        MotionVector(mv_step2[0] + hx, mv_step2[1]),
        MotionVector(mv_step2[0], mv_step2[1] + vy),
    )


def _axis_pick(rel: int, cost_back: int, cost_center: int, cost_fwd: int,
               cost_min: int) -> int:
    # rel is mv_step2 minus the best integer MV along this axis, in [-3, 3]
    if rel > 0:
        back_cost, back_dist = cost_center, rel
        fwd_cost, fwd_dist = cost_fwd, 4 - rel
    elif rel < 0:
        back_cost, back_dist = cost_back, 4 + rel
        fwd_cost, fwd_dist = cost_center, -rel
    else:
        back_cost, back_dist = cost_back, 4
        fwd_cost, fwd_dist = cost_fwd, 4
    s_back = abs(back_cost - cost_min) * fwd_dist
    s_fwd = abs(fwd_cost - cost_min) * back_dist
    if s_back < s_fwd:
        return -1
    if s_fwd < s_back:
        return 1
    return -1 if rel >= 0 else 1


def _best_by_key(candidates) -> tuple[MotionVector, int]:
    best_mv, best_cost = None, None
    best_key = None
    for mv, c in candidates:
        k = mv_tie_key(c, mv)
        if best_key is None or k < best_key:
            best_key, best_mv, best_cost = k, mv, c
    return best_mv, best_cost


def rfsme_rough(ctx: SearchCtx, best_int: MotionVector, cross: CostCross,
                blk_class: str, gates: GateParams) -> SubpelOutcome:
    """Gated rough sub-pel estimate for one partition (at most 4 points)."""
    if flatness_gate(cross, blk_class, gates):
        return SubpelOutcome(best_int, cross.cost_full, 0, PATH_FLAT_SKIP, None)

    candidates = []
    for off in (cbfps_offset(ctx.pred_mv, best_int), quad_offset(cross)):
        mv = MotionVector(best_int[0] + off[0], best_int[1] + off[1])
        if mv != best_int and mv not in candidates and ctx.legal(mv):
            candidates.append(mv)
    evaluated = [(mv, ctx.evaluate(mv)) for mv in candidates]
    if evaluated:
        mv_step2, cost_step2 = _best_by_key(evaluated)
    else:
        mv_step2, cost_step2 = best_int, cross.cost_full

    if not drop_gate(cost_step2, cross.cost_full, cross, blk_class, gates):
        if cost_step2 < cross.cost_full:
            return SubpelOutcome(mv_step2, cost_step2, ctx.points, PATH_STEP2_STOP, mv_step2)
        return SubpelOutcome(best_int, cross.cost_full, ctx.points, PATH_STEP2_STOP, mv_step2)

    cost_min = min(cost_step2, cross.cost_full)
    picks = bilinear_picks(mv_step2, cost_min, cross, best_int)
    pool = [(best_int, cross.cost_full)] + evaluated
    for mv in picks:
        if ctx.legal(mv):
            pool.append((mv, ctx.evaluate(mv)))
    mv, c = _best_by_key(pool)
    return SubpelOutcome(mv, c, ctx.points, PATH_STEP3, mv_step2)


def rfsme_refine(ctx: SearchCtx, rough: SubpelOutcome) -> SubpelOutcome:
    """Search the 8 quarter-pel neighbors of the rough MV (winning partitions only).

    Positions already evaluated for this partition are reused, so the points
    counter only grows by genuinely new evaluations.
    """
    cands = [MotionVector(rough.mv[0] + d[0], rough.mv[1] + d[1]) for d in _RING8]
    pool = [(rough.mv, rough.cost)]
    pool += ctx.evaluate_many(mv for mv in cands if ctx.legal(mv))
    mv, c = _best_by_key(pool)
    return SubpelOutcome(mv, c, ctx.points, PATH_REFINED, rough.mv_step2)


def full_subpel(ctx: SearchCtx, best_int: MotionVector) -> SubpelOutcome:
    """Reference 16-point search: 8 half-pel neighbors, then 8 quarter-pel ones."""
    pool = [(best_int, ctx.cache[best_int])]
    pool += ctx.evaluate_many(
        MotionVector(best_int[0] + d[0], best_int[1] + d[1]) for d in _HALF8
    )
    center, _ = _best_by_key(pool)
    pool += ctx.evaluate_many(
        MotionVector(center[0] + d[0], center[1] + d[1]) for d in _RING8
    )
    mv, c = _best_by_key(pool)
    return SubpelOutcome(mv, c, ctx.points, PATH_FULL, None)


def _diamond_descent(ctx: SearchCtx, start: MotionVector, max_rounds: int = 3):
    center = start
    center_cost = ctx.evaluate(start)
    for _ in range(max_rounds):
        cands = [MotionVector(center[0] + d[0], center[1] + d[1]) for d in _DIAMOND]
        pool = [(center, center_cost)]
        pool += ctx.evaluate_many(mv for mv in cands if ctx.legal(mv))
        best_mv, best_cost = _best_by_key(pool)
        if best_mv == center:
            break
        center, center_cost = best_mv, best_cost
    return center, center_cost


def cbfps_search(ctx: SearchCtx, best_int: MotionVector) -> SubpelOutcome:
    """Diamond descent from the remainder-predicted candidate (at most 3 rounds)."""
    off = cbfps_offset(ctx.pred_mv, best_int)
    start = MotionVector(best_int[0] + off[0], best_int[1] + off[1])
    mv, c = _diamond_descent(ctx, start)
    mv, c = _best_by_key([(mv, c), (best_int, ctx.cache[best_int])])
    return SubpelOutcome(mv, c, ctx.points, PATH_REFINED, None)


def fpme_search(ctx: SearchCtx, cross: CostCross, best_int: MotionVector) -> SubpelOutcome:
    """Diamond descent from the quadratic-surface candidate (at most 3 rounds)."""
    off = quad_offset(cross)
    start = MotionVector(best_int[0] + off[0], best_int[1] + off[1])
    mv, c = _diamond_descent(ctx, start)
    mv, c = _best_by_key([(mv, c), (best_int, ctx.cache[best_int])])
    return SubpelOutcome(mv, c, ctx.points, PATH_REFINED, None)


def exhaustive_best(ctx: SearchCtx, best_int: MotionVector) -> MotionVector:
    """Brute-force best MV over the full +/-3 quarter-pel box around the integer best.

    Bypasses the cache and the points counter; used only by the audit histogram.
    """
    pool = []
    for dy in range(-3, 4):
        for dx in range(-3, 4):
            mv = MotionVector(best_int[0] + dx, best_int[1] + dy)
            if ctx.legal(mv):
                pool.append((mv, ctx.raw_cost(mv)))
    mv, _ = _best_by_key(pool)
    return mv
