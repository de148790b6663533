"""Per-macroblock partition/mode selection and the two-stage search pipeline.

Rough/precise strategies (rfsme, ie_sme) run a cheap per-partition estimate for
every candidate partition on every reference, select the mode and reference by
those rough costs, and spend precise sub-pel work only on the winning
partitions.  Baseline strategies (full, cbfps, fpme) complete their whole
per-partition search before the mode is chosen and never re-search afterwards.

Macroblocks are scanned in raster order; each partition's MV prediction comes
from already-decided neighbor blocks at 4x4 granularity, so results are
independent of any outer parallelism that respects that order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cost_model import LambdaModel, MotionVector, predict_mv
from .integer_me import CostCross, MbRefSearcher, block_class
from .interpolation import PaddedReference, QuarterPos, build_padded
from .stats import PartitionDetail, SearchStats
from .subpel import (
    GateParams,
    PATH_FLAT_SKIP,
    SearchCtx,
    SubpelOutcome,
    cbfps_search,
    exhaustive_best,
    fpme_search,
    full_subpel,
    make_ctx,
    rfsme_refine,
    rfsme_rough,
)
from .video_io import LumaPlane, MB_SIZE

STRATEGIES = ("full", "cbfps", "fpme", "ie_sme", "rfsme")
BASELINE_STRATEGIES = ("full", "cbfps", "fpme")
ROUGH_PRECISE_STRATEGIES = ("ie_sme", "rfsme")

# mode layouts as (mode id, ((off_x, off_y, w, h), ...)); ties break in list order
MODE_LAYOUTS = (
    ("16x16", ((0, 0, 16, 16),)),
    ("16x8", ((0, 0, 16, 8), (0, 8, 16, 8))),
    ("8x16", ((0, 0, 8, 16), (8, 0, 8, 16))),
)
P8X8_BLOCKS = ((0, 0), (8, 0), (0, 8), (8, 8))
SUB_MODE_LAYOUTS = (
    ("8x8", ((0, 0, 8, 8),)),
    ("8x4", ((0, 0, 8, 4), (0, 4, 8, 4))),
    ("4x8", ((0, 0, 4, 8), (4, 0, 4, 8))),
    ("4x4", ((0, 0, 4, 4), (4, 0, 4, 4), (0, 4, 4, 4), (4, 4, 4, 4))),
)


@dataclass(frozen=True)
class EncodeParams:
    """Fixed knobs of one run."""

    qp: int = 28
    search_range: int = 16
    refs: int = 1
    gates: GateParams = field(default_factory=GateParams)

    @property
    def lam(self) -> LambdaModel:
        return LambdaModel.from_qp(self.qp)

    @property
    def mv_bound(self) -> int:
        return 4 * self.search_range + 3


@dataclass
class PartitionResult:
    """One partition's chosen-reference search state, kept until refinement."""

    off_x: int
    off_y: int
    w: int
    h: int
    pred_mv: MotionVector
    ref_index: int
    best_int: MotionVector
    cross: CostCross
    outcome: SubpelOutcome
    ctx: SearchCtx
    rough_points: int      # summed over all searched references
    refine_points: int = 0
    refined: bool = False


@dataclass
class MbModeResult:
    """Chosen mode of one macroblock with its final per-partition MVs."""

    mode: str
    partitions: list[PartitionResult]
    rough_cost: int
    final_cost: int
    points: int


class _FrameContext:
    """Shared state while estimating one frame."""

    def __init__(self, cur: LumaPlane, refs, params: EncodeParams, strategy: str,
                 stats: SearchStats, *, audit: bool = False, frame_index: int = 0):
        self.cur = cur.samples.astype(np.int16)
        self.refs = refs
        self.params = params
        self.strategy = strategy
        self.stats = stats
        self.audit = audit
        self.frame_index = frame_index
        self.lam = params.lam
        self.cells_x = cur.width // 4
        self.cells_y = cur.height // 4
        self.mv_field = np.zeros((self.cells_y, self.cells_x, 2), dtype=np.int32)
        self.avail = np.zeros((self.cells_y, self.cells_x), dtype=bool)
        self.searchers: dict[int, MbRefSearcher] = {}
        self.mb_x = 0
        self.mb_y = 0
        self.mb_index = 0

    def begin_mb(self, mb_x: int, mb_y: int, mb_index: int = 0) -> None:
        self.mb_x, self.mb_y, self.mb_index = mb_x, mb_y, mb_index
        self.searchers = {
            ri: MbRefSearcher(self.cur, ref, mb_x, mb_y, self.params.search_range, self.lam)
            for ri, ref in enumerate(self.refs)
        }

    def mv_at(self, cx: int, cy: int, overlay: dict) -> MotionVector | None:
        if not (0 <= cx < self.cells_x and 0 <= cy < self.cells_y):
            return None
        mv = overlay.get((cx, cy))
        if mv is not None:
            return mv
        if self.avail[cy, cx]:
            return MotionVector(int(self.mv_field[cy, cx, 0]), int(self.mv_field[cy, cx, 1]))
        return None

    def predict(self, px: int, py: int, w: int, overlay: dict) -> MotionVector:
        cx0, cy0 = px // 4, py // 4
        return predict_mv(
            self.mv_at(cx0 - 1, cy0, overlay),
            self.mv_at(cx0, cy0 - 1, overlay),
            self.mv_at(cx0 + w // 4, cy0 - 1, overlay),
        )

    def write_cells(self, px: int, py: int, w: int, h: int, mv: MotionVector,
                    overlay: dict) -> None:
        for cy in range(py // 4, (py + h) // 4):
            for cx in range(px // 4, (px + w) // 4):
                overlay[(cx, cy)] = mv

    def commit_cells(self, px: int, py: int, w: int, h: int, mv: MotionVector) -> None:
        cy0, cy1 = py // 4, (py + h) // 4
        cx0, cx1 = px // 4, (px + w) // 4
        self.mv_field[cy0:cy1, cx0:cx1, 0] = mv[0]
        self.mv_field[cy0:cy1, cx0:cx1, 1] = mv[1]
        self.avail[cy0:cy1, cx0:cx1] = True


def _rough_outcome(fctx: _FrameContext, ctx: SearchCtx, best_int: MotionVector,
                   cross: CostCross, blk_class: str) -> SubpelOutcome:
    s = fctx.strategy
    if s == "rfsme":
        return rfsme_rough(ctx, best_int, cross, blk_class, fctx.params.gates)
    if s == "ie_sme":
        return SubpelOutcome(best_int, cross.cost_full, 0, PATH_FLAT_SKIP, None)
    if s == "full":
        return full_subpel(ctx, best_int)
    if s == "cbfps":
        return cbfps_search(ctx, best_int)
    if s == "fpme":
        return fpme_search(ctx, cross, best_int)
    raise ValueError(f"unknown strategy: {s!r}")


def _search_partition(fctx: _FrameContext, mode_id: str, off_x: int, off_y: int,
                      w: int, h: int, overlay: dict) -> PartitionResult:
    px, py = fctx.mb_x + off_x, fctx.mb_y + off_y
    pred = fctx.predict(px, py, w, overlay)
    cls = block_class(w, h)
    cur_block = fctx.cur[py : py + h, px : px + w]
    trials = []
    for ri, ref in enumerate(fctx.refs):
        best_int, cross = fctx.searchers[ri].search(off_x, off_y, w, h, pred)
        ctx = make_ctx(
            cur_block, ref, (4 * px, 4 * py), pred, fctx.lam,
            fctx.params.mv_bound, best_int, cross,
        )
        outcome = _rough_outcome(fctx, ctx, best_int, cross, cls)
        trials.append((ri, best_int, cross, outcome, ctx))

    chosen = min(trials, key=lambda t: (t[3].cost, t[0]))
    ref_index, best_int, cross, outcome, ctx = chosen
    for ri, _bi, _cr, out, trial_ctx in trials:
        oracle = None
        if fctx.audit and ri == ref_index and out.mv_step2 is not None:
            oracle = exhaustive_best(trial_ctx, _bi)
        fctx.stats.record_partition(out, oracle)
        fctx.stats.record_detail(PartitionDetail(
            frame=fctx.frame_index, mb=fctx.mb_index, mode=mode_id, winner=False,
            rough_points=out.points, refine_points=0,
        ))

    res = PartitionResult(
        off_x=off_x, off_y=off_y, w=w, h=h, pred_mv=pred, ref_index=ref_index,
        best_int=best_int, cross=cross, outcome=outcome, ctx=ctx,
        rough_points=sum(t[3].points for t in trials),
    )
    fctx.write_cells(px, py, w, h, outcome.mv, overlay)
    return res


def _run_layout(fctx, mode_id, parts, overlay) -> tuple[list[PartitionResult], int]:
    results = [_search_partition(fctx, mode_id, ox, oy, w, h, overlay)
               for ox, oy, w, h in parts]
    return results, sum(r.outcome.cost for r in results)


def _estimate_mb(fctx: _FrameContext) -> MbModeResult:
    candidates = []
    for mode_id, parts in MODE_LAYOUTS:
        overlay: dict = {}
        results, total = _run_layout(fctx, mode_id, parts, overlay)
        candidates.append((total, len(candidates), mode_id, results))

    # P8x8: each 8x8 block picks its own sub-mode by summed rough cost
    overlay = {}
    p8_results: list[PartitionResult] = []
    p8_total = 0
    for bx, by in P8X8_BLOCKS:
        best_sub = None
        for order, (sub_id, sub_parts) in enumerate(SUB_MODE_LAYOUTS):
            sub_overlay = dict(overlay)
            parts = tuple((bx + ox, by + oy, w, h) for ox, oy, w, h in sub_parts)
            results, total = _run_layout(fctx, "p8x8." + sub_id, parts, sub_overlay)
            cand = (total, order, results, sub_overlay)
            if best_sub is None or cand[:2] < best_sub[:2]:
                best_sub = cand
        total, _, results, sub_overlay = best_sub
        overlay = sub_overlay
        p8_results.extend(results)
        p8_total += total
    candidates.append((p8_total, len(candidates), "p8x8", p8_results))

    rough_cost, _, mode_id, results = min(candidates, key=lambda c: (c[0], c[1]))

    # precise phase, winning partitions only
    for res in results:
        if fctx.strategy == "rfsme":
            before = res.ctx.points
            res.outcome = rfsme_refine(res.ctx, res.outcome)
            res.refine_points = res.ctx.points - before
            res.refined = True
        elif fctx.strategy == "ie_sme":
            before = res.ctx.points
            res.outcome = full_subpel(res.ctx, res.best_int)
            res.refine_points = res.ctx.points - before
            res.refined = True
        fctx.stats.record_winner(res.refine_points, res.refined)
        fctx.stats.record_detail(PartitionDetail(
            frame=fctx.frame_index, mb=fctx.mb_index, mode=mode_id, winner=True,
            rough_points=res.outcome.points - res.refine_points,
            refine_points=res.refine_points,
        ))

    for res in results:
        px, py = fctx.mb_x + res.off_x, fctx.mb_y + res.off_y
        fctx.commit_cells(px, py, res.w, res.h, res.outcome.mv)

    final_cost = sum(r.outcome.cost for r in results)
    points = sum(r.rough_points + r.refine_points for r in results)
    return MbModeResult(mode_id, results, rough_cost, final_cost, points)


def estimate_mb(cur: LumaPlane, mb_x: int, mb_y: int, strategy: str,
                refs: list[PaddedReference],
                params: EncodeParams | None = None) -> MbModeResult:
    """Estimate one macroblock with a rough/precise strategy (rfsme or ie_sme)."""
    if strategy not in ROUGH_PRECISE_STRATEGIES:
        raise ValueError(f"estimate_mb expects a rough/precise strategy, got {strategy!r}")
    return _estimate_single_mb(cur, mb_x, mb_y, strategy, refs, params)


def baseline_estimate_mb(cur: LumaPlane, mb_x: int, mb_y: int, strategy: str,
                         refs: list[PaddedReference],
                         params: EncodeParams | None = None) -> MbModeResult:
    """Estimate one macroblock with a complete-before-selection baseline strategy."""
    if strategy not in BASELINE_STRATEGIES:
        raise ValueError(f"baseline_estimate_mb expects one of {BASELINE_STRATEGIES}")
    return _estimate_single_mb(cur, mb_x, mb_y, strategy, refs, params)


def _estimate_single_mb(cur, mb_x, mb_y, strategy, refs, params) -> MbModeResult:
    params = params or EncodeParams()
    fctx = _FrameContext(cur, refs, params, strategy, SearchStats())
    fctx.begin_mb(mb_x, mb_y)
    return _estimate_mb(fctx)


def estimate_sequence(planes: list[LumaPlane], strategy: str,
                      params: EncodeParams | None = None, *, audit: bool = False,
                      collect_details: bool = False) -> SearchStats:
    """Run one strategy over a sequence with previous-original-frame references.

    Frame 0 is never predicted.  Frame t uses the originals of frames
    t-1 ... t-refs as references.  Returns the aggregated statistics, including
    the motion-compensated prediction PSNR accumulators.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")
    params = params or EncodeParams()
    stats = SearchStats(details=[] if collect_details else None)
    width, height = planes[0].width, planes[0].height
    for p in planes:
        if (p.width, p.height) != (width, height):
            raise ValueError("inconsistent plane dimensions in sequence")

    padded: dict[int, PaddedReference] = {}
    for t in range(1, len(planes)):
        ref_ids = [t - 1 - k for k in range(params.refs) if t - 1 - k >= 0]
        for i in ref_ids:
            if i not in padded:
                padded[i] = build_padded(planes[i], params.search_range)
        for i in list(padded):
            if i < t - params.refs:
                del padded[i]
        refs = [padded[i] for i in ref_ids]

        fctx = _FrameContext(
            planes[t], refs, params, strategy, stats, audit=audit, frame_index=t
        )
        prediction = np.empty((height, width), dtype=np.uint8)
        frame_cost = 0
        frame_points = 0
        frame_parts = 0
        points_before = stats.points
        parts_before = stats.partitions
        mb_index = 0
        for mb_y in range(0, height, MB_SIZE):
            for mb_x in range(0, width, MB_SIZE):
                fctx.begin_mb(mb_x, mb_y, mb_index)
                result = _estimate_mb(fctx)
                frame_cost += result.final_cost
                for res in result.partitions:
                    px, py = mb_x + res.off_x, mb_y + res.off_y
                    ref = refs[res.ref_index]
                    block = ref.fetch_block(
                        QuarterPos(4 * px + res.outcome.mv[0], 4 * py + res.outcome.mv[1]),
                        res.w, res.h,
                    )
                    prediction[py : py + res.h, px : px + res.w] = block.astype(np.uint8)
                mb_index += 1
        frame_points = stats.points - points_before
        frame_parts = stats.partitions - parts_before
        d = np.subtract(planes[t].samples, prediction, dtype=np.int64)
        stats.record_frame(
            t, frame_cost, frame_points, frame_parts, int((d * d).sum()), d.size
        )
    return stats
