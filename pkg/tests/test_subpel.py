import numpy as np
import pytest

from subpelme.cost_model import LambdaModel, MotionVector
from subpelme.integer_me import (
    BLOCK_TYPE_LARGE,
    BLOCK_TYPE_SMALL,
    CostCross,
    PartitionJob,
    full_search,
    mv_tie_key,
)
from subpelme.interpolation import build_padded
from subpelme.subpel import (
    GateParams,
    PATH_FLAT_SKIP,
    PATH_FULL,
    PATH_STEP2_STOP,
    PATH_STEP3,
    bilinear_picks,
    cbfps_offset,
    cbfps_search,
    drop_gate,
    flatness_gate,
    fpme_search,
    full_subpel,
    make_ctx,
    quad_offset,
    rfsme_refine,
    rfsme_rough,
)
from subpelme.video_io import make_plane

MV = MotionVector
LAM = LambdaModel.from_qp(28)
GATES = GateParams()


def _cross(full, left, right, up, down):
    return CostCross(cost_full=full, cost_left=left, cost_right=right,
                     cost_up=up, cost_down=down)


# --- predictors ---------------------------------------------------------

def test_cbfps_offset_examples():
    assert cbfps_offset(MV(5, -3), MV(4, 0)) == MV(1, -3)
    assert cbfps_offset(MV(4, 0), MV(4, 0)) == MV(0, 0)
    # truncated remainder keeps the dividend's sign: (-9) % 4 -> -1
    assert cbfps_offset(MV(-9, 8), MV(0, 8)) == MV(-1, 0)


def test_cbfps_offset_range():
    rng = np.random.default_rng(0)
    for _ in range(200):
        pred = MV(int(rng.integers(-67, 68)), int(rng.integers(-67, 68)))
        best = MV(4 * int(rng.integers(-16, 17)), 4 * int(rng.integers(-16, 17)))
        off = cbfps_offset(pred, best)
        assert -3 <= off[0] <= 3 and -3 <= off[1] <= 3


def test_quad_offset_symmetric_axis_is_zero():
    assert quad_offset(_cross(100, 120, 120, 130, 105))[0] == 0


def test_quad_offset_worked_example():
    # differences I=20 J=10 K=30 L=5 give x=-1/6 px, y=-5/14 px -> (-1,-1)
    cross = _cross(100, 110, 120, 105, 130)
    assert quad_offset(cross) == MV(-1, -1)


def test_quad_offset_zero_denominator():
    assert quad_offset(_cross(100, 100, 100, 100, 100)) == MV(0, 0)


def test_quad_offset_recovers_quadratic_minima():
    # exact separable parabola sampled at the cross recovers its minimizer
    # to within quarter-pel quantization
    for a, b in ((200, 200), (400, 120), (150, 600)):
        for x0 in np.linspace(-0.75, 0.75, 13):
            for y0 in np.linspace(-0.75, 0.75, 13):
                def f(x, y):
                    return round(a * (x - x0) ** 2 + b * (y - y0) ** 2 + 500)
                cross = _cross(f(0, 0), f(-1, 0), f(1, 0), f(0, -1), f(0, 1))
                off = quad_offset(cross)
                assert abs(off[0] - 4 * x0) <= 1.0
                assert abs(off[1] - 4 * y0) <= 1.0


# --- gates --------------------------------------------------------------

def test_flatness_gate_examples():
    # type_ii, averages close to the center: flat
    assert flatness_gate(_cross(100, 106, 106, 104, 104), BLOCK_TYPE_LARGE, GATES)
    # type_i with one average 140 > 125: not flat
    assert not flatness_gate(_cross(100, 140, 140, 112, 112), BLOCK_TYPE_SMALL, GATES)
    # exactly flat cross: flat for both classes
    for cls in (BLOCK_TYPE_SMALL, BLOCK_TYPE_LARGE):
        assert flatness_gate(_cross(100, 100, 100, 100, 100), cls, GATES)


def test_flatness_gate_threshold_depends_on_class():
    # |100 - 115| = 15 sits between th1=10 and th2=20
    cross = _cross(100, 115, 115, 115, 115)
    assert not flatness_gate(cross, BLOCK_TYPE_SMALL, GATES)
    assert flatness_gate(cross, BLOCK_TYPE_LARGE, GATES)


def test_drop_gate_examples():
    cross = _cross(100, 120, 120, 110, 110)
    # D=5 <= 10 and averages below 1.5*95: small
    assert not drop_gate(95, 100, cross, BLOCK_TYPE_LARGE, GATES)
    # equal costs, flat cross: small
    flat = _cross(100, 100, 100, 100, 100)
    assert not drop_gate(100, 100, flat, BLOCK_TYPE_LARGE, GATES)
    # type_i with D=6 > th1/2: large
    assert drop_gate(94, 100, cross, BLOCK_TYPE_SMALL, GATES)


def test_drop_gate_ratio_condition():
    # flat d only by thresholds, but steep neighbors trip the ratio test
    steep = _cross(100, 400, 400, 400, 400)
    assert drop_gate(100, 100, steep, BLOCK_TYPE_LARGE, GATES)


def test_gates_deterministic_pure_integers():
    cross = _cross(101, 127, 133, 119, 111)
    for _ in range(3):
        assert flatness_gate(cross, BLOCK_TYPE_SMALL, GATES) == flatness_gate(
            cross, BLOCK_TYPE_SMALL, GATES
        )
        assert drop_gate(97, 101, cross, BLOCK_TYPE_LARGE, GATES) == drop_gate(
            97, 101, cross, BLOCK_TYPE_LARGE, GATES
        )


# --- bilinear probe selection -------------------------------------------

def test_bilinear_smaller_slope_side_wins():
    # min at quarter-x 2 between integers at 0 and 4; left slope 10/2 beats 40/2
    cross = _cross(100, 999, 130, 999, 999)
    h_pick, v_pick = bilinear_picks(MV(2, 0), 90, cross, MV(0, 0))
    assert h_pick == MV(1, 0)


def test_bilinear_unequal_distances():
    # at quarter-x 1 the flank distances are 1 and 3
    cross = _cross(100, 999, 130, 999, 999)
    # S_back = |100-90|/1 = 10, S_fwd = |130-90|/3 = 13.3 -> back side
    h_pick, _ = bilinear_picks(MV(1, 0), 90, cross, MV(0, 0))
    assert h_pick == MV(0, 0)
    # with a cheap forward flank the forward side wins
    cross2 = _cross(100, 999, 95, 999, 999)
    h_pick, _ = bilinear_picks(MV(1, 0), 90, cross2, MV(0, 0))
    assert h_pick == MV(2, 0)


def test_bilinear_tie_goes_toward_best_integer():
    # cost_min 110 makes both slopes |100-110|/2 and |120-110|/2 equal
    cross = _cross(100, 120, 120, 120, 120)
    h_pick, v_pick = bilinear_picks(MV(2, 2), 110, cross, MV(0, 0))
    assert h_pick == MV(1, 2)
    assert v_pick == MV(2, 1)


def test_bilinear_degenerate_axis_uses_both_flanks():
    # mv on the integer column: flanks sit 4 quarters away on both sides
    cross = _cross(100, 110, 170, 110, 170)
    h_pick, v_pick = bilinear_picks(MV(0, 0), 100, cross, MV(0, 0))
    assert h_pick == MV(-1, 0)
    assert v_pick == MV(0, -1)


# --- strategy runs on real blocks ----------------------------------------

def _setup(seed=0, w=16, h=16, shift=None, pred=MV(0, 0), srange=8):
    rng = np.random.default_rng(seed)
    ref = rng.integers(0, 256, (64, 64)).astype(np.uint8)
    if shift is None:
        cur = ref.copy()
    else:
        cur = np.roll(ref, shift, axis=(0, 1))
    plane = make_plane(cur)
    padded = build_padded(make_plane(ref), srange)
    job = PartitionJob(mb_x=16, mb_y=16, off_x=0, off_y=0, w=w, h=h, pred_mv=pred)
    best_int, cross = full_search(job, plane, padded, srange, LAM)
    ctx = make_ctx(
        plane.samples.astype(np.int16)[16 : 16 + h, 16 : 16 + w],
        padded, (64, 64), pred, LAM, 4 * srange + 3, best_int, cross,
    )
    return ctx, best_int, cross


def brute_force_box(ctx, best_int, radius=3):
    pool = []
    for dy in range(-radius, radius + 1):
        for dx in range(-radius, radius + 1):
            mv = MV(best_int[0] + dx, best_int[1] + dy)
            if ctx.legal(mv):
                pool.append((ctx.raw_cost(mv), mv))
    return min(pool, key=lambda t: mv_tie_key(t[0], t[1]))[1]


def test_full_subpel_sixteen_points_always():
    for seed in range(6):
        ctx, best_int, _ = _setup(seed=seed, shift=(0, seed % 3))
        out = full_subpel(ctx, best_int)
        assert out.points == 16
        assert out.path == PATH_FULL


def test_full_subpel_static_returns_zero_mv():
    ctx, best_int, _ = _setup(seed=3)
    assert best_int == MV(0, 0)
    out = full_subpel(ctx, best_int)
    assert out.mv == MV(0, 0)


def test_full_subpel_equals_bruteforce_over_its_candidates():
    for seed in range(5):
        ctx, best_int, _ = _setup(seed=seed + 20, shift=(1, 1))
        out = full_subpel(ctx, best_int)
        # rebuild the same 17-candidate set independently
        halves = [MV(best_int[0] + dx, best_int[1] + dy)
                  for dy in (-2, 0, 2) for dx in (-2, 0, 2) if (dx, dy) != (0, 0)]
        pool = [(ctx.raw_cost(best_int), best_int)]
        pool += [(ctx.raw_cost(m), m) for m in halves]
        center = min(pool, key=lambda t: mv_tie_key(t[0], t[1]))[1]
        quarters = [MV(center[0] + dx, center[1] + dy)
                    for dy in (-1, 0, 1) for dx in (-1, 0, 1) if (dx, dy) != (0, 0)]
        pool += [(ctx.raw_cost(m), m) for m in quarters]
        want_cost, want_mv = min(pool, key=lambda t: mv_tie_key(t[0], t[1]))
        assert (out.mv, out.cost) == (want_mv, want_cost)


def test_walker_stops_when_start_optimal():
    ctx, best_int, cross = _setup(seed=9)
    out = cbfps_search(ctx, best_int)
    assert out.points <= 5
    assert out.mv == MV(0, 0)


def test_walker_matches_greedy_oracle():
    for seed in range(6):
        ctx, best_int, cross = _setup(seed=seed + 40, shift=(0, 1),
                                      pred=MV(int(seed) - 3, 2))
        out = fpme_search(ctx, cross, best_int)
        # replay the same greedy diamond walk naively
        off = quad_offset(cross)
        center = MV(best_int[0] + off[0], best_int[1] + off[1])
        seen = {center: ctx.raw_cost(center)}
        for _ in range(3):
            cands = [center] + [MV(center[0] + d[0], center[1] + d[1])
                                for d in ((-1, 0), (1, 0), (0, -1), (0, 1))]
            for m in cands:
                if ctx.legal(m) and m not in seen:
                    seen[m] = ctx.raw_cost(m)
            pool = [(seen[m], m) for m in cands if m in seen]
            best = min(pool, key=lambda t: mv_tie_key(t[0], t[1]))[1]
            if best == center:
                break
            center = best
        pool = [(seen[center], center), (ctx.raw_cost(best_int), best_int)]
        want = min(pool, key=lambda t: mv_tie_key(t[0], t[1]))
        assert (out.cost, out.mv) == want


def test_rfsme_flat_cross_skips():
    ctx, best_int, _ = _setup(seed=1)
    flat = _cross(500, 505, 505, 503, 503)
    out = rfsme_rough(ctx, best_int, flat, BLOCK_TYPE_LARGE, GATES)
    assert out.path == PATH_FLAT_SKIP
    assert out.points == 0
    assert out.mv == best_int
    assert out.mv_step2 is None


def test_rfsme_degenerate_predictors_small_drop_stops():
    ctx, best_int, _ = _setup(seed=2)
    # not flat (|500-530| > th2) yet both predictors collapse to the integer MV
    # and the drop gate sees D=0 with mild slopes
    cross = _cross(500, 530, 530, 530, 530)
    out = rfsme_rough(ctx, best_int, cross, BLOCK_TYPE_LARGE, GATES)
    assert out.path == PATH_STEP2_STOP
    assert out.points == 0
    assert out.cost == cross.cost_full
    assert out.mv_step2 == best_int


def test_rfsme_points_bounded_by_four():
    for seed in range(12):
        rng = np.random.default_rng(seed + 500)
        pred = MV(int(rng.integers(-20, 21)), int(rng.integers(-20, 21)))
        ctx, best_int, cross = _setup(seed=seed, w=8, h=8, shift=(1, 2), pred=pred)
        out = rfsme_rough(ctx, best_int, cross, BLOCK_TYPE_SMALL, GATES)
        assert 0 <= out.points <= 4
        assert out.path in (PATH_FLAT_SKIP, PATH_STEP2_STOP, PATH_STEP3)


def test_rfsme_reported_cost_matches_position():
    for seed in range(8):
        ctx, best_int, cross = _setup(seed=seed + 60, shift=(2, 1), pred=MV(3, -2))
        out = rfsme_rough(ctx, best_int, cross, BLOCK_TYPE_LARGE, GATES)
        assert out.cost == ctx.raw_cost(out.mv)
        assert out.cost <= cross.cost_full


def test_rfsme_refine_improves_or_keeps():
    for seed in range(8):
        ctx, best_int, cross = _setup(seed=seed + 80, shift=(1, 0), pred=MV(1, 1))
        rough = rfsme_rough(ctx, best_int, cross, BLOCK_TYPE_LARGE, GATES)
        refined = rfsme_refine(ctx, rough)
        assert refined.cost <= rough.cost
        assert refined.points - rough.points <= 8
        # refinement equals brute force over the rough MV's 3x3 neighborhood
        pool = [(ctx.raw_cost(rough.mv), rough.mv)]
        for dy in (-1, 0, 1):
            for dx in (-1, 0, 1):
                m = MV(rough.mv[0] + dx, rough.mv[1] + dy)
                if ctx.legal(m):
                    pool.append((ctx.raw_cost(m), m))
        want_cost, want_mv = min(pool, key=lambda t: mv_tie_key(t[0], t[1]))
        assert (refined.mv, refined.cost) == (want_mv, want_cost)


def test_rfsme_refine_dedups_known_positions():
    ctx, best_int, cross = _setup(seed=99)
    rough = rfsme_rough(ctx, best_int, cross, BLOCK_TYPE_LARGE, GATES)
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            ctx.evaluate(MV(rough.mv[0] + dx, rough.mv[1] + dy))
    before = ctx.points
    refined = rfsme_refine(ctx, rough)
    assert ctx.points == before
    assert refined.points == before


def test_step3_candidates_bounded_by_mv_limit():
    # an integer best on the window edge must not probe beyond the legal bound
    rng = np.random.default_rng(123)
    ref = rng.integers(0, 256, (64, 64)).astype(np.uint8)
    cur = np.roll(ref, (0, 5), axis=(0, 1))
    plane = make_plane(cur)
    padded = build_padded(make_plane(ref), 4)
    job = PartitionJob(mb_x=16, mb_y=16, off_x=0, off_y=0, w=16, h=16,
                       pred_mv=MV(-9, 0))
    best_int, cross = full_search(job, plane, padded, 4, LAM)
    ctx = make_ctx(plane.samples.astype(np.int16)[16:32, 16:32], padded,
                   (64, 64), MV(-9, 0), LAM, 4 * 4 + 3, best_int, cross)
    seeds = set(ctx.cache)
    out = rfsme_rough(ctx, best_int, cross, BLOCK_TYPE_LARGE, GATES)
    bound = 4 * 4 + 3
    for mv in ctx.cache:
        if mv not in seeds:
            assert abs(mv[0]) <= bound and abs(mv[1]) <= bound


def test_gate_params_validation():
    with pytest.raises(ValueError):
        GateParams(th1=0)
