"""Exhaustive integer-pel search per partition, with the four-neighbor cost cross.

The cross (best integer cost plus its left/right/up/down integer neighbors)
feeds every surface model and gate of the sub-pel stage.  Within one macroblock
and reference, per-candidate SADs are computed once for the sixteen 4x4 tiles
and summed into any partition geometry, so all 41 partition searches share one
window pass.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .cost_model import LambdaModel, MotionVector, lagrange_term, mv_bits, sad
from .interpolation import PaddedReference

BLOCK_TYPE_SMALL = "type_i"   # 8x8, 8x4, 4x8, 4x4
BLOCK_TYPE_LARGE = "type_ii"  # 16x16, 16x8, 8x16

_LARGE_SIZES = {(16, 16), (16, 8), (8, 16)}
PARTITION_SIZES = ((16, 16), (16, 8), (8, 16), (8, 8), (8, 4), (4, 8), (4, 4))


def block_class(w: int, h: int) -> str:
    if (w, h) not in set(PARTITION_SIZES):
        raise ValueError(f"not a legal partition size: {w}x{h}")
    return BLOCK_TYPE_LARGE if (w, h) in _LARGE_SIZES else BLOCK_TYPE_SMALL


@dataclass(frozen=True)
class PartitionJob:
    """One partition to estimate: macroblock position, offset within it, size."""

    mb_x: int
    mb_y: int
    off_x: int
    off_y: int
    w: int
    h: int
    ref_index: int = 0
    pred_mv: MotionVector = MotionVector(0, 0)

    @property
    def px(self) -> int:
        return self.mb_x + self.off_x

    @property
    def py(self) -> int:
        return self.mb_y + self.off_y

    @property
    def block_class(self) -> str:
        return block_class(self.w, self.h)


@dataclass(frozen=True)
class CostCross:
    """Best integer cost and the costs one integer pixel left/right/up/down of it.

    Neighbor averages are kept 2x-scaled (plain sums) so every comparison that
    consumes them stays in exact integer arithmetic.
    """

    cost_full: int
    cost_left: int
    cost_right: int
    cost_up: int
    cost_down: int

    @property
    def sum_horizontal(self) -> int:
        return self.cost_left + self.cost_right

    @property
    def sum_vertical(self) -> int:
        return self.cost_up + self.cost_down

    @property
    def avg_horizontal(self) -> float:
        return self.sum_horizontal / 2.0

    @property
    def avg_vertical(self) -> float:
        return self.sum_vertical / 2.0


_TIE_GRIDS: dict[int, np.ndarray] = {}
_SE_LUTS: dict[int, np.ndarray] = {}

# bits of the composite tie-break key below the cost field
_TIE_BITS = 28


def _tie_grid(search_range: int) -> np.ndarray:
    # total order on candidates of equal cost: smaller |y|, then |x|, then y, then x
    grid = _TIE_GRIDS.get(search_range)
    if grid is None:
        d = np.arange(-search_range, search_range + 1, dtype=np.int64)
        dy, dx = d[:, None], d[None, :]
        grid = (
            (np.abs(dy) << 21) | (np.abs(dx) << 14) | ((dy + 64) << 7) | (dx + 64)
        )
        _TIE_GRIDS[search_range] = grid
    return grid


def mv_tie_key(cost: int, mv: MotionVector) -> tuple:
    """The same candidate ordering as the full search, for scalar comparisons."""
    return (cost, abs(mv[1]), abs(mv[0]), mv[1], mv[0])


def _se_lut(max_abs: int) -> np.ndarray:
    lut = _SE_LUTS.get(max_abs)
    if lut is None:
        vals = np.arange(-max_abs, max_abs + 1)
        k = 2 * np.abs(vals) - (vals > 0)
        # frexp exponent of k+1 equals its bit length, exactly, unlike log2
        exp = np.frexp((k + 1).astype(np.float64))[1]
        lut = (2 * (exp.astype(np.int64) - 1) + 1).astype(np.int64)
        _SE_LUTS[max_abs] = lut
    return lut


class MbRefSearcher:
    """Shares per-candidate SAD tiles of one (macroblock, reference) pair.

    Partition SADs are exact integer sums of 4x4 tile SADs, so results are
    bit-identical to evaluating each partition independently.
    """

    def __init__(self, cur_frame: np.ndarray, ref: PaddedReference, mb_x: int, mb_y: int,
                 search_range: int, lam: LambdaModel):
        self.ref = ref
        self.mb_x = mb_x
        self.mb_y = mb_y
        self.search_range = search_range
        self.lam = lam
        self.cur_mb = cur_frame[mb_y : mb_y + 16, mb_x : mb_x + 16]
        r, pad = search_range, ref.pad
        region = ref.base[
            mb_y + pad - r : mb_y + pad + 16 + r, mb_x + pad - r : mb_x + pad + 16 + r
        ]
        win = sliding_window_view(region, (16, 16))
        diff = win - self.cur_mb[None, None]
        np.abs(diff, out=diff)
        n = 2 * r + 1
        self.sad4 = diff.reshape(n, n, 4, 4, 4, 4).sum(axis=(3, 5), dtype=np.int64)
        # aggregate the 4x4 tiles once into every partition geometry
        s4 = self.sad4
        self._s48 = s4[:, :, 0::2, :] + s4[:, :, 1::2, :]        # 4x8 tiles (n,n,2,4)
        self._s84 = s4[:, :, :, 0::2] + s4[:, :, :, 1::2]        # 8x4 tiles (n,n,4,2)
        self._s88 = self._s48[:, :, :, 0::2] + self._s48[:, :, :, 1::2]
        self._s168 = self._s88[:, :, :, 0] + self._s88[:, :, :, 1]
        self._s816 = self._s88[:, :, 0, :] + self._s88[:, :, 1, :]
        self._s1616 = self._s168[:, :, 0] + self._s168[:, :, 1]
        self._lut = _se_lut(8 * search_range + 8)
        self._lut_off = 8 * search_range + 8
        self._dq = 4 * np.arange(-r, r + 1, dtype=np.int64)
        self._key_base: dict[MotionVector, np.ndarray] = {}

    def sad_grid(self, off_x: int, off_y: int, w: int, h: int) -> np.ndarray:
        bx, by = off_x // 4, off_y // 4
        if w == 4:
            return self.sad4[:, :, by, bx] if h == 4 else self._s48[:, :, by // 2, bx]
        if w == 8:
            if h == 4:
                return self._s84[:, :, by, bx // 2]
            if h == 8:
                return self._s88[:, :, by // 2, bx // 2]
            return self._s816[:, :, bx // 2]
        if h == 8:
            return self._s168[:, :, by // 2]
        return self._s1616

    def _rate_tie_key(self, pred_mv: MotionVector) -> np.ndarray:
        # (rate_term << TIE_BITS) | tie, reused by every partition sharing pred_mv
        base = self._key_base.get(pred_mv)
        if base is None:
            bits_x = self._lut[self._dq - pred_mv[0] + self._lut_off]
            bits_y = self._lut[self._dq - pred_mv[1] + self._lut_off]
            rterm = np.floor(
                self.lam.lambda_motion * (bits_y[:, None] + bits_x[None, :]) + 0.5
            ).astype(np.int64)
            base = (rterm << _TIE_BITS) | _tie_grid(self.search_range)
            self._key_base[pred_mv] = base
        return base

    def search(self, off_x: int, off_y: int, w: int, h: int,
               pred_mv: MotionVector) -> tuple[MotionVector, CostCross]:
        r = self.search_range
        sad_g = self.sad_grid(off_x, off_y, w, h)
        key = (sad_g << _TIE_BITS) + self._rate_tie_key(pred_mv)
        iy, ix = divmod(int(np.argmin(key)), 2 * r + 1)
        best = MotionVector(4 * (ix - r), 4 * (iy - r))
        n = 2 * r + 1

        def neighbor(dix: int, diy: int) -> int:
            nx, ny = ix + dix, iy + diy
            if 0 <= nx < n and 0 <= ny < n:
                return int(key[ny, nx]) >> _TIE_BITS
            return self._eval_integer(
                off_x, off_y, w, h,
                MotionVector(best[0] + 4 * dix, best[1] + 4 * diy), pred_mv,
            )

        cross = CostCross(
            cost_full=int(key[iy, ix]) >> _TIE_BITS,
            cost_left=neighbor(-1, 0),
            cost_right=neighbor(1, 0),
            cost_up=neighbor(0, -1),
            cost_down=neighbor(0, 1),
        )
        return best, cross

    def _eval_integer(self, off_x, off_y, w, h, mv: MotionVector,
                      pred_mv: MotionVector) -> int:
        pad = self.ref.pad
        px, py = self.mb_x + off_x, self.mb_y + off_y
        rr = py + pad + (mv[1] >> 2)
        cc = px + pad + (mv[0] >> 2)
        block = self.ref.base[rr : rr + h, cc : cc + w]
        cur = self.cur_mb[off_y : off_y + h, off_x : off_x + w]
        return sad(cur, block) + lagrange_term(
            self.lam.lambda_motion, mv_bits(mv, pred_mv)
        )


def full_search(job: PartitionJob, cur, ref: PaddedReference, search_range: int,
                lam: LambdaModel) -> tuple[MotionVector, CostCross]:
    """Exhaustive search of all integer MVs in [-range, +range]^2 for one partition.

    Returns the minimum-cost MV (ties broken toward smaller |y|, then |x|, then
    y, then x) and its cost cross.  When the best MV sits on the window boundary
    the outside neighbor is still evaluated so the cross is always complete.
    """
    samples = cur.samples if hasattr(cur, "samples") else np.asarray(cur)
    cur_i16 = samples.astype(np.int16)
    searcher = MbRefSearcher(cur_i16, ref, job.mb_x, job.mb_y, search_range, lam)
    return searcher.search(job.off_x, job.off_y, job.w, job.h, job.pred_mv)
