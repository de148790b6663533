"""Quarter-pel reference access: 6-tap half-pel planes plus bilinear quarter samples.

A PaddedReference replicates the frame border so that every motion vector inside
the search range (plus the filter support) is evaluable, precomputes the three
half-pel grids once, and derives quarter-pel samples on the fly as rounded
averages of their two nearest integer/half neighbors.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

# extra padding beyond the search range: one pixel of neighbor slack plus the
# 6-tap filter reach on each side
PAD_MARGIN = 8


class QuarterPos(NamedTuple):
    """A position in quarter-pel units, origin at the plane's top-left sample."""

    x: int
    y: int


@dataclass(frozen=True)
class PaddedReference:
    """One reference frame with replicated borders and precomputed half-pel grids.

    All four grids share the same padded coordinate system: integer sample (x, y)
    of the source plane lives at array index [y + pad, x + pad].  half_h sits
    between columns x and x+1, half_v between rows y and y+1, half_d at the
    center of the four surrounding integer samples.  Immutable after
    construction, so concurrent fetches are safe.
    """

    width: int
    height: int
    pad: int
    search_range: int
    base: np.ndarray
    half_h: np.ndarray
    half_v: np.ndarray
    half_d: np.ndarray

    def fetch_block(self, pos: QuarterPos, w: int, h: int) -> np.ndarray:
        """Return the (h, w) int16 prediction block at a quarter-pel position.

        Raises IndexError if the block would leave the padded area; that is a
        caller bug, not a recoverable input condition.
        """
        xi, xf = pos[0] >> 2, pos[0] & 3
        yi, yf = pos[1] >> 2, pos[1] & 3
        c = xi + self.pad
        r = yi + self.pad
        rows, cols = self.base.shape
        if r < 0 or c < 0 or r + h + 1 > rows or c + w + 1 > cols:
            raise IndexError(
                f"block {w}x{h} at quarter-pel {tuple(pos)} leaves the padded area"
            )
        first, second = _FETCH_TABLE[yf * 4 + xf]
        p0, dx0, dy0 = first
        a = self._grids[p0][r + dy0 : r + dy0 + h, c + dx0 : c + dx0 + w]
        if second is None:
            return a
        p1, dx1, dy1 = second
        b = self._grids[p1][r + dy1 : r + dy1 + h, c + dx1 : c + dx1 + w]
        return (a + b + 1) >> 1

    @property
    def _grids(self):
        return (self.base, self.half_h, self.half_v, self.half_d)


_F, _H, _V, _D = 0, 1, 2, 3

# (xf, yf) -> one or two (grid, dx, dy) sources; two sources are averaged with
# rounding.  Indexed by yf*4 + xf.
_FETCH_TABLE = [None] * 16
_FETCH_TABLE[0 * 4 + 0] = ((_F, 0, 0), None)
_FETCH_TABLE[0 * 4 + 1] = ((_F, 0, 0), (_H, 0, 0))
_FETCH_TABLE[0 * 4 + 2] = ((_H, 0, 0), None)
_FETCH_TABLE[0 * 4 + 3] = ((_H, 0, 0), (_F, 1, 0))
_FETCH_TABLE[1 * 4 + 0] = ((_F, 0, 0), (_V, 0, 0))
_FETCH_TABLE[2 * 4 + 0] = ((_V, 0, 0), None)
_FETCH_TABLE[3 * 4 + 0] = ((_V, 0, 0), (_F, 0, 1))
_FETCH_TABLE[1 * 4 + 1] = ((_H, 0, 0), (_V, 0, 0))
_FETCH_TABLE[1 * 4 + 3] = ((_H, 0, 0), (_V, 1, 0))
_FETCH_TABLE[3 * 4 + 1] = ((_H, 0, 1), (_V, 0, 0))
_FETCH_TABLE[3 * 4 + 3] = ((_H, 0, 1), (_V, 1, 0))
_FETCH_TABLE[1 * 4 + 2] = ((_H, 0, 0), (_D, 0, 0))
_FETCH_TABLE[3 * 4 + 2] = ((_D, 0, 0), (_H, 0, 1))
_FETCH_TABLE[2 * 4 + 1] = ((_V, 0, 0), (_D, 0, 0))
_FETCH_TABLE[2 * 4 + 3] = ((_D, 0, 0), (_V, 1, 0))
_FETCH_TABLE[2 * 4 + 2] = ((_D, 0, 0), None)


def _six_tap(a: np.ndarray, axis: int) -> np.ndarray:
    # kernel (1, -5, 20, 20, -5, 1); output index i is the half sample between
    # input indices i+2 and i+3 along the filtered axis
    if axis == 1:
        return (
            (a[:, 0:-5] + a[:, 5:])
            - 5 * (a[:, 1:-4] + a[:, 4:-1])
            + 20 * (a[:, 2:-3] + a[:, 3:-2])
        )
    return (
        (a[0:-5, :] + a[5:, :])
        - 5 * (a[1:-4, :] + a[4:-1, :])
        + 20 * (a[2:-3, :] + a[3:-2, :])
    )


def _clip8(a: np.ndarray) -> np.ndarray:
    return np.clip(a, 0, 255).astype(np.int16)


def build_padded(ref, search_range: int) -> PaddedReference:
    """Pad a luma plane by replication and precompute its three half-pel grids.

    Horizontal/vertical half samples are (sum + 16) >> 5 of the 6-tap output,
    clipped to [0, 255].  The diagonal grid filters the unclipped, unshifted
    horizontal sums vertically and normalizes with (sum + 512) >> 10.
    """
    samples = ref.samples if hasattr(ref, "samples") else np.asarray(ref)
    if samples.dtype != np.uint8:
        samples = samples.astype(np.uint8)
    if search_range < 1:
        raise ValueError("search_range must be positive")
    h, w = samples.shape
    pad = search_range + PAD_MARGIN
    # temporary extra margin of 3 covers the filter taps of the outermost
    # padded samples; replication of replicated samples is idempotent
    tmp = np.pad(samples, pad + 3, mode="edge").astype(np.int32)

    hsum = _six_tap(tmp, axis=1)            # (h+2p+6, w+2p+1)
    vsum = _six_tap(tmp, axis=0)            # (h+2p+1, w+2p+6)
    dsum = _six_tap(hsum, axis=0)           # (h+2p+1, w+2p+1)

    half_h = _clip8((hsum[3:-3, 1:] + 16) >> 5)
    half_v = _clip8((vsum[1:, 3:-3] + 16) >> 5)
    half_d = _clip8((dsum[1:, 1:] + 512) >> 10)
    base = tmp[3:-3, 3:-3].astype(np.int16)

    for grid in (base, half_h, half_v, half_d):
        grid.setflags(write=False)
    return PaddedReference(
        width=w,
        height=h,
        pad=pad,
        search_range=search_range,
        base=base,
        half_h=half_h,
        half_v=half_v,
        half_d=half_d,
    )
