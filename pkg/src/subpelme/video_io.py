"""Raw YUV 4:2:0 / Y4M ingestion (luma plane only) and deterministic synthetic sequences.

Motion estimation consumes luma only, so chroma bytes are skipped on load and
written as zeros on save.  All planes are macroblock aligned (16x16); other
dimensions are rejected rather than padded.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

MB_SIZE = 16

SYNTH_KINDS = ("static", "global-shift", "textured-drift")

# default per-frame motion of the global-shift generator, quarter-pel units
GLOBAL_SHIFT_VELOCITY = (8, 0)
# default temporal noise amplitude (uniform in [-n, n]) per generator kind
GLOBAL_SHIFT_NOISE = 10
TEXTURED_DRIFT_NOISE = 8
# temporal noise is constant over cells of this size (see _add_noise)
NOISE_BLOCK = 16

# drifting-window velocities of the textured-drift generator, quarter-pel/frame
DRIFT_VELOCITIES = ((1, 2), (-2, 1))


class SequenceError(ValueError):
    """Malformed sequence file, unsupported format, or invalid config."""


@dataclass(frozen=True)
class LumaPlane:
    """One 8-bit luma plane; samples is a read-only (height, width) uint8 array."""

    width: int
    height: int
    samples: np.ndarray


def make_plane(samples) -> LumaPlane:
    arr = np.asarray(samples)
    if arr.ndim != 2:
        raise SequenceError(f"luma plane must be 2-D, got shape {arr.shape}")
    h, w = arr.shape
    _validate_dims(w, h)
    if arr.dtype != np.uint8:
        if arr.min() < 0 or arr.max() > 255:
            raise SequenceError("luma samples out of [0, 255]")
        arr = arr.astype(np.uint8)
    else:
        arr = arr.copy()
    arr.setflags(write=False)
    return LumaPlane(width=w, height=h, samples=arr)


def _validate_dims(width, height) -> None:
    if width <= 0 or height <= 0:
        raise SequenceError(f"bad dimensions {width}x{height}")
    if width % MB_SIZE or height % MB_SIZE:
        raise SequenceError(
            f"dimensions {width}x{height} are not multiples of {MB_SIZE}"
        )


@dataclass(frozen=True)
class SequenceConfig:
    """Where a sequence comes from: a file path or a synth:<kind> generator id."""

    source: str
    frame_count: int
    width: int | None = None
    height: int | None = None
    seed: int = 1234

    def __post_init__(self):
        if self.frame_count < 2:
            raise SequenceError("frame_count must be >= 2 (one reference frame)")


def load_sequence(cfg: SequenceConfig) -> list[LumaPlane]:
    """Load exactly cfg.frame_count luma planes from a file or synthetic source."""
    if cfg.source.startswith("synth:"):
        kind, _ = parse_synth_source(cfg.source)
        return synth_sequence(kind, cfg)
    if cfg.source.endswith(".y4m"):
        return _load_y4m(cfg)
    return _load_raw(cfg)


def save_raw(planes: list[LumaPlane], path) -> None:
    """Write planes as raw planar I420 with zeroed chroma."""
    with open(path, "wb") as f:
        for p in planes:
            f.write(p.samples.tobytes())
            f.write(bytes(p.width * p.height // 2))


def _load_raw(cfg: SequenceConfig) -> list[LumaPlane]:
    if cfg.width is None or cfg.height is None:
        raise SequenceError("raw YUV input needs explicit width and height")
    _validate_dims(cfg.width, cfg.height)
    luma_size = cfg.width * cfg.height
    frame_size = luma_size * 3 // 2
    planes = []
    with open(cfg.source, "rb") as f:
        for _ in range(cfg.frame_count):
            buf = f.read(frame_size)
            if len(buf) < frame_size:
                raise SequenceError(
                    f"truncated file: {cfg.source} has fewer than "
                    f"{cfg.frame_count} frames of {cfg.width}x{cfg.height}"
                )
            y = np.frombuffer(buf, dtype=np.uint8, count=luma_size)
            planes.append(make_plane(y.reshape(cfg.height, cfg.width)))
    return planes


_Y4M_420 = {"420", "420jpeg", "420mpeg2", "420paldv"}


def _load_y4m(cfg: SequenceConfig) -> list[LumaPlane]:
    with open(cfg.source, "rb") as f:
        header = _read_line(f)
        if not header.startswith(b"YUV4MPEG2"):
            raise SequenceError(f"{cfg.source}: missing YUV4MPEG2 signature")
        width = height = None
        colorspace = "420"
        for tok in header.split()[1:]:
            t = tok.decode("ascii", "replace")
            if t.startswith("W"):
                width = int(t[1:])
            elif t.startswith("H"):
                height = int(t[1:])
            elif t.startswith("C"):
                colorspace = t[1:]
            # F (rate), I (interlacing), A (aspect), X (comment) are ignored
        if width is None or height is None:
            raise SequenceError(f"{cfg.source}: Y4M header lacks W/H tokens")
        if colorspace not in _Y4M_420:
            raise SequenceError(
                f"{cfg.source}: unsupported Y4M colorspace C{colorspace}"
            )
        if cfg.width is not None and cfg.width != width:
            raise SequenceError(f"{cfg.source}: width {width} != configured {cfg.width}")
        if cfg.height is not None and cfg.height != height:
            raise SequenceError(
                f"{cfg.source}: height {height} != configured {cfg.height}"
            )
        _validate_dims(width, height)
        luma_size = width * height
        planes = []
        for _ in range(cfg.frame_count):
            marker = _read_line(f)
            if not marker.startswith(b"FRAME"):
                raise SequenceError(f"truncated file: {cfg.source}")
            buf = f.read(luma_size * 3 // 2)
            if len(buf) < luma_size * 3 // 2:
                raise SequenceError(f"truncated file: {cfg.source}")
            y = np.frombuffer(buf, dtype=np.uint8, count=luma_size)
            planes.append(make_plane(y.reshape(height, width)))
    return planes


def _read_line(f) -> bytes:
    out = bytearray()
    while True:
        b = f.read(1)
        if not b:
            raise SequenceError("unexpected end of file in Y4M header")
        if b == b"\n":
            return bytes(out)
        out += b


_SYNTH_RE = re.compile(r"^synth:([a-z0-9-]+)(?::(.+))?$")


def parse_synth_source(source: str):
    """Split a synth:<kind>[:opts] id into (kind, options).

    global-shift options: "vx,vy[,noise]"; textured-drift options: "noise".
    """
    m = _SYNTH_RE.match(source)
    if not m:
        raise SequenceError(f"bad synthetic source id: {source!r}")
    kind, rest = m.group(1), m.group(2)
    if kind not in SYNTH_KINDS:
        raise SequenceError(f"unknown synthetic kind: {kind!r}")
    opts = {}
    if kind == "global-shift":
        opts["velocity"] = GLOBAL_SHIFT_VELOCITY
        opts["noise"] = GLOBAL_SHIFT_NOISE
        if rest:
            parts = rest.split(",")
            if len(parts) not in (2, 3):
                raise SequenceError(f"global-shift options must be vx,vy[,noise]: {rest!r}")
            opts["velocity"] = (int(parts[0]), int(parts[1]))
            if len(parts) == 3:
                opts["noise"] = int(parts[2])
        if max(abs(v) for v in opts["velocity"]) > 12:
            raise SequenceError("global-shift velocity limited to 12 quarter-pel/frame")
    elif kind == "textured-drift":
        opts["noise"] = TEXTURED_DRIFT_NOISE
        if rest:
            opts["noise"] = int(rest)
    elif rest:
        raise SequenceError(f"synth:static takes no options: {rest!r}")
    return kind, opts


def synth_sequence(kind: str, cfg: SequenceConfig) -> list[LumaPlane]:
    """Generate a deterministic test sequence; output depends only on (kind, cfg)."""
    width = cfg.width if cfg.width is not None else 176
    height = cfg.height if cfg.height is not None else 144
    _validate_dims(width, height)
    opts = {}
    if cfg.source.startswith("synth:"):
        src_kind, opts = parse_synth_source(cfg.source)
        if src_kind != kind:
            raise SequenceError(f"kind {kind!r} does not match source {cfg.source!r}")
    elif kind not in SYNTH_KINDS:
        raise SequenceError(f"unknown synthetic kind: {kind!r}")

    if kind == "static":
        tex = _texture(cfg.seed, width, height, blur_radius=2, lo=40, hi=215)
        plane = make_plane(tex)
        return [plane] * cfg.frame_count
    if kind == "global-shift":
        velocity = opts.get("velocity", GLOBAL_SHIFT_VELOCITY)
        noise = opts.get("noise", GLOBAL_SHIFT_NOISE)
        return _gen_global_shift(cfg, width, height, velocity, noise)
    if kind == "textured-drift":
        noise = opts.get("noise", TEXTURED_DRIFT_NOISE)
        return _gen_textured_drift(cfg, width, height, noise)
    raise SequenceError(f"unknown synthetic kind: {kind!r}")


def _gen_global_shift(cfg, width, height, velocity, noise):
    carrier = _texture(cfg.seed, width, height, blur_radius=3, lo=80, hi=176)
    frames = []
    for t in range(cfg.frame_count):
        frames.append(make_plane(_add_noise(carrier, cfg.seed, t, noise)))
        if t + 1 < cfg.frame_count:
            carrier = _shift_plane(carrier, velocity)
    return frames


def _gen_textured_drift(cfg, width, height, noise):
    background = _texture(cfg.seed, width, height, blur_radius=3, lo=72, hi=168)
    regions = drift_regions(width, height)
    carriers = [
        _texture(cfg.seed + 101 + i, width, height, blur_radius=1, lo=16, hi=239)
        for i in range(len(regions))
    ]
    frames = []
    for t in range(cfg.frame_count):
        img = background.copy()
        for (mbx, mby, mbw, mbh, _vel), car in zip(regions, carriers):
            sl = (
                slice(mby * MB_SIZE, (mby + mbh) * MB_SIZE),
                slice(mbx * MB_SIZE, (mbx + mbw) * MB_SIZE),
            )
            img[sl] = car[sl]
        frames.append(make_plane(_add_noise(img, cfg.seed, t, noise)))
        if t + 1 < cfg.frame_count:
            carriers = [
                _shift_plane(car, region[4])
                for region, car in zip(regions, carriers)
            ]
    return frames


def drift_regions(width, height):
    """Macroblock-aligned moving windows for textured-drift: (mbx, mby, mbw, mbh, vel)."""
    nx, ny = width // MB_SIZE, height // MB_SIZE
    rw, rh = max(1, nx // 3), max(1, ny // 3)
    x1, y1 = max(1, nx // 5), max(1, ny // 5)
    regions = [(x1, y1, rw, rh, DRIFT_VELOCITIES[0])]
    x2, y2 = x1 + rw + 1, min(y1 + rh, ny - rh - 1)
    if x2 + rw <= nx - 1 and y2 >= 1:
        regions.append((x2, y2, rw, rh, DRIFT_VELOCITIES[1]))
    return regions


def _texture(seed, width, height, blur_radius, lo, hi):
    rng = np.random.default_rng(np.random.SeedSequence((seed, 0xD1CE)))
    raw = rng.integers(lo, hi + 1, size=(height, width), dtype=np.int64)
    return _box_blur(raw, blur_radius, passes=2).astype(np.uint8)


def _box_blur(arr, radius, passes=1):
    # integer box filter with replicated edges; exact arithmetic so output is
    # bit-identical across platforms
    if radius <= 0:
        return arr
    k = 2 * radius + 1
    out = arr.astype(np.int64)
    h, w = out.shape
    for _ in range(passes):
        p = np.pad(out, radius, mode="edge")
        acc = np.zeros_like(out)
        for dy in range(k):
            for dx in range(k):
                acc += p[dy : dy + h, dx : dx + w]
        out = acc // (k * k)
    return out


def _shift_plane(arr, velocity_q):
    # moves content right/down by a quarter-pel vector, resampling with the same
    # kernel the motion search uses; frame t+1 is an exact sub-pel match of
    # frame t everywhere but the replicated band at the trailing border
    from .interpolation import QuarterPos, build_padded

    h, w = arr.shape
    padded = build_padded(arr, search_range=4)
    block = padded.fetch_block(QuarterPos(-velocity_q[0], -velocity_q[1]), w, h)
    return block.astype(np.uint8)


def _add_noise(img, seed, frame_index, amplitude):
    # temporal flicker held constant over macroblock-sized tiles: per-pixel
    # noise would reward fractional positions for smoothing alone and let tiny
    # partitions fit their own noise, neither of which real content does
    if amplitude <= 0:
        return img.copy()
    rng = np.random.default_rng(np.random.SeedSequence((seed, 0x0415E, frame_index)))
    h, w = img.shape
    b = NOISE_BLOCK
    coarse = rng.integers(-amplitude, amplitude + 1, size=(h // b, w // b), dtype=np.int16)
    noise = np.repeat(np.repeat(coarse, b, axis=0), b, axis=1)
    return np.clip(img.astype(np.int16) + noise, 0, 255).astype(np.uint8)
