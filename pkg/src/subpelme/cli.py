"""Benchmark CLI: run strategy comparisons over a sequence and emit CSV + markdown.

Reports are byte-identical for identical flags, independent of the worker count.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from pathlib import Path

from .mode_decision import STRATEGIES, EncodeParams, estimate_sequence
from .stats import SearchStats
from .subpel import GateParams
from .video_io import SequenceConfig, SequenceError, load_sequence


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="subpelme",
        description="Compare sub-pixel motion-estimation strategies on a sequence.",
    )
    p.add_argument("--input", required=True,
                   help="path to .yuv/.y4m, or synth:static | "
                        "synth:global-shift[:vx,vy[,noise]] | synth:textured-drift[:noise]")
    p.add_argument("--width", type=int, default=176)
    p.add_argument("--height", type=int, default=144)
    p.add_argument("--frames", type=int, default=100)
    p.add_argument("--qp", type=int, default=28)
    p.add_argument("--range", type=int, default=None, dest="search_range",
                   help="integer search range in pixels (default: 16 if width <= 176 else 32)")
    p.add_argument("--refs", type=int, default=1)
    p.add_argument("--methods", default="full,cbfps,fpme,ie_sme,rfsme",
                   help="comma-separated subset of: " + ",".join(STRATEGIES))
    p.add_argument("--audit", action="store_true",
                   help="also measure the predicted-MV distance histogram (slow)")
    p.add_argument("--out", default="report", help="output base path (writes .csv and .md)")
    p.add_argument("--seed", type=int, default=1234)
    p.add_argument("--th1", type=int, default=10)
    p.add_argument("--th2", type=int, default=20)
    p.add_argument("--rf", default="5/4", help="flatness-gate ratio as NUM/DEN")
    p.add_argument("--rd", default="3/2", help="drop-gate ratio as NUM/DEN")
    p.add_argument("--workers", type=int, default=1,
                   help="strategies run in parallel; the report is identical for any value")
    return p


def _parse_ratio(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as e:
        raise SequenceError(f"bad ratio {text!r}: {e}") from None


def run(args) -> tuple[str, str]:
    """Execute the configured comparison; returns (csv_text, markdown_text)."""
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    for m in methods:
        if m not in STRATEGIES:
            raise SequenceError(f"unknown method {m!r}; expected one of {STRATEGIES}")
    if not methods:
        raise SequenceError("no methods requested")

    search_range = args.search_range
    if search_range is None:
        search_range = 16 if args.width <= 176 else 32

    cfg = SequenceConfig(
        source=args.input, frame_count=args.frames,
        width=args.width, height=args.height, seed=args.seed,
    )
    planes = load_sequence(cfg)
    params = EncodeParams(
        qp=args.qp, search_range=search_range, refs=args.refs,
        gates=GateParams(
            th1=args.th1, th2=args.th2,
            r_flat=_parse_ratio(args.rf), r_drop=_parse_ratio(args.rd),
        ),
    )

    def one(method: str) -> SearchStats:
        return estimate_sequence(planes, method, params, audit=args.audit)

    if args.workers > 1:
        with ThreadPoolExecutor(max_workers=args.workers) as ex:
            results = list(ex.map(one, methods))
    else:
        results = [one(m) for m in methods]

    rows = [_report_row(m, s, args) for m, s in zip(methods, results)]
    return _to_csv(rows, args.audit), _to_markdown(rows, args.audit)


_COLUMNS = ("strategy", "refs", "frames", "partitions", "points",
            "sp_per_pt", "total_cost", "mc_psnr_db")
_AUDIT_COLUMNS = ("d0_pct", "d1_pct", "d2_pct")


def _fmt_psnr(v: float) -> str:
    return "inf" if v == float("inf") else f"{v:.4f}"


def _report_row(method: str, s: SearchStats, args) -> dict:
    row = {
        "strategy": method,
        "refs": str(args.refs),
        "frames": str(s.frames),
        "partitions": str(s.partitions),
        "points": str(s.points),
        "sp_per_pt": f"{s.sp_per_pt:.4f}",
        "total_cost": str(s.total_cost),
        "mc_psnr_db": _fmt_psnr(s.mc_pred_psnr),
    }
    if args.audit:
        d0, d1, d2 = s.hist_shares()
        row["d0_pct"] = f"{100 * d0:.2f}"
        row["d1_pct"] = f"{100 * d1:.2f}"
        row["d2_pct"] = f"{100 * d2:.2f}"
    return row


def _to_csv(rows, audit: bool) -> str:
    cols = _COLUMNS + (_AUDIT_COLUMNS if audit else ())
    lines = [",".join(cols)]
    lines += [",".join(r[c] for c in cols) for r in rows]
    return "\n".join(lines) + "\n"


def _to_markdown(rows, audit: bool) -> str:
    cols = _COLUMNS + (_AUDIT_COLUMNS if audit else ())
    widths = {c: max(len(c), *(len(r[c]) for r in rows)) for c in cols}
    head = "| " + " | ".join(c.ljust(widths[c]) for c in cols) + " |"
    sep = "|" + "|".join("-" * (widths[c] + 2) for c in cols) + "|"
    body = [
        "| " + " | ".join(r[c].ljust(widths[c]) for c in cols) + " |" for r in rows
    ]
    return "\n".join([head, sep] + body) + "\n"


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        csv_text, md_text = run(args)
    except (SequenceError, OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.with_suffix(".csv").write_text(csv_text)
    out.with_suffix(".md").write_text(md_text)
    sys.stdout.write(md_text)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
