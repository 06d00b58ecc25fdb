"""Command line: synth, codebook, stats, sweep.

Gains and GEF are printed in dBi, EF is unitless, angles are degrees.
"""

from __future__ import annotations

import argparse
import logging
import sys
import warnings
from pathlib import Path

import numpy as np

from .codebook import (DEFAULT_THRESHOLD, Codebook, build_codebook, check_compatible,
                       sweep_metrics, usage_stats)
from .combiners import DEFAULT_AMP_LEVELS, CombinerSpec, candidate_count
from .metrics import to_db
from .patterns import load_patterns, make_grid, save_patterns, synthesize_prototype_patterns

log = logging.getLogger("modeforge")


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _grid(text):
    try:
        t, p = (int(x) for x in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must look like 181x360, got {text!r}") from None
    if t < 3 or p < 1:
        raise argparse.ArgumentTypeError(f"grid {text} is too coarse (need T >= 3, P >= 1)")
    return t, p


def _amp_levels(text):
    try:
        return tuple(float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"amplitude levels must be comma separated numbers, got {text!r}") from None


def _threshold(text):
    v = float(text)
    if not 0 < v < 1:
        raise argparse.ArgumentTypeError(f"threshold must lie in (0, 1), got {v}")
    return v


def _print_hist(stats, out):
    parts = [f"{k} port{'s' if k != 1 else ''}: {p:.1f}%"
             for k, p in enumerate(stats.active_count_hist) if k > 0 or p > 0]
    print("active ports per target: " + ", ".join(parts), file=out)


def cmd_synth(args, out=None):
    out = out or sys.stdout
    grid = make_grid(*args.grid)
    pset = synthesize_prototype_patterns(args.ports, grid, args.seed)
    save_patterns(pset, args.output)
    print(f"wrote {pset.num_ports}-port pattern set on {args.grid[0]}x{args.grid[1]} grid "
          f"to {args.output} (fingerprint {pset.fingerprint[:12]})", file=out)


def cmd_codebook(args, out=None):
    out = out or sys.stdout
    pset = load_patterns(args.input)
    spec = CombinerSpec(args.scheme, args.criterion, args.phase_levels, args.amp_levels)
    if not (args.scheme == "digital" and args.criterion == "gain" and not args.search):
        log.info("searching %d candidates", candidate_count(spec, pset.num_ports))
    cb = build_codebook(pset, args.targets, spec, closed_form=not args.search)
    cb.save(args.output)
    print(f"wrote {len(cb)} entries ({spec.scheme}, {spec.criterion}) to {args.output}", file=out)
    print(f"{'metric':<10}{'min':>10}{'median':>10}{'max':>10}", file=out)
    for name, vals in (("gain_dbi", to_db(cb.gains)), ("ef", cb.efs), ("gef_dbi", to_db(cb.gefs))):
        if np.all(np.isnan(vals)):
            print(f"{name:<10}{'n/a':>10}{'n/a':>10}{'n/a':>10}", file=out)
            continue
        print(f"{name:<10}{np.nanmin(vals):>10.3f}{np.nanmedian(vals):>10.3f}"
              f"{np.nanmax(vals):>10.3f}", file=out)
    _print_hist(usage_stats(cb, args.threshold), out)


def cmd_stats(args, out=None):
    out = out or sys.stdout
    cb = Codebook.load(args.input)
    if args.patterns:
        check_compatible([cb], load_patterns(args.patterns))
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        stats = usage_stats(cb, args.threshold)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    print(f"port usage over {stats.num_targets} targets (|c|^2 > {stats.activity_threshold:g})",
          file=out)
    for m, pct in enumerate(stats.incidence, start=1):
        print(f"  port {m}: {pct:.1f}%", file=out)
    _print_hist(stats, out)
    if args.output:
        stem = Path(args.output)
        inc = stem.with_name(stem.name + ".incidence.csv")
        hist = stem.with_name(stem.name + ".hist.csv")
        stats.incidence_table().to_csv(inc, index=False)
        stats.histogram_table().to_csv(hist, index=False)
        print(f"wrote {inc} and {hist}", file=out)


def cmd_sweep(args, out=None):
    out = out or sys.stdout
    codebooks = [Codebook.load(p) for p in args.input]
    pset = load_patterns(args.patterns) if args.patterns else None
    names = [Path(p).stem for p in args.input] if args.names_from_files else None
    table = sweep_metrics(pset, codebooks, names=names, include_ports=args.ports)
    table.to_csv(args.output, index=False)
    print(f"wrote {len(table)} rows to {args.output}", file=out)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="modeforge",
        description="Port-weighting codebooks for multi-mode antennas.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="synthesize an orthonormal prototype pattern set")
    p.add_argument("-M", "--ports", type=_positive_int, default=4)
    p.add_argument("--grid", type=_grid, default=(181, 360), help="TxP, e.g. 181x360")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("codebook", help="optimize weights for a sweep of target angles")
    p.add_argument("-i", "--input", required=True, help="pattern file")
    p.add_argument("-o", "--output", default="codebook.json")
    p.add_argument("--scheme", choices=["digital", "hybrid", "analog", "selection"],
                   default="digital")
    p.add_argument("--criterion", choices=["gain", "ef", "gef"], default="gain")
    p.add_argument("--phase-levels", type=_positive_int, default=None)
    p.add_argument("--amp-levels", type=_amp_levels, default=DEFAULT_AMP_LEVELS)
    p.add_argument("--targets", type=_positive_int, default=37)
    p.add_argument("--threshold", type=_threshold, default=DEFAULT_THRESHOLD)
    p.add_argument("--search", action="store_true",
                   help="search digital/gain exhaustively instead of using the closed form")
    p.set_defaults(func=cmd_codebook)

    p = sub.add_parser("stats", help="port incidence and active-port histogram")
    p.add_argument("-i", "--input", required=True, help="codebook file")
    p.add_argument("--patterns", help="pattern file to check the fingerprint against")
    p.add_argument("--threshold", type=_threshold, default=DEFAULT_THRESHOLD)
    p.add_argument("-o", "--output", help="CSV stem; writes STEM.incidence.csv and STEM.hist.csv")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("sweep", help="long-form metric table for plotting")
    p.add_argument("-i", "--input", required=True, action="append", help="codebook file (repeat)")
    p.add_argument("--patterns", help="pattern file to check fingerprints against")
    p.add_argument("--ports", action="store_true",
                   help="append single-port gain curves (needs --patterns)")
    p.add_argument("--names-from-files", action="store_true",
                   help="label codebooks by file name instead of scheme-criterion")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    if getattr(args, "ports", None) is True and args.command == "sweep" and not args.patterns:
        parser.error("--ports needs --patterns")
    try:
        args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
