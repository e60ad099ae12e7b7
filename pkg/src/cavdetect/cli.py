"""Command line entry point: ``cavdetect [options] PDB [PDB ...]``."""

from __future__ import annotations

import argparse
import glob
import logging
import os
import sys

from .pipeline import ConfigError, PipelineConfig, format_report, run_batch

EXIT_OK = 0
EXIT_PARTIAL = 1
EXIT_CONFIG = 2


def build_parser() -> argparse.ArgumentParser:
    d = PipelineConfig()
    p = argparse.ArgumentParser(
        prog="cavdetect",
        description="Detect ligand-binding cavities from Voronoi alpha spheres grouped by DBSCAN.",
    )
    p.add_argument("inputs", nargs="*", help="PDB files")
    p.add_argument("--input-dir", help="process every *.pdb / *.ent file in this directory")
    g = p.add_argument_group("alpha spheres")
    g.add_argument("--r-min", type=float, default=d.r_min, help="minimum sphere radius, Å (default %(default)s)")
    g.add_argument("--r-max", type=float, default=d.r_max, help="maximum sphere radius, Å (default %(default)s)")
    g = p.add_argument_group("clustering")
    g.add_argument("--eps", type=float, default=d.eps, help="DBSCAN radius, Å (default %(default)s)")
    g.add_argument("--min-pts", type=int, default=d.min_pts, help="DBSCAN core threshold (default %(default)s)")
    g.add_argument("--merge-min-size", type=int, default=d.merge_min_size,
                   help="clusters smaller than this are merged or dropped (default %(default)s)")
    g.add_argument("--merge-dist", type=float, default=None,
                   help="max centroid distance for merging, Å (default 2*eps)")
    g = p.add_argument_group("binding-site criteria")
    g.add_argument("--criteria-mode", choices=["pocketpicker", "overlap", "either", "both"],
                   default=d.criteria_mode)
    g.add_argument("--pp-dist", type=float, default=d.pp_dist, help="centroid-ligand distance, Å")
    g.add_argument("--mo-dist", type=float, default=d.mo_dist, help="ligand atom-sphere centre distance, Å")
    g.add_argument("--mo-fraction", type=float, default=d.mo_fraction, help="required ligand atom fraction")
    g = p.add_argument_group("shape")
    g.add_argument("--probe", type=float, default=d.probe, help="probe radius added to vdW radii, Å")
    g.add_argument("--escape", type=float, default=d.escape, help="ray escape length, Å")
    g.add_argument("--mouth-linkage", type=float, default=None, help="mouth grouping distance, Å (default 2*eps)")
    g.add_argument("--elongation", type=float, default=d.elongation, help="tunnel elongation threshold")
    g = p.add_argument_group("output")
    g.add_argument("--out-dir", default="cavdetect_out", help="directory for pocket and info files")
    g.add_argument("--ground-truth", help="TSV of expected detections for the metric report")
    g.add_argument("--report", help="write the batch report here instead of stdout")
    g.add_argument("--threads", type=int, default=1, help="worker processes")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _collect_inputs(args) -> list[str]:
    paths = list(args.inputs)
    if args.input_dir:
        for pattern in ("*.pdb", "*.ent", "*.PDB"):
            paths.extend(sorted(glob.glob(os.path.join(args.input_dir, pattern))))
    seen = set()
    return [p for p in paths if not (p in seen or seen.add(p))]


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = PipelineConfig(
            r_min=args.r_min, r_max=args.r_max, eps=args.eps, min_pts=args.min_pts,
            merge_min_size=args.merge_min_size, merge_dist=args.merge_dist,
            criteria_mode=args.criteria_mode, pp_dist=args.pp_dist, mo_dist=args.mo_dist,
            mo_fraction=args.mo_fraction, probe=args.probe, escape=args.escape,
            mouth_linkage=args.mouth_linkage, elongation=args.elongation,
            out_dir=args.out_dir, ground_truth=args.ground_truth,
        )
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        if args.ground_truth and not os.path.isfile(args.ground_truth):
            raise ConfigError(f"ground truth file not found: {args.ground_truth}")
        os.makedirs(config.out_dir, exist_ok=True)
        if not os.access(config.out_dir, os.W_OK):
            raise ConfigError(f"output directory not writable: {config.out_dir}")
    except (ConfigError, OSError) as exc:
        print(f"cavdetect: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    paths = _collect_inputs(args)
    if not paths:
        print("cavdetect: no input files", file=sys.stderr)
        return EXIT_CONFIG

    try:
        batch = run_batch(paths, config, threads=args.threads)
    except ValueError as exc:  # malformed ground truth
        print(f"cavdetect: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    report = format_report(batch)
    if args.report:
        with open(args.report, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(report)
    else:
        sys.stdout.write(report)
    for path, err in batch.failures:
        print(f"cavdetect: failed {path}: {err}", file=sys.stderr)
    return batch.exit_code


if __name__ == "__main__":
    sys.exit(main())
