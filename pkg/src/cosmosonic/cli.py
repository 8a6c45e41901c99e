"""Command line entry point: ``cosmosonic render|preprocess|inspect``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace

from . import catalog_io
from .config import REPORT_DIR_ENV, load_config, seeded, validate
from .errors import CosmosonicError, StageError
from .renderer import build_manifest, load_catalog, preprocess_records, render_full, stage, write_reports


def _common(p):
    p.add_argument("--config", help="TOML render configuration")
    p.add_argument("--catalog", help="delimited catalog file (overrides paths.catalog)")


def build_parser():
    parser = argparse.ArgumentParser(prog="cosmosonic", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("render", help="run the full pipeline and write a WAV file")
    _common(p)
    p.add_argument("--out", help="output WAV path (overrides paths.audio)")
    p.add_argument("--duration", type=float, help="timeline length in seconds")
    p.add_argument("--seed", type=int, help="base seed for all noise sources")
    p.add_argument("--report-dir", help=f"write reports here (env {REPORT_DIR_ENV} also works)")
    p.add_argument("--jobs", type=int, help="render threads")

    p = sub.add_parser("preprocess", help="filter and normalise, write reports only")
    _common(p)
    p.add_argument("--report-dir", help="directory for histogram/stats/event reports")

    p = sub.add_parser("inspect", help="print a per-field digest of the raw catalog")
    _common(p)
    p.add_argument("--out", help="write the digest here instead of stdout")
    return parser


def _config(args):
    cfg = load_config(args.config)
    changes = {}
    if getattr(args, "duration", None) is not None:
        changes["duration"] = args.duration
    if getattr(args, "jobs", None) is not None:
        changes["n_jobs"] = args.jobs
    paths = cfg.paths
    if args.catalog:
        paths = replace(paths, catalog=args.catalog)
    if getattr(args, "out", None) and args.command == "render":
        paths = replace(paths, audio=args.out)
    if getattr(args, "report_dir", None):
        paths = replace(paths, report_dir=args.report_dir)
    cfg = replace(cfg, paths=paths, **changes)
    if getattr(args, "seed", None) is not None:
        cfg = seeded(cfg, args.seed)
    return validate(cfg)


def cmd_render(cfg):
    if cfg.paths.audio is None:
        raise StageError("config", ValueError("no output path; pass --out"))
    result = render_full(cfg)
    print(json.dumps(result.manifest, indent=2))


def cmd_preprocess(cfg):
    catalog = load_catalog(cfg.paths.catalog, cfg)
    result = preprocess_records(catalog.records, cfg)
    if cfg.paths.report_dir:
        write_reports(result, cfg, cfg.paths.report_dir)
    print(json.dumps(build_manifest(catalog, result, cfg), indent=2))


def cmd_inspect(cfg, out):
    catalog = load_catalog(cfg.paths.catalog, cfg)
    with stage("inspect"):
        digest = catalog_io.catalog_digest(catalog.records)
        if out:
            catalog_io.write_digest(digest, out)
        else:
            catalog_io.write_digest(digest, sys.stdout)
    for err in catalog.rejected:
        print(f"rejected: {err}", file=sys.stderr)


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        try:
            cfg = _config(args)
        except CosmosonicError as err:
            raise StageError("config", err) from err
        if cfg.paths.catalog is None:
            raise StageError("config", ValueError("no catalog; pass --catalog"))
        if args.command == "render":
            cmd_render(cfg)
        elif args.command == "preprocess":
            cmd_preprocess(cfg)
        else:
            cmd_inspect(cfg, args.out)
    except StageError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except (CosmosonicError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
