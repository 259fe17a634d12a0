"""nnrw-export / nnrw-import command-line entry points."""

from __future__ import annotations

import argparse
import sys

from .convert import AdapterError, export_checkpoint, import_container


def main_export(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="nnrw-export",
        description="Export a checkpoint's conv weights to a .nnrw container")
    ap.add_argument("checkpoint")
    ap.add_argument("-o", "--output", required=True, help="output .nnrw path")
    ap.add_argument("--config", help="TOML file with per-layer stride/padding")
    ap.add_argument("--report", help="write the mapping report JSON here")
    args = ap.parse_args(argv)
    try:
        mapping = export_checkpoint(args.checkpoint, args.output, args.config)
    except (AdapterError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if args.report:
        with open(args.report, "w") as fh:
            fh.write(mapping.to_json())
    else:
        print(mapping.to_json())
    print(f"exported {len(mapping.mapped)} conv layers "
          f"({len(mapping.skipped)} skipped)", file=sys.stderr)
    return 0


def main_import(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="nnrw-import",
        description="Write .nnrw container weights back into a checkpoint")
    ap.add_argument("container", help=".nnrw file")
    ap.add_argument("--template", required=True,
                    help="checkpoint supplying every non-conv entry")
    ap.add_argument("-o", "--output", required=True, help="output checkpoint")
    args = ap.parse_args(argv)
    try:
        replaced = import_container(args.container, args.template, args.output)
    except (AdapterError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"replaced {len(replaced)} conv layers", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main_export())
