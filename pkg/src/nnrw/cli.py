"""Command-line interface.

Subcommands: inspect, score, plan, embed, extract, seal, verify.
Exit codes: 0 success (or INTACT), 2 TAMPERED, 1 any error (NOT_SEALED
included: there was nothing to verify).  Diagnostics go to stderr, machine
output to stdout, and identical inputs always produce identical bytes.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import __version__
from .bits import bits_to_bytes, bytes_to_bits
from .container import load_container, model_digest, save_container
from .errors import NnrwError
from .host import select_pair_position
from .hs import build_histogram, choose_peak_valley
from .protocol import (DEFAULT_OFFSET, EmbedConfig, VERDICT_INTACT,
                       VERDICT_NOT_SEALED, embed_watermark, extract_watermark,
                       resolve_layer, seal, verify_bytes)
from .scoring import channel_scores, rank_channels, rank_report_csv
from .errors import NoValley


def _calib_images(path):
    calib = load_container(path)
    names = sorted(t.name for t in calib.tensors)
    return [calib.tensor(n).reshaped() for n in names]


def _parse_message(spec: str) -> np.ndarray:
    if spec.startswith("@"):
        with open(spec[1:], "rb") as fh:
            return bytes_to_bits(fh.read())
    return bytes_to_bits(bytes.fromhex(spec))


def _config(args) -> EmbedConfig:
    layers = args.layer if args.layer else [-1]
    channels = None
    if args.channels:
        if len(args.channels) != len(layers):
            raise NnrwError("--channels must be given once per --layer")
        channels = list(args.channels)
    digit_pos = None if args.digit_pos == "auto" else int(args.digit_pos)
    calibration = _calib_images(args.calib) if args.calib else None
    return EmbedConfig(layers=layers, channels=channels, digit_pos=digit_pos,
                       offset=args.offset, calibration=calibration)


def _write_report(args, text: str) -> None:
    if getattr(args, "report", None):
        with open(args.report, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_inspect(args) -> int:
    model = load_container(args.input)
    out = [f"container version {model.version}",
           f"tensors: {len(model.tensors)}"]
    for t in model.tensors:
        out.append(f"  {t.name}  shape={'x'.join(map(str, t.shape))}"
                   f"  elements={t.data.size}")
    out.append(f"conv layers: {len(model.manifest)}")
    for spec in model.manifest:
        out.append(f"  layer {spec.layer_index}: {spec.weight_tensor}"
                   f"  stride={spec.stride} padding={spec.padding}")
    out.append(f"sha256: {model_digest(model).hex()}")
    _write_report(args, "\n".join(out) + "\n")
    return 0


def cmd_score(args) -> int:
    model = load_container(args.input)
    layer = resolve_layer(model, args.layer[0] if args.layer else -1)
    spec = model.manifest[layer]
    weights = model.tensor(spec.weight_tensor).reshaped()
    images = _calib_images(args.calib)
    scores = channel_scores(weights, images, stride=spec.stride,
                            padding=spec.padding)
    _write_report(args, rank_report_csv(rank_channels(scores)))
    return 0


def cmd_plan(args) -> int:
    from .protocol import _layer_order
    model = load_container(args.input)
    layer = resolve_layer(model, args.layer[0] if args.layer else -1)
    spec = model.manifest[layer]
    weights = model.tensor(spec.weight_tensor).reshaped()
    cfg = _config(args)
    order = _layer_order(model, layer, cfg, weights)
    d = weights.shape[0]
    n = (args.channels[0] if args.channels else max(1, d // 2))
    j_prefix = np.asarray(order)[:n]
    _, table = select_pair_position(weights, j_prefix, args.offset)
    lines = ["c,entropy_bits,usable_count,peak,valley,capacity"]
    for c, entropy, count in table:
        from .host import build_host
        host, _ = build_host(weights, j_prefix, c, args.offset)
        try:
            p = choose_peak_valley(build_histogram(host.symbols, args.offset),
                                   args.offset)
            peak, valley, cap = p.peak, p.valley, p.capacity
        except NoValley:
            peak = valley = cap = ""
        lines.append(f"{c},{entropy:.12g},{count},{peak},{valley},{cap}")
    _write_report(args, "\n".join(lines) + "\n")
    return 0


def cmd_embed(args) -> int:
    model = load_container(args.input)
    message = _parse_message(args.message)
    marked = embed_watermark(model, message, _config(args))
    save_container(marked, args.output)
    print(f"embedded {len(message)} bits", file=sys.stderr)
    return 0


def cmd_extract(args) -> int:
    model = load_container(args.input)
    layers = args.layer if args.layer else [-1]
    message, restored = extract_watermark(model, layers)
    if args.output:
        save_container(restored, args.output)
    pad = (-len(message)) % 8
    data = bits_to_bytes(np.concatenate(
        [message, np.zeros(pad, dtype=np.uint8)]) if pad else message)
    sys.stdout.write(data.hex() + "\n")
    print(f"extracted {len(message)} bits; model restored", file=sys.stderr)
    return 0


def cmd_seal(args) -> int:
    model = load_container(args.input)
    sealed = seal(model, _config(args))
    save_container(sealed, args.output)
    print(f"sealed: digest {model_digest(model).hex()}", file=sys.stderr)
    return 0


def cmd_verify(args) -> int:
    with open(args.input, "rb") as fh:
        data = fh.read()
    layers = args.layer if args.layer else None
    report = verify_bytes(data, layers)
    _write_report(args, report.to_json_line() + "\n")
    print(report.to_text(), file=sys.stderr)
    if report.verdict == VERDICT_INTACT:
        return 0
    if report.verdict == VERDICT_NOT_SEALED:
        return 1
    return 2


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="nnrw",
        description="Reversible fragile watermarking for conv-weight "
                    "containers (.nnrw)")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, output=False, message=False, calib_required=False):
        p.add_argument("-i", "--input", required=True, help=".nnrw container")
        if output:
            p.add_argument("-o", "--output", required=output == "required",
                           help="output .nnrw path")
        p.add_argument("--layer", type=int, action="append",
                       help="layer index, negatives from the end "
                            "(repeatable; default -1)")
        p.add_argument("--channels", type=int, action="append",
                       help="carrier channel count N, one per --layer")
        p.add_argument("--offset", type=int, default=DEFAULT_OFFSET,
                       help="symbol offset V (default %(default)s)")
        p.add_argument("--digit-pos", default="auto",
                       help="pair position c in [2,5], or 'auto'")
        p.add_argument("--calib", required=calib_required,
                       help="calibration container for ranking")
        p.add_argument("--report", help="write machine output here")
        if message:
            p.add_argument("--message", required=True,
                           help="hex string, or @FILE for raw bytes")

    p = sub.add_parser("inspect", help="summarize a container")
    p.add_argument("-i", "--input", required=True)
    p.add_argument("--report")
    p.set_defaults(fn=cmd_inspect)

    p = sub.add_parser("score", help="entropy-rank channels of one layer")
    common(p, calib_required=True)
    p.set_defaults(fn=cmd_score)

    p = sub.add_parser("plan", help="scan pair positions and capacities")
    common(p)
    p.set_defaults(fn=cmd_plan)

    p = sub.add_parser("embed", help="embed a message reversibly")
    common(p, output="required", message=True)
    p.set_defaults(fn=cmd_embed)

    p = sub.add_parser("extract", help="extract message and restore model")
    common(p, output=True)
    p.set_defaults(fn=cmd_extract)

    p = sub.add_parser("seal", help="embed the model's own SHA-256")
    common(p, output="required")
    p.set_defaults(fn=cmd_seal)

    p = sub.add_parser("verify", help="check a sealed container")
    common(p)
    p.set_defaults(fn=cmd_verify)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except NnrwError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
