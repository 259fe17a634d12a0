"""End-to-end reversible watermarking and integrity sealing.

Embedding pipeline per layer: rank channels, pick the digit-pair position,
build the host sequence, screen carriers, choose the histogram peak and
valley, frame the payload (message chunk plus the LSB backup of the plan
region), shift the histogram, write the edited pairs back, and finally
stamp the plan into the layer's mantissa LSBs.  Extraction inverts each
stage and reproduces the original container bit-for-bit.

Peak/valley selection is restricted to one side of the offset V (both in
[V-99, V] or both in [V+1, V+99]).  A shifted symbol always moves up by
one, which moves a positive weight's pair up but a negative weight's pair
down; a mixed zone would ask a negative weight with pair 00 to move to
pair -1, which no digit string can express.  One-sided zones make every
requested move representable, at the cost of embedding into a single sign
class per layer.

Sealing embeds the SHA-256 of the whole original container as the message;
verification extracts it (WM2), restores the container, recomputes the
digest (WM3) and compares.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import hs, scoring, sidecar
from .bits import BitArray, bytes_to_bits, bits_to_bytes, empty_bits
from .container import ModelContainer, model_digest
from .errors import (BadPayloadMagic, CapacityExceeded, CrcMismatch,
                     MalformedPlan, NnrwError, NoUsableWeights, NoValley,
                     PlanTooLarge)
from .host import (build_host, move_screen, rebuild_marked_host,
                   static_screen)
from . import digits

DEFAULT_OFFSET = 128
DIGEST_BITS = 256


@dataclass
class EmbedConfig:
    """Parameters for embedding; one entry per layer where lists are used.

    layers: manifest indices, negative values counting from the end.
    channels: N per layer; None picks max(1, d // 2).
    digit_pos: fixed pair position c, or None for the minimum-entropy scan.
    offset: the symbol offset V (>= 100 so symbols stay positive).
    calibration: optional list of input tensors for entropy ranking; absent
        means ranking falls back to ascending weight-magnitude variance.
    channel_order: optional explicit ranking override per layer index.
    """
    layers: list[int] = field(default_factory=lambda: [-1])
    channels: list[int | None] | None = None
    digit_pos: int | None = None
    offset: int = DEFAULT_OFFSET
    calibration: list[np.ndarray] | None = None
    channel_order: dict[int, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if self.offset < 100:
            raise ValueError("offset must be >= 100 to keep symbols positive")
        if self.channels is not None and len(self.channels) != len(self.layers):
            raise ValueError("channels must pair one-to-one with layers")
        if self.digit_pos is not None and not 2 <= self.digit_pos <= 5:
            raise ValueError("digit position must be in [2, 5]")
        if len(set(self.layers)) != len(self.layers):
            raise ValueError("layers must be distinct")


def resolve_layer(model: ModelContainer, idx: int) -> int:
    n = len(model.manifest)
    if n == 0:
        raise NnrwError("container has no conv layers")
    r = idx if idx >= 0 else n + idx
    if not 0 <= r < n:
        raise NnrwError(f"layer index {idx} out of range for {n} layers")
    return r


@dataclass(frozen=True)
class LayerPlanInfo:
    """What a dry-run of one layer's pipeline determined."""
    layer: int
    tensor: str
    plan: sidecar.EmbedPlan
    params: hs.HSParams
    host_symbols: np.ndarray
    host_coords: np.ndarray
    message_room: int  # payload bits available for message content


def _layer_order(model: ModelContainer, layer: int, cfg: EmbedConfig,
                 weights: np.ndarray) -> np.ndarray:
    if layer in cfg.channel_order:
        return np.asarray(cfg.channel_order[layer], dtype=np.intp)
    if cfg.calibration is not None:
        spec = model.manifest[layer]
        scores = scoring.channel_scores(weights, cfg.calibration,
                                        stride=spec.stride,
                                        padding=spec.padding)
        return scoring.rank_channels(scores).order
    return scoring.rank_channels_by_weight_variance(weights)


def _choose_zone_params(hist: np.ndarray, v: int) -> hs.HSParams:
    """Best one-sided peak/valley; ties prefer the smaller peak."""
    best = None
    for lo, hi in ((v - 99, v), (v + 1, v + 99)):
        try:
            p = hs.choose_peak_valley(hist, v, lo=lo, hi=hi)
        except NoValley:
            continue
        key = (-p.capacity, p.peak)
        if best is None or key < best[0]:
            best = (key, p)
    if best is None:
        raise NoValley("no embeddable peak on either side of the offset")
    return best[1]


def _auto_digit_pos(weights: np.ndarray, j_prefix: np.ndarray, v: int,
                    region_guess: int) -> int:
    """Pick the pair position that maximizes achievable capacity.

    The minimum-entropy scan (select_pair_position) is the classical proxy
    for capacity, but it can prefer a position whose tallest bin sits
    exactly at the offset V, where pair-00 weights of both signs pile up;
    a peak at V would require negative carriers to take a pair below zero,
    so the one-sided zone rule cannot use it.  Scanning the realizable
    peak count per position optimizes the quantity the proxy stands for.
    Ties go to the smaller c.  The scan subsamples large hosts: the choice
    of c only shapes capacity and travels in the plan, so any c is sound.
    """
    best = None
    for c in range(2, 6):
        try:
            host0, _ = build_host(weights, j_prefix, c, v,
                                  region_len=region_guess,
                                  sample_limit=1500)
            if host0.symbols.size == 0:
                continue
            params = _choose_zone_params(
                hs.build_histogram(host0.symbols, v), v)
        except (NoValley, NoUsableWeights):
            continue
        key = (-params.capacity, c)
        if best is None or key < best[0]:
            best = (key, c)
    if best is None:
        raise NoValley("no pair position yields an embeddable histogram")
    return best[1]


def _pad_exclusions(stored: np.ndarray, deficit: int, emap_bitmap: np.ndarray
                    ) -> np.ndarray:
    """Grow the stored list by `deficit` entries to stabilize the plan size.

    Padding indices are candidates already excluded recomputably (listing
    them again changes nothing) or, failing that, sacrificial usable
    candidates; both sides drop whatever the list names, so any index is
    sound.
    """
    have = set(int(x) for x in stored)
    pool = [i for i in np.nonzero(emap_bitmap)[0] if int(i) not in have]
    if len(pool) < deficit:
        pool += [i for i in range(len(emap_bitmap))
                 if int(i) not in have and not emap_bitmap[i]]
    if len(pool) < deficit:
        raise CapacityExceeded("layer too small to stabilize its plan")
    return np.sort(np.concatenate(
        [stored, np.array(pool[:deficit], dtype=np.int64)]))


def _prepare_layer(model: ModelContainer, layer: int,
                   cfg: EmbedConfig, n_override: int | None) -> LayerPlanInfo:
    spec = model.manifest[layer]
    tensor = model.tensor(spec.weight_tensor)
    weights = tensor.reshaped()
    d = weights.shape[0]
    n = n_override if n_override is not None else max(1, d // 2)
    order = _layer_order(model, layer, cfg, weights)
    j_prefix = np.asarray(order, dtype=np.intp)[:n]
    v = cfg.offset

    flat = tensor.data

    def plan_bits_for(count: int) -> int:
        return (sidecar.PLAN_FIXED_BITS + n * (d - 1).bit_length()
                + 32 + 32 * count + 32)

    if cfg.digit_pos is not None:
        c = cfg.digit_pos
    else:
        c = _auto_digit_pos(weights, j_prefix, v, plan_bits_for(0))

    # The LSB region holds the plan and is barred to carriers, but the plan
    # size depends on how many screened exclusions it lists, which depends
    # on the host, which depends on the region.  Iterate to a fixed point;
    # if the plan shrinks, pad the exclusion list so the extractor derives
    # the identical region length from the plan alone.
    region = plan_bits_for(0)
    for _ in range(12):
        host0, emap = build_host(weights, j_prefix, c, v, region_len=region)
        host1, emap = static_screen(flat, host0, emap)
        if host1.symbols.size == 0:
            raise CapacityExceeded(f"layer {layer}: no usable carriers")
        hist = hs.build_histogram(host1.symbols, v)
        provisional = _choose_zone_params(hist, v)
        host2, emap = move_screen(flat, host1, emap,
                                  provisional.peak, provisional.valley)
        stored = emap.stored_indices
        newbits = plan_bits_for(len(stored))
        if newbits == region:
            break
        if newbits < region:
            deficit = (region - newbits) // 32
            stored = _pad_exclusions(stored, deficit, emap.bitmap)
            if plan_bits_for(len(stored)) != region:
                raise NnrwError("internal: plan padding arithmetic is off")
            break
        region = newbits
    else:
        raise NnrwError(f"layer {layer}: plan sizing did not stabilize")

    # definitive carrier set: exactly what extraction will rebuild
    base_host, base_emap = build_host(weights, j_prefix, c, v,
                                      region_len=region)
    in_stored = np.isin(base_host.candidate_pos, stored)
    final = type(base_host)(symbols=base_host.symbols[~in_stored],
                            coords=base_host.coords[~in_stored],
                            candidate_pos=base_host.candidate_pos[~in_stored],
                            c=c, v=v)
    capacity = int((final.symbols == provisional.peak).sum())
    params = hs.HSParams(peak=provisional.peak, valley=provisional.valley,
                         capacity=capacity)
    if int((final.symbols == params.valley).sum()) != 0:
        raise NnrwError("internal: valley bin not empty after screening")

    plan = sidecar.EmbedPlan(
        layer_index=layer, n_channels=n, c=c, v=v,
        peak=params.peak, valley=params.valley, d=d,
        j_prefix=tuple(int(x) for x in j_prefix),
        excluded=tuple(int(x) for x in stored))
    plan_bits = plan.bit_length()
    if plan_bits != region:
        raise NnrwError("internal: plan bits diverged from region")
    if plan_bits > flat.size:
        raise PlanTooLarge(
            f"layer {layer}: plan of {plan_bits} bits exceeds "
            f"{flat.size} weights")
    room = capacity - hs.PAYLOAD_OVERHEAD_BITS - plan_bits
    return LayerPlanInfo(layer=layer, tensor=spec.weight_tensor, plan=plan,
                         params=params, host_symbols=final.symbols,
                         host_coords=final.coords, message_room=room)


def _embed_into_layer(model: ModelContainer, info: LayerPlanInfo,
                      message: BitArray) -> ModelContainer:
    tensor = model.tensor(info.tensor)
    flat = tensor.data.copy()
    plan_bits = sidecar.encode_plan(info.plan)
    if len(plan_bits) != info.plan.bit_length():
        raise NnrwError("internal: plan length mismatch")
    backup = sidecar.lsb_read(flat, len(plan_bits))
    payload = hs.frame_payload(message, backup)
    if len(payload) > info.params.capacity:
        raise CapacityExceeded(
            f"layer {info.layer}: payload {len(payload)} bits > capacity "
            f"{info.params.capacity}")
    marked = hs.hs_embed(info.host_symbols, payload, info.params)

    v, c = info.plan.v, info.plan.c
    changed = np.nonzero(marked != info.host_symbols)[0]
    for i in changed:
        t = info.host_coords[i]
        w = flat[t]
        new_pair = int(marked[i]) - v if w > 0 else v - int(marked[i])
        w2 = digits.write_pair(w, c, new_pair)
        if w2 is None:
            raise NnrwError("internal: screened carrier failed its write")
        flat[t] = w2

    replaced, displaced = sidecar.lsb_replace(flat, plan_bits)
    if not np.array_equal(displaced, backup):
        raise NnrwError("internal: LSB backup drifted during embedding")
    return model.replace_tensor(info.tensor, replaced)


def embed_watermark(model: ModelContainer, message: BitArray,
                    config: EmbedConfig) -> ModelContainer:
    """Embed message bits across the configured layers, greedily in order.

    Raises CapacityExceeded when the message does not fit the aggregate
    room of all configured layers.
    """
    layers = [resolve_layer(model, i) for i in config.layers]
    if len(set(model.manifest[i].weight_tensor for i in layers)) != len(layers):
        raise NnrwError("configured layers must reference distinct tensors")
    channels = config.channels or [None] * len(layers)
    out = model
    remaining = np.asarray(message, dtype=np.uint8)
    for layer, n_over in zip(layers, channels):
        info = _prepare_layer(out, layer, config, n_over)
        if info.message_room < 0:
            raise CapacityExceeded(
                f"layer {layer}: capacity {info.params.capacity} cannot hold "
                f"the frame and plan backup "
                f"({hs.PAYLOAD_OVERHEAD_BITS + info.plan.bit_length()} bits)")
        chunk = remaining[:info.message_room]
        remaining = remaining[len(chunk):]
        out = _embed_into_layer(out, info, chunk)
    if remaining.size:
        raise CapacityExceeded(
            f"{remaining.size} message bits exceed aggregate layer capacity")
    return out


def _extract_layer(model: ModelContainer, layer: int
                   ) -> tuple[BitArray, np.ndarray, sidecar.EmbedPlan]:
    """(message chunk, restored flat weights, plan) for one marked layer."""
    spec = model.manifest[layer]
    tensor = model.tensor(spec.weight_tensor)
    weights = tensor.reshaped()
    plan = sidecar.read_plan(weights)
    if plan.d != weights.shape[0]:
        raise MalformedPlan(
            f"plan claims {plan.d} channels, layer has {weights.shape[0]}")

    host = rebuild_marked_host(weights, np.array(plan.j_prefix),
                               plan.c, plan.v, plan.bit_length(),
                               np.array(plan.excluded, dtype=np.int64))
    n_peakish = int(((host.symbols == plan.peak)
                     | (host.symbols == plan.peak + 1)).sum())
    params = hs.HSParams(peak=plan.peak, valley=plan.valley,
                         capacity=n_peakish)
    payload, restored_syms = hs.hs_extract(host.symbols, params)
    fields = hs.parse_payload(payload)
    if len(fields.lsb_backup) != plan.bit_length():
        raise CrcMismatch(
            "payload backup length does not match the plan region")

    flat = tensor.data.copy()
    v, c = plan.v, plan.c
    changed = np.nonzero(restored_syms != host.symbols)[0]
    for i in changed:
        t = host.coords[i]
        w = flat[t]
        orig_pair = int(restored_syms[i]) - v if w > 0 else v - int(restored_syms[i])
        w0 = digits.write_pair(w, c, orig_pair)
        if w0 is None:
            raise CrcMismatch("carrier restore failed: marked data inconsistent")
        flat[t] = w0
    restored, _ = sidecar.lsb_replace(flat, fields.lsb_backup)
    return fields.message, restored.reshape(-1), plan


def extract_watermark(model: ModelContainer, layers: list[int]
                      ) -> tuple[BitArray, ModelContainer]:
    """Extract message chunks from the given layers and restore the model.

    The layer order must match the embedding order for the concatenated
    message to reassemble.  Restoration itself is order-independent.
    """
    resolved = [resolve_layer(model, i) for i in layers]
    out = model
    chunks = []
    for layer in resolved:
        chunk, restored_flat, _ = _extract_layer(out, layer)
        out = out.replace_tensor(out.manifest[layer].weight_tensor,
                                 restored_flat)
        chunks.append(chunk)
    message = np.concatenate(chunks) if chunks else empty_bits()
    return message, out


def seal(model: ModelContainer, config: EmbedConfig) -> ModelContainer:
    """Embed the container's own SHA-256 digest into each configured layer.

    The digest is computed over the original bytes before any modification
    and is embedded redundantly (whole digest per layer).
    """
    digest_bits = bytes_to_bits(model_digest(model))
    layers = [resolve_layer(model, i) for i in config.layers]
    if len(set(model.manifest[i].weight_tensor for i in layers)) != len(layers):
        raise NnrwError("configured layers must reference distinct tensors")
    channels = config.channels or [None] * len(layers)
    out = model
    for layer, n_over in zip(layers, channels):
        info = _prepare_layer(out, layer, config, n_over)
        if info.message_room < DIGEST_BITS:
            raise CapacityExceeded(
                f"layer {layer}: room for {info.message_room} message bits, "
                f"sealing needs {DIGEST_BITS}")
        out = _embed_into_layer(out, info, digest_bits)
    return out


VERDICT_INTACT = "INTACT"
VERDICT_TAMPERED = "TAMPERED"
VERDICT_NOT_SEALED = "NOT_SEALED"


@dataclass
class VerifyReport:
    verdict: str
    extracted_digest: bytes | None
    recomputed_digest: bytes | None
    layer_status: list[tuple[int, str]]

    def to_json_line(self) -> str:
        import json
        return json.dumps({
            "verdict": self.verdict,
            "extracted_digest": (self.extracted_digest.hex()
                                 if self.extracted_digest else None),
            "recomputed_digest": (self.recomputed_digest.hex()
                                  if self.recomputed_digest else None),
            "layers": [{"layer": l, "status": s}
                       for l, s in self.layer_status],
        }, separators=(",", ":"))

    def to_text(self) -> str:
        lines = [f"verdict: {self.verdict}"]
        if self.extracted_digest is not None:
            lines.append(f"extracted digest : {self.extracted_digest.hex()}")
        if self.recomputed_digest is not None:
            lines.append(f"recomputed digest: {self.recomputed_digest.hex()}")
        for layer, status in self.layer_status:
            lines.append(f"layer {layer}: {status}")
        return "\n".join(lines)


def verify(model: ModelContainer, layers: list[int] | None = None
           ) -> VerifyReport:
    """Check a sealed container: extract WM2 per layer, restore, compare WM3.

    With layers=None every manifest layer is probed and unmarked layers are
    reported as such; an explicit layer list treats every named layer as
    sealed, so plan or payload corruption there is a tamper verdict.
    """
    probing = layers is None
    idxs = (list(range(len(model.manifest))) if probing
            else [resolve_layer(model, i) for i in layers])
    out = model
    status: list[tuple[int, str]] = []
    digests: list[bytes] = []
    any_crc_fail = False
    for layer in idxs:
        try:
            chunk, restored_flat, _ = _extract_layer(out, layer)
        except (MalformedPlan, BadPayloadMagic) as exc:
            status.append((layer, f"no mark ({exc.__class__.__name__})"))
            if not probing:
                any_crc_fail = True
            continue
        except (CrcMismatch, NnrwError) as exc:
            status.append((layer, f"corrupt ({exc.__class__.__name__})"))
            any_crc_fail = True
            continue
        if len(chunk) != DIGEST_BITS:
            status.append((layer, "sealed payload has wrong digest length"))
            any_crc_fail = True
            continue
        out = out.replace_tensor(out.manifest[layer].weight_tensor,
                                 restored_flat)
        digests.append(bits_to_bytes(chunk))
        status.append((layer, "extracted 256-bit digest"))

    if not digests:
        verdict = VERDICT_TAMPERED if any_crc_fail else VERDICT_NOT_SEALED
        return VerifyReport(verdict=verdict, extracted_digest=None,
                            recomputed_digest=None, layer_status=status)

    recomputed = model_digest(out)
    ok = (not any_crc_fail) and all(d == recomputed for d in digests)
    return VerifyReport(
        verdict=VERDICT_INTACT if ok else VERDICT_TAMPERED,
        extracted_digest=digests[0],
        recomputed_digest=recomputed,
        layer_status=status)


def verify_bytes(data: bytes, layers: list[int] | None = None) -> VerifyReport:
    """Verify raw container bytes; any parse failure is a tamper verdict.

    A sealed artifact that no longer parses was necessarily modified, so
    unparseable input maps to TAMPERED rather than an error.
    """
    from .container import parse_container
    from .errors import ContainerError
    try:
        model = parse_container(data)
    except ContainerError as exc:
        return VerifyReport(
            verdict=VERDICT_TAMPERED, extracted_digest=None,
            recomputed_digest=None,
            layer_status=[(-1, f"container unparseable "
                               f"({exc.__class__.__name__})")])
    try:
        return verify(model, layers)
    except NnrwError as exc:
        return VerifyReport(
            verdict=VERDICT_TAMPERED, extracted_digest=None,
            recomputed_digest=None,
            layer_status=[(-1, f"verification error "
                               f"({exc.__class__.__name__})")])
