"""Checkpoint <-> .nnrw container conversion.

Rank-4 float tensors of a checkpoint are treated as convolution weights and
exported in graph (state-dict) order.  float64 weights are down-coerced to
float32 with a warning entry; float16/bfloat16 are skipped with a reason.
Stride and padding cannot generally be recovered from a state dictionary,
so the manifest defaults to stride 1 and padding k//2, overridable through
a TOML config; those values never affect reversibility, only calibration
scoring on the primary side.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from nnrw import (LayerSpec, ModelContainer, WeightTensor, load_container,
                  save_container)

try:
    import tomllib  # Python >= 3.11
except ImportError:
    tomllib = None


class AdapterError(Exception):
    pass


class UnsupportedFormat(AdapterError):
    pass


class NoConvLayers(AdapterError):
    pass


class KeyMismatch(AdapterError):
    pass


class ShapeMismatch(AdapterError):
    pass


@dataclass
class ExportMapping:
    """What became of every rank-4 float tensor in the source."""
    mapped: list[dict] = field(default_factory=list)
    skipped: list[dict] = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps({"mapped": self.mapped, "skipped": self.skipped},
                          indent=2, sort_keys=True)


def _load_torch_state(path: Path):
    import torch
    try:
        obj = torch.load(path, map_location="cpu", weights_only=True)
    except Exception as exc:
        raise UnsupportedFormat(f"cannot read {path} as a checkpoint: {exc}")
    if isinstance(obj, dict) and "state_dict" in obj \
            and isinstance(obj["state_dict"], dict):
        obj = obj["state_dict"]
    if not isinstance(obj, dict):
        raise UnsupportedFormat(
            f"{path}: expected a state dictionary, got {type(obj).__name__}")
    return obj


def _load_onnx_initializers(path: Path):
    try:
        import onnx
        from onnx import numpy_helper
    except ImportError:
        raise UnsupportedFormat(
            "reading ONNX graphs requires the optional 'onnx' package")
    graph = onnx.load(str(path)).graph
    out = {}
    for init in graph.initializer:
        out[init.name] = numpy_helper.to_array(init)
    return out


def _as_arrays(path: Path) -> dict[str, np.ndarray]:
    suffix = path.suffix.lower()
    if suffix == ".onnx":
        return _load_onnx_initializers(path)
    state = _load_torch_state(path)
    out = {}
    for key, value in state.items():
        if hasattr(value, "detach"):  # torch tensor
            import torch
            if value.dtype in (torch.float16, torch.bfloat16):
                out[key] = ("skip", str(value.dtype))
                continue
            out[key] = value.detach().cpu().contiguous().numpy()
        elif isinstance(value, np.ndarray):
            out[key] = value
    return out


_SECTION_RE = re.compile(r'^\[layers\.(?:"([^"]+)"|([^\]"]+))\]$')
_ASSIGN_RE = re.compile(r'^(stride|padding)\s*=\s*(\d+)$')


def _parse_layers_toml(text: str) -> dict:
    """Narrow TOML subset for layer configs (used when tomllib is absent).

    Understands exactly:  [layers."tensor.name"]  sections with integer
    stride/padding assignments, blank lines and # comments.
    """
    layers: dict[str, dict] = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _SECTION_RE.match(line)
        if m:
            current = m.group(1) or m.group(2)
            layers.setdefault(current, {})
            continue
        m = _ASSIGN_RE.match(line)
        if m and current is not None:
            layers[current][m.group(1)] = int(m.group(2))
            continue
        raise AdapterError(f"config line {lineno}: cannot parse {raw!r}")
    return layers


def _layer_overrides(config_path) -> dict:
    if config_path is None:
        return {}
    if tomllib is not None:
        with open(config_path, "rb") as fh:
            return tomllib.load(fh).get("layers", {})
    with open(config_path, "r") as fh:
        return _parse_layers_toml(fh.read())


def export_checkpoint(ckpt_path, out_path, config_path=None
                      ) -> ExportMapping:
    """Write the checkpoint's conv weights into a .nnrw container.

    Returns the mapping report; raises NoConvLayers when the checkpoint has
    no rank-4 float weights at all.
    """
    ckpt_path = Path(ckpt_path)
    arrays = _as_arrays(ckpt_path)
    overrides = _layer_overrides(config_path)

    mapping = ExportMapping()
    tensors, manifest = [], []
    for key, value in arrays.items():
        if isinstance(value, tuple) and value[0] == "skip":
            mapping.skipped.append(
                {"key": key, "reason": f"unsupported dtype {value[1]}"})
            continue
        arr = np.asarray(value)
        if arr.ndim != 4 or arr.dtype.kind != "f":
            continue  # not a conv weight candidate
        coerced = False
        if arr.dtype == np.float64:
            arr = arr.astype(np.float32)
            coerced = True
        elif arr.dtype == np.float16:
            mapping.skipped.append(
                {"key": key, "reason": "unsupported dtype float16"})
            continue
        elif arr.dtype != np.float32:
            mapping.skipped.append(
                {"key": key, "reason": f"unsupported dtype {arr.dtype}"})
            continue
        k = arr.shape[-1]
        opts = overrides.get(key, {})
        spec = LayerSpec(layer_index=len(manifest), weight_tensor=key,
                         stride=int(opts.get("stride", 1)),
                         padding=int(opts.get("padding", k // 2)))
        tensors.append(WeightTensor(name=key, shape=arr.shape,
                                    data=arr.reshape(-1)))
        manifest.append(spec)
        entry = {"key": key, "tensor": key,
                 "shape": list(arr.shape),
                 "stride": spec.stride, "padding": spec.padding}
        if coerced:
            entry["coerced"] = "float64->float32"
        mapping.mapped.append(entry)

    if not tensors:
        raise NoConvLayers(f"{ckpt_path} holds no rank-4 float conv weights")
    container = ModelContainer(tensors=tensors, manifest=manifest)
    save_container(container, out_path)
    return mapping


def import_container(nnrw_path, template_ckpt, out_path) -> list[str]:
    """Write container weights back into a copy of the template checkpoint.

    Every container tensor must match a conv key of the template in name
    and shape; restored weights are written bit-exactly as float32.
    Returns the list of replaced keys.
    """
    import torch
    container = load_container(nnrw_path)
    state = _load_torch_state(Path(template_ckpt))

    replaced = []
    out_state = dict(state)
    for tensor in container.tensors:
        if tensor.name not in state:
            raise KeyMismatch(
                f"container tensor {tensor.name!r} not in template")
        tmpl = state[tensor.name]
        tmpl_shape = tuple(tmpl.shape)
        if tmpl_shape != tensor.shape:
            raise ShapeMismatch(
                f"{tensor.name!r}: container {tensor.shape} vs "
                f"template {tmpl_shape}")
        out_state[tensor.name] = torch.from_numpy(
            tensor.data.copy().reshape(tensor.shape))
        replaced.append(tensor.name)
    torch.save(out_state, out_path)
    return replaced
