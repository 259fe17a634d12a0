"""Deterministic binary container for model weights (.nnrw files).

Layout (all integers little-endian):

    magic "NNRW" | u16 version=1 | u32 tensor_count
    per tensor: u16 name_len | name (UTF-8) | u8 dtype (0=f32) | u8 rank
                | rank x u32 dims
    u32 layer_count
    per layer: u16 tensor-table index | u16 stride | u16 padding
    raw f32 tensor data, little-endian, concatenated in table order,
    no padding or alignment.

Serialization is a pure function of the container contents, so the SHA-256
of the serialized bytes is a canonical whole-model digest.  Parsing
reproduces every weight bit-for-bit, including NaN payloads, infinities and
subnormals.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import (BadMagic, DuplicateTensorName, MalformedContainer,
                     ManifestDangling, TruncatedFile, UnsupportedDtype,
                     VersionUnsupported)

MAGIC = b"NNRW"
VERSION = 1
_DTYPE_F32 = 0


@dataclass(frozen=True)
class WeightTensor:
    name: str
    shape: tuple[int, ...]
    data: np.ndarray  # flat float32, row-major

    def __post_init__(self):
        arr = np.ascontiguousarray(self.data, dtype=np.float32).reshape(-1)
        object.__setattr__(self, "data", arr)
        object.__setattr__(self, "shape", tuple(int(s) for s in self.shape))
        if any(s <= 0 for s in self.shape):
            raise ValueError(f"tensor {self.name!r}: non-positive dim")
        if int(np.prod(self.shape)) != arr.size:
            raise ValueError(
                f"tensor {self.name!r}: shape {self.shape} does not match "
                f"{arr.size} elements")

    def reshaped(self) -> np.ndarray:
        return self.data.reshape(self.shape)

    def bits(self) -> np.ndarray:
        return self.data.view(np.uint32)

    def __eq__(self, other) -> bool:
        # bit-level equality: NaN payloads count, -0.0 != +0.0
        return (isinstance(other, WeightTensor)
                and self.name == other.name
                and self.shape == other.shape
                and np.array_equal(self.bits(), other.bits()))


@dataclass(frozen=True)
class LayerSpec:
    layer_index: int
    weight_tensor: str
    stride: int = 1
    padding: int = 0

    def __post_init__(self):
        if self.stride < 1:
            raise ValueError("stride must be positive")
        if self.padding < 0:
            raise ValueError("padding must be non-negative")


@dataclass
class ModelContainer:
    tensors: list[WeightTensor] = field(default_factory=list)
    manifest: list[LayerSpec] = field(default_factory=list)
    version: int = VERSION

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        names = [t.name for t in self.tensors]
        if len(set(names)) != len(names):
            dupes = {n for n in names if names.count(n) > 1}
            raise DuplicateTensorName(f"duplicate tensor names: {sorted(dupes)}")
        for i, spec in enumerate(self.manifest):
            if spec.layer_index != i:
                raise ValueError(
                    f"manifest layer_index {spec.layer_index} at position {i}: "
                    "indices must be 0-based and contiguous")
            if spec.weight_tensor not in names:
                raise ManifestDangling(
                    f"layer {i} references missing tensor {spec.weight_tensor!r}")
            if len(self.tensor(spec.weight_tensor).shape) != 4:
                raise ManifestDangling(
                    f"layer {i} tensor {spec.weight_tensor!r} is not rank-4")

    def tensor(self, name: str) -> WeightTensor:
        for t in self.tensors:
            if t.name == name:
                return t
        raise KeyError(name)

    def tensor_index(self, name: str) -> int:
        for i, t in enumerate(self.tensors):
            if t.name == name:
                return i
        raise KeyError(name)

    def replace_tensor(self, name: str, data: np.ndarray) -> "ModelContainer":
        """New container with one tensor's data swapped (same name/shape)."""
        out = []
        for t in self.tensors:
            if t.name == name:
                out.append(WeightTensor(name=t.name, shape=t.shape, data=data))
            else:
                out.append(t)
        return ModelContainer(tensors=out, manifest=list(self.manifest),
                              version=self.version)

    def __eq__(self, other) -> bool:
        return (isinstance(other, ModelContainer)
                and self.version == other.version
                and self.tensors == other.tensors
                and self.manifest == other.manifest)


def serialize_container(model: ModelContainer) -> bytes:
    model.validate()
    if model.version != VERSION:
        raise VersionUnsupported(f"cannot serialize version {model.version}")
    parts = [MAGIC, struct.pack("<HI", model.version, len(model.tensors))]
    for t in model.tensors:
        name = t.name.encode("utf-8")
        if len(name) > 0xFFFF:
            raise ValueError(f"tensor name too long: {t.name!r}")
        if t.data.dtype != np.float32:
            raise UnsupportedDtype(f"tensor {t.name!r}: only f32 is supported")
        parts.append(struct.pack("<H", len(name)))
        parts.append(name)
        parts.append(struct.pack("<BB", _DTYPE_F32, len(t.shape)))
        parts.append(struct.pack(f"<{len(t.shape)}I", *t.shape))
    parts.append(struct.pack("<I", len(model.manifest)))
    for spec in model.manifest:
        parts.append(struct.pack("<HHH",
                                 model.tensor_index(spec.weight_tensor),
                                 spec.stride, spec.padding))
    for t in model.tensors:
        if np.little_endian:
            parts.append(t.data.tobytes())
        else:
            parts.append(t.data.byteswap().tobytes())
    return b"".join(parts)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise TruncatedFile(
                f"need {n} bytes at offset {self.pos}, have "
                f"{len(self.data) - self.pos}")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def parse_container(data: bytes) -> ModelContainer:
    r = _Reader(data)
    if r.take(4) != MAGIC:
        raise BadMagic("not an NNRW container")
    version, tensor_count = r.unpack("<HI")
    if version != VERSION:
        raise VersionUnsupported(f"container version {version}")

    metas = []
    for _ in range(tensor_count):
        (name_len,) = r.unpack("<H")
        try:
            name = r.take(name_len).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedContainer(f"corrupt tensor name bytes: {exc}")
        dtype, rank = r.unpack("<BB")
        if dtype != _DTYPE_F32:
            raise UnsupportedDtype(f"tensor {name!r}: dtype code {dtype}")
        shape = r.unpack(f"<{rank}I")
        if any(s == 0 for s in shape):
            raise MalformedContainer(f"tensor {name!r} has a zero dimension")
        metas.append((name, shape))

    (layer_count,) = r.unpack("<I")
    layers = []
    for i in range(layer_count):
        tensor_idx, stride, padding = r.unpack("<HHH")
        if tensor_idx >= tensor_count:
            raise ManifestDangling(
                f"layer {i} references tensor index {tensor_idx} "
                f"of {tensor_count}")
        layers.append((i, tensor_idx, stride, padding))

    tensors = []
    for name, shape in metas:
        count = 1
        for s in shape:
            count *= s
        raw = r.take(4 * count)
        arr = np.frombuffer(raw, dtype="<f4").astype(np.float32)
        tensors.append(WeightTensor(name=name, shape=shape, data=arr))
    if r.pos != len(data):
        raise TruncatedFile(
            f"{len(data) - r.pos} trailing bytes after container data")

    try:
        manifest = [LayerSpec(layer_index=i, weight_tensor=metas[idx][0],
                              stride=stride, padding=padding)
                    for i, idx, stride, padding in layers]
        return ModelContainer(tensors=tensors, manifest=manifest,
                              version=version)
    except ValueError as exc:
        raise MalformedContainer(str(exc))


def model_digest(model: ModelContainer) -> bytes:
    """SHA-256 over the canonical container bytes (32 raw bytes)."""
    return hashlib.sha256(serialize_container(model)).digest()


def load_container(path) -> ModelContainer:
    with open(path, "rb") as fh:
        return parse_container(fh.read())


def save_container(model: ModelContainer, path) -> None:
    with open(path, "wb") as fh:
        fh.write(serialize_container(model))
