#!/usr/bin/env python3
"""Build a model container, serialize it, and check bit-exact parsing.

The container format is the canonical byte form of a model: same contents,
same bytes, which is what makes whole-model SHA-256 digests meaningful.
"""

import numpy as np

import nnrw

rng = np.random.default_rng(0)

# two conv layers with some awkward bit patterns mixed in
tensors, manifest = [], []
for i in range(2):
    w = rng.normal(0, 0.05, size=(8, 4, 3, 3)).astype(np.float32)
    flat = w.reshape(-1)
    flat[0] = np.nan          # NaN payloads survive the round trip
    flat[1] = np.inf
    flat[2] = np.float32(1e-45)   # smallest subnormal
    flat[3] = -0.0
    tensors.append(nnrw.WeightTensor(name=f"conv{i}.weight",
                                     shape=w.shape, data=flat))
    manifest.append(nnrw.LayerSpec(layer_index=i,
                                   weight_tensor=f"conv{i}.weight",
                                   stride=1, padding=1))

model = nnrw.ModelContainer(tensors=tensors, manifest=manifest)

raw = nnrw.serialize_container(model)
print(f"serialized: {len(raw)} bytes, magic {raw[:4]!r}")

back = nnrw.parse_container(raw)
print("parse(serialize(m)) == m:", back == model)
print("re-serialization identical:", nnrw.serialize_container(back) == raw)

digest = nnrw.model_digest(model)
print("sha256:", digest.hex())

# every byte matters: flip one bit anywhere and the digest moves
mutated = bytearray(raw)
mutated[len(raw) // 2] ^= 1
import hashlib
print("digest changes under a 1-bit flip:",
      hashlib.sha256(bytes(mutated)).digest() != digest)
