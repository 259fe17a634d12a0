#!/usr/bin/env python3
"""End-to-end integrity protocol: seal a model, tamper with it, verify.

Sealing embeds the model's own SHA-256 reversibly into its last conv
layer.  Verification extracts the stored digest, restores the model
bit-for-bit, recomputes the digest, and compares: any modification
anywhere in the container breaks the match.
"""

import numpy as np

import nnrw

rng = np.random.default_rng(3)

tensors, manifest = [], []
for i in range(2):
    w = rng.uniform(0.10, 0.149, size=(16, 24, 3, 3)).astype(np.float32)
    w *= rng.choice([-1.0, 1.0], size=w.shape).astype(np.float32)
    flat = w.reshape(-1)
    idx = rng.choice(flat.size, size=int(flat.size * 0.4), replace=False)
    flat[idx] = np.float32(0.25)
    tensors.append(nnrw.WeightTensor(name=f"conv{i}.weight",
                                     shape=w.shape, data=flat))
    manifest.append(nnrw.LayerSpec(layer_index=i,
                                   weight_tensor=f"conv{i}.weight",
                                   stride=1, padding=1))
model = nnrw.ModelContainer(tensors=tensors, manifest=manifest)

print("original digest:", nnrw.model_digest(model).hex()[:32], "...")

sealed = nnrw.seal(model, nnrw.EmbedConfig(layers=[-1]))
print("sealed digest  :", nnrw.model_digest(sealed).hex()[:32],
      "... (differs: the mark is in the weights)")

report = nnrw.verify(sealed, [-1])
print("verify sealed  :", report.verdict)

# the watermark is fragile by design: flip one mantissa bit anywhere
raw = bytearray(nnrw.serialize_container(sealed))
raw[len(raw) - 100] ^= 0x01
report = nnrw.verify_bytes(bytes(raw), [-1])
print("verify tampered:", report.verdict)

# extraction restores the original container exactly
message, restored = nnrw.extract_watermark(sealed, [-1])
print("restored == original:", restored == model)
print("extracted digest matches:",
      bytes(np.packbits(message)) == nnrw.model_digest(model))
