#!/usr/bin/env python3
"""Entropy-based channel ranking from calibration activations.

Calibration inputs run through the layer's convolution; global average
pooling give one score per output channel per image, and the entropy of
each channel's score distribution ranks the channels.  Low entropy means
the channel reacts uniformly, so it can host watermark bits first.
"""

import numpy as np

from nnrw import scoring

rng = np.random.default_rng(7)

d, c_in, k = 6, 3, 3
weights = rng.normal(0, 0.2, size=(d, c_in, k, k))
# an all-zero filter responds identically to every input: entropy 0,
# so the ranking must put channel 3 first
weights[3] = 0.0

images = [rng.normal(size=(c_in, 12, 12)) for _ in range(24)]

scores = scoring.channel_scores(weights, images, stride=1, padding=1)
print("score matrix:", scores.values.shape, "(images x channels)")

rank = scoring.rank_channels(scores)
print()
print(scoring.rank_report_csv(rank))
print("ranking (least important first):", rank.order.tolist())

# the verification pipeline survives without calibration data too
fallback = scoring.rank_channels_by_weight_variance(weights)
print("weight-variance fallback ranking:", fallback.tolist())
