"""Channel-importance scoring for carrier selection.

Calibration inputs are pushed through a layer's convolution, global average
pooling turns each activation map into one score per output channel, and the
Shannon entropy of each channel's score distribution across the calibration
set ranks the channels.  Low entropy marks a channel whose responses carry
little information; those channels host the watermark first.

Binning rule: each channel's scores are split into m equal-width bins over
[min, max], where m is the largest count in [1, mu] that leaves no bin
empty.  A value exactly on an interior edge falls into the higher bin and
the maximum falls into the last bin; both realized as
floor((v - lo) * m / (hi - lo)) clamped to m - 1.
"""

from __future__ import annotations

import io
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import EmptyBin, ShapeMismatch


def _thread_count() -> int:
    env = os.environ.get("NNRW_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return min(8, os.cpu_count() or 1)


def conv_forward(image: np.ndarray, weights: np.ndarray,
                 stride: int = 1, padding: int = 0) -> np.ndarray:
    """Plain cross-correlation: zero padding, no bias, no activation.

    image is (c, h, w), weights (d, c, k, k); output (d, h', w') with
    h' = floor((h + 2p - k) / stride) + 1.  Accumulation is float64.
    """
    image = np.asarray(image, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    if image.ndim != 3 or weights.ndim != 4:
        raise ShapeMismatch("image must be (c,h,w), weights (d,c,k,k)")
    c, h, w = image.shape
    d, cw, kh, kw = weights.shape
    if cw != c:
        raise ShapeMismatch(f"input has {c} channels, weights expect {cw}")
    if kh != kw:
        raise ShapeMismatch("only square kernels are supported")
    k = kh
    if stride < 1:
        raise ShapeMismatch("stride must be >= 1")
    if k > h + 2 * padding or k > w + 2 * padding:
        raise ShapeMismatch("kernel larger than padded input")

    if padding:
        padded = np.zeros((c, h + 2 * padding, w + 2 * padding))
        padded[:, padding:padding + h, padding:padding + w] = image
    else:
        padded = image
    hp, wp = padded.shape[1:]
    h_out = (hp - k) // stride + 1
    w_out = (wp - k) // stride + 1

    # gather all (c,k,k) windows, then one tensordot per image
    s0, s1, s2 = padded.strides
    windows = np.lib.stride_tricks.as_strided(
        padded,
        shape=(h_out, w_out, c, k, k),
        strides=(s1 * stride, s2 * stride, s0, s1, s2),
        writeable=False)
    out = np.tensordot(weights, windows, axes=([1, 2, 3], [2, 3, 4]))
    return np.ascontiguousarray(out)


@dataclass(frozen=True)
class ScoreMatrix:
    """mu x d matrix: rows are calibration images, columns output channels."""
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise ValueError("score matrix must be mu x d with mu,d >= 1")
        if not np.all(np.isfinite(v)):
            raise ValueError("score matrix entries must be finite")
        object.__setattr__(self, "values", v)


def channel_scores(weights: np.ndarray, images, stride: int = 1,
                   padding: int = 0) -> ScoreMatrix:
    """Global-average-pooled conv responses; row g is image g's d scores."""
    images = list(images)
    if not images:
        raise ValueError("at least one calibration image is required")

    def one(img):
        act = conv_forward(img, weights, stride=stride, padding=padding)
        return act.mean(axis=(1, 2))

    workers = _thread_count()
    if workers > 1 and len(images) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(one, images))  # keeps row order
    else:
        rows = [one(img) for img in images]
    return ScoreMatrix(values=np.stack(rows))


def _bin_index(column: np.ndarray, m: int) -> np.ndarray:
    lo = column.min()
    hi = column.max()
    if hi == lo:
        return np.zeros(len(column), dtype=np.intp)
    idx = np.floor((column - lo) * m / (hi - lo)).astype(np.intp)
    return np.minimum(idx, m - 1)


def bin_count_search(column: np.ndarray) -> int:
    """Largest m in [1, mu] whose equal-width binning has no empty bin."""
    column = np.asarray(column, dtype=np.float64)
    mu = len(column)
    if mu < 1:
        raise ValueError("empty column")
    if column.min() == column.max():
        return 1
    for m in range(mu, 1, -1):
        counts = np.bincount(_bin_index(column, m), minlength=m)
        if counts.all():
            return m
    return 1


def channel_entropy(column: np.ndarray, m: int) -> float:
    """Shannon entropy (bits) of the m-bin occupancy; requires no empty bin."""
    column = np.asarray(column, dtype=np.float64)
    if m < 1 or m > len(column):
        raise ValueError(f"bin count {m} out of range")
    counts = np.bincount(_bin_index(column, m), minlength=m)
    if not counts.all():
        raise EmptyBin(f"m={m} leaves an empty bin")
    p = counts / len(column)
    return float(-(p * np.log2(p)).sum())


@dataclass(frozen=True)
class ChannelRank:
    """Per-channel entropies with the ascending order permutation."""
    entropies: np.ndarray
    order: np.ndarray       # permutation J, lowest entropy first
    bin_counts: np.ndarray


def rank_channels(scores: ScoreMatrix) -> ChannelRank:
    v = scores.values
    d = v.shape[1]
    ms = np.empty(d, dtype=np.intp)
    hs = np.empty(d, dtype=np.float64)
    for l in range(d):
        col = v[:, l]
        m = bin_count_search(col)
        ms[l] = m
        hs[l] = channel_entropy(col, m)
    # ascending entropy, ties broken by channel index
    order = np.array(sorted(range(d), key=lambda l: (hs[l], l)), dtype=np.intp)
    return ChannelRank(entropies=hs, order=order, bin_counts=ms)


def rank_channels_by_weight_variance(weights: np.ndarray) -> np.ndarray:
    """Fallback ranking when no calibration data exists.

    Orders channels by ascending variance of |w|; the permutation is stored
    in the embedding plan, so this only shapes where bits go, never whether
    extraction succeeds.  Non-finite weights count as zero so a stray NaN
    cannot poison the ordering.
    """
    w = np.abs(np.nan_to_num(np.asarray(weights, dtype=np.float64),
                             nan=0.0, posinf=0.0, neginf=0.0))
    w = w.reshape(w.shape[0], -1)
    var = w.var(axis=1)
    return np.array(sorted(range(w.shape[0]), key=lambda l: (var[l], l)),
                    dtype=np.intp)


def rank_report_csv(rank: ChannelRank) -> str:
    """CSV report: channel, bin count, entropy (bits), rank position."""
    pos = np.empty(len(rank.order), dtype=np.intp)
    pos[rank.order] = np.arange(len(rank.order))
    buf = io.StringIO()
    buf.write("channel,bins,entropy_bits,rank\n")
    for l in range(len(rank.order)):
        buf.write(f"{l},{rank.bin_counts[l]},{rank.entropies[l]:.12g},{pos[l]}\n")
    return buf.getvalue()
