"""Reversible fragile watermarking and integrity sealing for conv weights.

The package embeds a bitstring into the convolution-weight tensors of a
serialized model by histogram-shifting an integer host sequence derived
from exact decimal digit pairs of the weights, restores the model
bit-for-bit on extraction, and uses the mechanism to seal and verify whole
models with their own SHA-256 digest.
"""

from .container import (LayerSpec, ModelContainer, WeightTensor,
                        load_container, model_digest, parse_container,
                        save_container, serialize_container)
from .digits import (DigitView, digit_view, decimal_exponent, host_symbol,
                     pair_decode, pair_value, write_pair)
from .host import (ExclusionMap, HostSequence, build_host,
                   select_pair_position)
from .hs import (HSParams, build_histogram, choose_peak_valley, frame_payload,
                 hs_embed, hs_extract, parse_payload)
from .protocol import (DEFAULT_OFFSET, EmbedConfig, VerifyReport,
                       embed_watermark, extract_watermark, seal, verify,
                       verify_bytes)
from .scoring import (ChannelRank, ScoreMatrix, bin_count_search,
                      channel_entropy, channel_scores, conv_forward,
                      rank_channels)
from .sidecar import EmbedPlan, decode_plan, encode_plan, lsb_read, lsb_replace

__version__ = "0.1.0"

__all__ = [
    "ModelContainer", "WeightTensor", "LayerSpec",
    "serialize_container", "parse_container", "model_digest",
    "load_container", "save_container",
    "DigitView", "digit_view", "decimal_exponent", "pair_value",
    "pair_decode", "host_symbol", "write_pair",
    "HostSequence", "ExclusionMap", "build_host", "select_pair_position",
    "HSParams", "build_histogram", "choose_peak_valley",
    "hs_embed", "hs_extract", "frame_payload", "parse_payload",
    "EmbedPlan", "encode_plan", "decode_plan", "lsb_read", "lsb_replace",
    "ScoreMatrix", "ChannelRank", "conv_forward", "channel_scores",
    "bin_count_search", "channel_entropy", "rank_channels",
    "EmbedConfig", "VerifyReport", "embed_watermark", "extract_watermark",
    "seal", "verify", "verify_bytes", "DEFAULT_OFFSET",
    "__version__",
]
