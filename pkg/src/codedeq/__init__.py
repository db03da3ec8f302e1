"""Coded-channel equalization lab: convolutional coding, QPSK, ISI channel,
LMS / CNN / BiLSTM equalizers and soft Viterbi decoding."""
from .channel import ChannelSpec, SeededRng, add_awgn, apply_fir, transmit
from .coding import (
    ConvCodeSpec,
    Trellis,
    build_trellis,
    conv_encode,
    viterbi_decode_hard,
    viterbi_decode_soft,
)
from .equalizers import CNNEqualizer, RNNEqualizer, load_equalizer
from .lms import LMSEqualizer, lms_apply, lms_train
from .modem import QPSK_GRAY, qpsk_hard_demodulate, qpsk_modulate

__version__ = "0.1.0"

__all__ = [
    "ChannelSpec", "SeededRng", "add_awgn", "apply_fir", "transmit",
    "ConvCodeSpec", "Trellis", "build_trellis", "conv_encode",
    "viterbi_decode_hard", "viterbi_decode_soft",
    "CNNEqualizer", "RNNEqualizer", "LMSEqualizer", "load_equalizer",
    "lms_apply", "lms_train", "QPSK_GRAY", "qpsk_hard_demodulate", "qpsk_modulate",
]
