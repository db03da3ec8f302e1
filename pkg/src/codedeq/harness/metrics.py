from __future__ import annotations

import math

import numpy as np

from .._validation import check_bits, check_iq
from ..coding import Trellis, viterbi_decode_soft
from ..modem import QPSK_GRAY, ConstellationMap, qpsk_hard_demodulate

__all__ = [
    "bit_errors",
    "measure_pre_decoder_ber",
    "measure_post_decoder_ber",
    "ber_standard_error",
    "qpsk_theory_ber",
]


def bit_errors(a, b) -> int:
    a, b = check_bits(a, "a"), check_bits(b, "b")
    if a.size != b.size:
        raise ValueError(f"bit streams differ in length ({a.size} != {b.size})")
    return int(np.count_nonzero(a != b))


def measure_pre_decoder_ber(equalized, coded, cmap: ConstellationMap = QPSK_GRAY) -> float:
    """Hard-decision BER of the equalized symbols against the coded bits."""
    hard = qpsk_hard_demodulate(check_iq(equalized, "equalized"), cmap)
    coded = check_bits(coded, "coded")
    if hard.size != coded.size:
        raise ValueError(f"{hard.size} demodulated bits vs {coded.size} coded bits")
    return bit_errors(hard, coded) / coded.size


def measure_post_decoder_ber(equalized, info, trellis: Trellis,
                             cmap: ConstellationMap = QPSK_GRAY) -> float:
    """Soft-Viterbi decode and compare to the info bits (tail excluded)."""
    info = check_bits(info, "info")
    decoded = viterbi_decode_soft(check_iq(equalized, "equalized"), trellis, cmap)
    if decoded.size != info.size:
        raise ValueError(f"decoded {decoded.size} info bits, expected {info.size}")
    return bit_errors(decoded, info) / info.size


def ber_standard_error(ber: float, n_bits: int) -> float:
    """Binomial standard error of a BER estimate."""
    return math.sqrt(max(ber * (1.0 - ber), 0.0) / n_bits)


def qpsk_theory_ber(snr_db: float) -> float:
    """Gray QPSK BER at E_s/N0 = snr_db: Q(sqrt(E_s/N0))."""
    esn0 = 10.0 ** (snr_db / 10.0)
    return 0.5 * math.erfc(math.sqrt(esn0) / math.sqrt(2.0))
