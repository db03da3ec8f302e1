"""Rate-1/n binary convolutional codes: encoder, trellis and Viterbi decoders.

Generator masks follow the MSB-is-current-input convention by default, so for
the (2,1,2) code with generators ``[3, 7]`` (octal)::

    7 -> u[n] ^ u[n-1] ^ u[n-2]
    3 ->        u[n-1] ^ u[n-2]

Encoding always starts from the all-zero state and appends ``m_memory`` zero
tail bits, so every codeword ends in state 0 (terminated trellis).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .modem import QPSK_GRAY, ConstellationMap

__all__ = [
    "ConvCodeSpec",
    "Trellis",
    "DEFAULT_CODE",
    "conv_encode",
    "build_trellis",
    "trellis_encode",
    "viterbi_decode_soft",
    "viterbi_decode_hard",
]


def _parity(x: int) -> int:
    return bin(x).count("1") & 1


def _reverse_bits(x: int, width: int) -> int:
    out = 0
    for _ in range(width):
        out = (out << 1) | (x & 1)
        x >>= 1
    return out


def _gf2_mod(a: int, b: int) -> int:
    db = b.bit_length()
    while a and a.bit_length() >= db:
        a ^= b << (a.bit_length() - db)
    return a


def _gf2_gcd(a: int, b: int) -> int:
    while b:
        a, b = b, _gf2_mod(a, b)
    return a


@dataclass(frozen=True)
class ConvCodeSpec:
    """Parameters of an (n, k, m) feed-forward convolutional code.

    ``generators`` holds integer tap masks (write them as octal literals, e.g.
    ``0o7``). ``tap_order`` is ``"msb_current"`` (mask MSB multiplies the
    current input bit) or ``"lsb_current"``.
    """

    n_outputs: int = 2
    k_inputs: int = 1
    m_memory: int = 2
    generators: tuple[int, ...] = (0o3, 0o7)
    tap_order: str = "msb_current"

    def __post_init__(self):
        object.__setattr__(self, "generators", tuple(int(g) for g in self.generators))
        if self.k_inputs != 1:
            raise ValueError("only rate-1/n codes (k_inputs=1) are supported")
        if self.m_memory < 1:
            raise ValueError("m_memory must be >= 1")
        if self.n_outputs < 1 or len(self.generators) != self.n_outputs:
            raise ValueError(
                f"expected {self.n_outputs} generators, got {len(self.generators)}"
            )
        if self.tap_order not in ("msb_current", "lsb_current"):
            raise ValueError(f"unknown tap_order {self.tap_order!r}")
        width = self.m_memory + 1
        for g in self.generators:
            if g <= 0 or g >= 1 << width:
                raise ValueError(f"generator {g:o} does not fit in {width} bits")
        masks = self.masks
        if not any(g >> self.m_memory & 1 for g in masks):
            raise ValueError("no generator taps the current input bit")
        # non-catastrophic iff gcd of the generator polynomials is a monomial
        common = masks[0]
        for g in masks[1:]:
            common = _gf2_gcd(common, g)
        if common & (common - 1):
            raise ValueError("catastrophic code: generators share a common factor")

    @property
    def masks(self) -> tuple[int, ...]:
        """Generator masks normalised to the MSB-is-current-input convention."""
        if self.tap_order == "msb_current":
            return self.generators
        return tuple(_reverse_bits(g, self.m_memory + 1) for g in self.generators)

    @property
    def num_states(self) -> int:
        return 1 << self.m_memory

    @property
    def rate(self) -> float:
        return self.k_inputs / self.n_outputs

    def coded_length(self, n_info: int) -> int:
        return self.n_outputs * (n_info + self.m_memory)

    def describe(self) -> str:
        gens = ",".join(f"{g:o}" for g in self.generators)
        return (
            f"conv({self.n_outputs},{self.k_inputs},{self.m_memory})"
            f"[{gens}]/{self.tap_order}"
        )


DEFAULT_CODE = ConvCodeSpec()


@dataclass(frozen=True, eq=False)
class Trellis:
    """Time-invariant trellis of a rate-1/n code.

    State ``s`` encodes the previous inputs with ``u[n-1]`` as its MSB.
    ``next_state[s, u]`` and ``outputs[s, u, :]`` give the transition on input
    bit ``u``; ``predecessors[s]`` lists the two ``(prev_state, input)`` pairs
    entering ``s`` in ascending state order.
    """

    spec: ConvCodeSpec
    next_state: np.ndarray
    outputs: np.ndarray
    predecessors: np.ndarray
    pred_inputs: np.ndarray
    pred_patterns: np.ndarray = field(repr=False)

    @property
    def num_states(self) -> int:
        return self.next_state.shape[0]

    @property
    def num_transitions(self) -> int:
        return self.next_state.size

    def __eq__(self, other):
        if not isinstance(other, Trellis):
            return NotImplemented
        return self.spec == other.spec and all(
            np.array_equal(a, b)
            for a, b in [
                (self.next_state, other.next_state),
                (self.outputs, other.outputs),
                (self.predecessors, other.predecessors),
                (self.pred_inputs, other.pred_inputs),
            ]
        )


def _check_bits(bits, name="bits") -> np.ndarray:
    arr = np.asarray(bits)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    if arr.size and not np.isin(arr, (0, 1)).all():
        raise ValueError(f"{name} must contain only 0 and 1")
    return arr.astype(np.uint8)


def conv_encode(info: Sequence[int], spec: ConvCodeSpec = DEFAULT_CODE) -> np.ndarray:
    """Encode ``info`` with zero tail termination.

    Returns ``n_outputs * (len(info) + m_memory)`` bits, interleaved per step
    in generator order.
    """
    u = _check_bits(info, "info")
    if u.size == 0:
        raise ValueError("cannot encode an empty info sequence")
    m = spec.m_memory
    u = np.concatenate([u, np.zeros(m, np.uint8)]).astype(np.int64)
    out = np.empty((u.size, spec.n_outputs), np.uint8)
    for j, g in enumerate(spec.masks):
        # tap k multiplies u[n-k]; mask bit m-k
        taps = np.array([(g >> (m - k)) & 1 for k in range(m + 1)], np.int64)
        out[:, j] = np.convolve(u, taps)[: u.size] & 1
    return out.reshape(-1)


def build_trellis(spec: ConvCodeSpec = DEFAULT_CODE) -> Trellis:
    m = spec.m_memory
    S = spec.num_states
    masks = spec.masks
    next_state = np.empty((S, 2), np.int64)
    outputs = np.empty((S, 2, spec.n_outputs), np.uint8)
    for s in range(S):
        for u in (0, 1):
            reg = (u << m) | s
            next_state[s, u] = reg >> 1
            outputs[s, u] = [_parity(reg & g) for g in masks]

    incoming: list[list[tuple[int, int]]] = [[] for _ in range(S)]
    for s in range(S):
        for u in (0, 1):
            incoming[next_state[s, u]].append((s, u))
    for lst in incoming:
        if len(lst) != 2:
            raise AssertionError("trellis state without exactly two predecessors")
        lst.sort()
    predecessors = np.array([[p for p, _ in lst] for lst in incoming], np.int64)
    pred_inputs = np.array([[u for _, u in lst] for lst in incoming], np.int64)

    weights = 1 << np.arange(spec.n_outputs - 1, -1, -1)
    patterns = (outputs.astype(np.int64) * weights).sum(axis=-1)
    pred_patterns = patterns[predecessors, pred_inputs]
    return Trellis(spec, next_state, outputs, predecessors, pred_inputs, pred_patterns)


def trellis_encode(info: Sequence[int], trellis: Trellis) -> np.ndarray:
    """Encode by walking the trellis from state 0 (with zero tail)."""
    u = _check_bits(info, "info")
    if u.size == 0:
        raise ValueError("cannot encode an empty info sequence")
    s = 0
    out = []
    for bit in list(u) + [0] * trellis.spec.m_memory:
        out.extend(trellis.outputs[s, bit])
        s = trellis.next_state[s, bit]
    return np.array(out, np.uint8)


def _viterbi(cost0: np.ndarray, cost1: np.ndarray, trellis: Trellis) -> np.ndarray:
    """Minimum-cost terminated path given per-code-bit costs.

    ``cost0[t, j]`` / ``cost1[t, j]`` are the costs of hypothesising code bit
    ``j`` of step ``t`` as 0 / 1. Ties go to the lower-numbered predecessor.
    """
    n = trellis.spec.n_outputs
    m = trellis.spec.m_memory
    steps = cost0.shape[0]
    if steps <= m:
        raise ValueError(f"need more than {m} trellis steps, got {steps}")

    n_patterns = 1 << n
    bits = (np.arange(n_patterns)[:, None] >> np.arange(n - 1, -1, -1)) & 1
    # branch metric for every step and every n-bit output pattern
    bm = np.where(bits[None, :, :] == 1, cost1[:, None, :], cost0[:, None, :]).sum(axis=-1)

    preds = trellis.predecessors
    pats = trellis.pred_patterns
    S = trellis.num_states
    metric = np.full(S, np.inf)
    metric[0] = 0.0
    choice = np.empty((steps, S), np.bool_)
    for t in range(steps):
        cand = metric[preds] + bm[t][pats]
        second = cand[:, 1] < cand[:, 0]
        choice[t] = second
        metric = np.where(second, cand[:, 1], cand[:, 0])

    decoded = np.empty(steps, np.uint8)
    s = 0
    pred_inputs = trellis.pred_inputs
    for t in range(steps - 1, -1, -1):
        c = int(choice[t, s])
        decoded[t] = pred_inputs[s, c]
        s = preds[s, c]
    return decoded[: steps - m]


def _steps_for(n_code_bits: int, trellis: Trellis) -> int:
    n = trellis.spec.n_outputs
    if n_code_bits % n:
        raise ValueError(
            f"{n_code_bits} code bits is not a multiple of n_outputs={n}"
        )
    return n_code_bits // n


def viterbi_decode_soft(
    soft: Sequence[complex],
    trellis: Trellis,
    modem_map: ConstellationMap = QPSK_GRAY,
) -> np.ndarray:
    """Soft-decision Viterbi on equalized constellation coordinates.

    The branch metric is the squared Euclidean distance between the received
    coordinates and the modulated branch bits. For an axis-separable map this
    splits exactly into one term per code bit (its I or Q coordinate).
    """
    r = np.asarray(soft, dtype=np.complex128).reshape(-1)
    coords = np.stack([r.real, r.imag], axis=1).reshape(-1)
    steps = _steps_for(coords.size, trellis)
    levels = modem_map.bit_levels  # (2 positions, 2 bit values)
    pos = np.arange(coords.size) % 2
    cost0 = ((coords - levels[pos, 0]) ** 2).reshape(steps, -1)
    cost1 = ((coords - levels[pos, 1]) ** 2).reshape(steps, -1)
    return _viterbi(cost0, cost1, trellis)


def viterbi_decode_hard(bits: Sequence[int], trellis: Trellis) -> np.ndarray:
    """Hard-decision Viterbi with Hamming branch metric."""
    b = _check_bits(bits, "bits").astype(np.float64)
    steps = _steps_for(b.size, trellis)
    b = b.reshape(steps, -1)
    return _viterbi(b, 1.0 - b, trellis)
