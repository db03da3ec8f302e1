import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from codedeq.modem import QPSK_GRAY, ConstellationMap, qpsk_hard_demodulate, qpsk_modulate

even_bits = st.lists(st.integers(0, 1), max_size=200).filter(lambda b: len(b) % 2 == 0)


def test_first_quadrant_point():
    assert qpsk_modulate([0, 0])[0] == pytest.approx((1 + 1j) / np.sqrt(2))


def test_antipodal_pair():
    s = qpsk_modulate([0, 0, 1, 1])
    assert s[1] == pytest.approx(-s[0])


def test_unit_energy_and_gray_neighbours():
    pts = QPSK_GRAY.points
    assert np.allclose(np.abs(pts), 1.0, atol=1e-12)
    labels = [(b0, b1) for b0 in (0, 1) for b1 in (0, 1)]
    for a in range(4):
        for b in range(a + 1, 4):
            d = abs(pts[a] - pts[b])
            hamming = sum(x != y for x, y in zip(labels[a], labels[b]))
            # nearest neighbours sit at distance sqrt(2), the antipode at 2
            assert hamming == (1 if np.isclose(d, np.sqrt(2)) else 2)


@given(even_bits)
def test_round_trip(bits):
    assert list(qpsk_hard_demodulate(qpsk_modulate(bits))) == bits


@given(even_bits, st.floats(1e-3, 1e3))
def test_scale_invariance(bits, alpha):
    rng = np.random.default_rng(len(bits))
    s = qpsk_modulate(bits) + 0.3 * (rng.standard_normal(len(bits) // 2)
                                      + 1j * rng.standard_normal(len(bits) // 2))
    assert np.array_equal(qpsk_hard_demodulate(alpha * s), qpsk_hard_demodulate(s))


def test_nearest_neighbour_and_tie():
    assert list(qpsk_hard_demodulate([0.9 + 0.1j])) == [0, 0]
    assert list(qpsk_hard_demodulate([-0.2 - 3j])) == [1, 1]
    assert list(qpsk_hard_demodulate([0j])) == [0, 0]


def test_modulate_rejects_bad_input():
    with pytest.raises(ValueError):
        qpsk_modulate([0, 1, 1])
    with pytest.raises(ValueError):
        qpsk_modulate([0, 3])


def test_custom_map_levels():
    cmap = ConstellationMap(i_levels=(-1.0, 1.0), q_levels=(1.0, -1.0))
    s = qpsk_modulate([0, 0, 1, 1], cmap)
    assert np.allclose(s, [-1 + 1j, 1 - 1j])
    assert list(qpsk_hard_demodulate(s, cmap)) == [0, 0, 1, 1]
