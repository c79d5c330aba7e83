import itertools
import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from apqsm.baselines import MAX_CODEBOOK, active_sets, build_ma_sm, build_sm_pam
from apqsm.modulation import (ApqScheme, PowerVector, average_symbol_energy, gray_decode,
                              gray_encode, pam_levels)
from apqsm.channel import SystemParams

SPLITS = [(2, 4, 2), (4, 4, 4), (2, 2, 2), (1, 4, 4), (8, 2, 4)]


def test_pam_levels_have_unit_mean():
    assert np.allclose(pam_levels(4), [0.4, 0.8, 1.2, 1.6])
    for m in (1, 2, 8, 64):
        assert pam_levels(m).mean() == pytest.approx(1.0, rel=1e-15)
    with pytest.raises(ValueError):
        pam_levels(0)


def test_amplitude_hand_value():
    s = ApqScheme(4, (2, 4, 2), PowerVector((0.5, 0.3, 0.2)))
    # parts (2/3, 2/5, 2/3) are indices a=0, q=0, t=0
    assert s.part_indices(0) == (0, 0, 0)
    assert s.amplitude(0) == pytest.approx(0.5 * 2 / 3 + 0.3 * 2 / 5 + 0.2 * 2 / 3)
    assert s.amplitude(0) == pytest.approx(0.5867, abs=1e-4)


def test_mixed_radix_index():
    s = ApqScheme(4, (2, 4, 2))
    assert s.part_indices(1 * 8 + 3 * 2 + 1) == (1, 3, 1)
    with pytest.raises(IndexError):
        s.part_indices(16)


def test_spectral_efficiency():
    assert ApqScheme(4, (2, 4, 2)).spectral_efficiency == 6
    assert ApqScheme(4, (4, 4, 4)).spectral_efficiency == 8
    assert ApqScheme(4, (2, 4, 2)).codebook().size == 64


@pytest.mark.parametrize("bad", [(3, 2, 2), (2, 2), (2, 0, 2)])
def test_bad_split(bad):
    with pytest.raises(ValueError):
        ApqScheme(4, bad)


def test_bad_led_count():
    with pytest.raises(ValueError):
        ApqScheme(3, (2, 2, 2))


@pytest.mark.parametrize("p", [(0.2, 0.3, 0.5), (0.5, 0.3, 0.3), (0.5, 0.6, -0.1), (np.nan, 0.5, 0.5)])
def test_power_vector_rejects_infeasible(p):
    with pytest.raises(ValueError):
        PowerVector(p)


def test_power_vector_tolerance_scales_with_p_opt():
    PowerVector((2.0, 1.0, 1.0 + 3e-12), p_opt=4.0)
    with pytest.raises(ValueError):
        PowerVector((2.0, 1.0, 1.0 + 1e-10), p_opt=4.0)


def test_fixed_is_four_two_one():
    p = PowerVector.fixed(7.0).p
    assert p == pytest.approx((4.0, 2.0, 1.0), rel=1e-15)


def test_fixed_power_gives_distinct_amplitudes_for_242():
    amps = ApqScheme(4, (2, 4, 2), PowerVector.fixed()).amplitudes()
    assert len(np.unique(np.round(amps, 12))) == 16


@pytest.mark.parametrize("split", SPLITS)
def test_lattice_allocation_gives_uniform_grid(split):
    amps = np.sort(ApqScheme(4, split, PowerVector.lattice(split)).amplitudes())
    gaps = np.diff(amps)
    assert np.allclose(gaps, gaps[0], rtol=1e-9)
    assert amps.mean() == pytest.approx(1.0, rel=1e-12)


def test_lattice_known_values():
    assert PowerVector.lattice((2, 4, 2)).p == pytest.approx((24 / 37, 10 / 37, 3 / 37))
    assert PowerVector.lattice((4, 4, 4)).p == pytest.approx((16 / 21, 4 / 21, 1 / 21))


def test_random_power_is_reproducible():
    a = PowerVector.random(np.random.default_rng(5))
    b = PowerVector.random(np.random.default_rng(5))
    assert a == b


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), p_opt=st.floats(0.01, 100))
def test_random_power_is_feasible(seed, p_opt):
    p = PowerVector.random(np.random.default_rng(seed), p_opt)
    assert p.p[0] >= p.p[1] >= p.p[2] >= 0
    assert abs(sum(p.p) - p_opt) <= 1e-12 * p_opt


@pytest.mark.parametrize("split", [(2, 4, 2), (4, 4, 4)])
def test_bit_mapping_roundtrip_exhaustive(split):
    s = ApqScheme(4, split)
    eta = s.spectral_efficiency
    seen = set()
    for word in itertools.product((0, 1), repeat=eta):
        tx = s.map_bits(word)
        assert s.demap(tx.led_index, tx.symbol_index) == list(word)
        seen.add((tx.led_index, tx.symbol_index))
    assert len(seen) == 2 ** eta


def test_spatial_bits_are_natural_binary():
    s = ApqScheme(4, (2, 4, 2))
    assert s.map_bits([1, 0, 0, 0, 0, 0]).led_index == 2
    assert s.map_bits([0, 1, 0, 0, 0, 0]).led_index == 1


def test_map_bits_validation():
    s = ApqScheme(4, (2, 4, 2))
    with pytest.raises(ValueError):
        s.map_bits([0] * 5)
    with pytest.raises(ValueError):
        s.map_bits([2] + [0] * 5)


@given(k=st.integers(0, 2 ** 20))
def test_gray_code_roundtrip_and_adjacency(k):
    assert gray_decode(gray_encode(k)) == k
    assert bin(gray_encode(k) ^ gray_encode(k + 1)).count("1") == 1


def test_neighbouring_part_levels_differ_in_one_bit():
    s = ApqScheme(4, (4, 4, 4))
    for part in range(3):
        for k in range(3):
            idx = [0, 0, 0]
            a = idx.copy(); a[part] = k
            b = idx.copy(); b[part] = k + 1
            ma = a[0] * 16 + a[1] * 4 + a[2]
            mb = b[0] * 16 + b[1] * 4 + b[2]
            diff = np.array(s.demap(0, ma)) ^ np.array(s.demap(0, mb))
            assert diff.sum() == 1


def test_tx_vector_is_single_led():
    s = ApqScheme(4, (2, 4, 2))
    tx = s.tx_vector(2, 5)
    assert np.count_nonzero(tx.vector) == 1 and tx.vector[2] == tx.amplitude
    with pytest.raises(IndexError):
        s.tx_vector(4, 0)


def test_average_symbol_energy():
    assert average_symbol_energy(SystemParams(), 1.0) == 1.0
    with pytest.raises(ValueError):
        average_symbol_energy(SystemParams(), 0.0)


@settings(max_examples=100, deadline=None)
@given(split=st.sampled_from(SPLITS), seed=st.integers(0, 10 ** 9), p_opt=st.floats(0.1, 10))
def test_apq_mean_power_is_conserved(split, seed, p_opt):
    p = PowerVector.random(np.random.default_rng(seed), p_opt)
    cb = ApqScheme(4, split, p).codebook()
    assert abs(cb.mean_optical_power() - p_opt) <= 1e-12 * p_opt


def test_sm_pam_codebook():
    cb = build_sm_pam(4, 16)
    assert cb.size == 64 and cb.spectral_efficiency == 6
    assert build_sm_pam(4, 64).spectral_efficiency == 8
    assert cb.mean_optical_power() == pytest.approx(1.0, rel=1e-12)
    assert np.all(np.count_nonzero(cb.flat, axis=1) == 1)
    with pytest.raises(ValueError):
        build_sm_pam(4, 12)


def test_active_sets():
    assert active_sets(4, 2) == [(0, 1), (0, 2), (0, 3), (1, 2)]
    assert len(active_sets(4, 1)) == 4
    assert len(active_sets(8, 3)) == 32


@pytest.mark.parametrize("m_pam, eta", [(4, 6), (8, 8)])
def test_ma_sm_counts(m_pam, eta):
    cb = build_ma_sm(4, 2, m_pam)
    assert cb.n_spatial == 4
    assert cb.spectral_efficiency == eta
    assert np.all(np.count_nonzero(cb.flat, axis=1) == 2)
    assert len({tuple(v) for v in cb.flat}) == cb.size


@settings(max_examples=40, deadline=None)
@given(n_t=st.sampled_from([2, 4, 8]), m=st.sampled_from([2, 4, 8, 16]),
       p_opt=st.floats(0.1, 10), data=st.data())
def test_baselines_conserve_power(n_t, m, p_opt, data):
    n_a = data.draw(st.integers(1, min(n_t - 1, 3)))
    assume(len(active_sets(n_t, n_a)) * m ** n_a <= MAX_CODEBOOK)
    for cb in (build_sm_pam(n_t, m, p_opt), build_ma_sm(n_t, n_a, m, p_opt)):
        assert abs(cb.mean_optical_power() - p_opt) <= 1e-12 * p_opt


def test_ma_sm_validation():
    with pytest.raises(ValueError):
        build_ma_sm(4, 4, 4)
    with pytest.raises(ValueError):
        build_ma_sm(4, 2, 6)
    with pytest.raises(ValueError, match="too large"):
        build_ma_sm(8, 7, 16)


def test_codebook_rejects_negative():
    from apqsm.modulation import Codebook
    with pytest.raises(ValueError):
        Codebook(-np.ones((1, 2, 2)))
    assert math.isclose(Codebook(np.ones((2, 2, 2))).spectral_efficiency, 2.0)
