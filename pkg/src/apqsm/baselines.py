"""Reference schemes: single-LED SM with PAM and multiple-active-LED SM."""

from __future__ import annotations

import itertools
import math

import numpy as np

from .modulation import Codebook, is_power_of_two, pam_levels

MAX_CODEBOOK = 1 << 16


def build_sm_pam(n_t: int, m_pam: int, p_opt: float = 1.0) -> Codebook:
    """SM-PAM codebook: one active LED carrying one of ``m_pam`` levels.

    Levels are ``2*P_opt*k/(m_pam+1)`` so that the mean intensity is P_opt.
    """
    if not is_power_of_two(n_t) or not is_power_of_two(m_pam):
        raise ValueError(f"n_t and m_pam must be powers of 2, got {n_t}, {m_pam}")
    levels = p_opt * pam_levels(m_pam)
    vectors = np.zeros((n_t, m_pam, n_t))
    for l in range(n_t):
        vectors[l, :, l] = levels
    return Codebook(vectors, name="sm-pam")


def active_sets(n_t: int, n_a: int) -> list:
    """First ``2**floor(log2 C(n_t, n_a))`` LED subsets in lexicographic order."""
    n_comb = math.comb(n_t, n_a)
    n_used = 1 << (n_comb.bit_length() - 1)
    return list(itertools.islice(itertools.combinations(range(n_t), n_a), n_used))


def build_ma_sm(n_t: int, n_a: int, m_pam: int, p_opt: float = 1.0) -> Codebook:
    """MA-SM codebook with ``n_a`` simultaneously active LEDs.

    Each active LED sends an independent ``m_pam``-PAM level scaled by
    ``P_opt / n_a``, so the total mean intensity per codeword is P_opt.
    Spatial index = position of the LED subset in :func:`active_sets`,
    signal index = mixed-radix digits of the per-LED levels (first LED
    most significant).
    """
    if not 1 <= n_a < n_t:
        raise ValueError(f"need 1 <= n_a < n_t, got n_a={n_a}, n_t={n_t}")
    if not is_power_of_two(m_pam):
        raise ValueError(f"m_pam must be a power of 2, got {m_pam}")
    sets = active_sets(n_t, n_a)
    if len(sets) * m_pam ** n_a > MAX_CODEBOOK:
        raise ValueError(f"MA-SM codebook with {len(sets) * m_pam ** n_a} entries is too large")
    levels = p_opt / n_a * pam_levels(m_pam)
    n_signal = m_pam ** n_a
    vectors = np.zeros((len(sets), n_signal, n_t))
    digits = list(itertools.product(range(m_pam), repeat=n_a))
    for s, leds in enumerate(sets):
        for m, ks in enumerate(digits):
            vectors[s, m, list(leds)] = levels[list(ks)]
    return Codebook(vectors, name="ma-sm")
