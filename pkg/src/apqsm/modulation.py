"""APQ constellations and the APQ-SM bit-to-transmit-vector mapping.

An M-ary APQ symbol superimposes three unipolar PAM parts (amplitude,
quadrant, phase) with power weights p = [p1, p2, p3]. A symbol index m is
decomposed mixed-radix as ``m = a*(M2*M3) + q*M3 + t``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

POWER_RTOL = 1e-12


def is_power_of_two(n: int) -> bool:
    return n >= 1 and not n & (n - 1)


def gray_encode(k: int) -> int:
    return k ^ (k >> 1)


def gray_decode(g: int) -> int:
    k = 0
    while g:
        k ^= g
        g >>= 1
    return k


def pam_levels(order: int) -> np.ndarray:
    """Unipolar PAM levels ``2k/(order+1)``, k = 1..order, with unit mean."""
    if int(order) != order or order < 1:
        raise ValueError(f"PAM order must be a positive integer, got {order!r}")
    order = int(order)
    return 2.0 * np.arange(1, order + 1) / (order + 1)


@dataclass(frozen=True)
class PowerVector:
    """Per-part optical power allocation, ``p1 >= p2 >= p3 >= 0`` summing to P_opt."""

    p: tuple
    p_opt: float = 1.0

    def __post_init__(self):
        p = tuple(float(v) for v in self.p)
        if len(p) != 3:
            raise ValueError("power vector must have exactly 3 entries")
        tol = POWER_RTOL * self.p_opt
        if not all(math.isfinite(v) for v in p):
            raise ValueError("power entries must be finite")
        if abs(sum(p) - self.p_opt) > tol:
            raise ValueError(f"power entries must sum to {self.p_opt}, got {sum(p)!r}")
        if p[2] < -tol or p[1] < p[2] - tol or p[0] < p[1] - tol:
            raise ValueError(f"power entries must satisfy p1 >= p2 >= p3 >= 0, got {p}")
        object.__setattr__(self, "p", p)

    @classmethod
    def fixed(cls, p_opt: float = 1.0) -> "PowerVector":
        """The 4:2:1 split used as the fixed-allocation baseline and SCP start."""
        return cls((4 * p_opt / 7, 2 * p_opt / 7, p_opt - 6 * p_opt / 7), p_opt)

    @classmethod
    def lattice(cls, split, p_opt: float = 1.0) -> "PowerVector":
        """Allocation that makes the superimposed amplitudes a uniform PAM grid.

        Part i level spacing 2*p_i/(M_i+1) must equal the product of the
        later part sizes times the last part's spacing, giving
        ``p_i ~ (M_i + 1) * prod_{j>i} M_j``.
        """
        m1, m2, m3 = split
        w = np.array([(m1 + 1) * m2 * m3, (m2 + 1) * m3, m3 + 1], dtype=float)
        return cls.from_array(p_opt * w / w.sum(), p_opt)

    @classmethod
    def random(cls, rng: np.random.Generator, p_opt: float = 1.0) -> "PowerVector":
        """Uniform draw on the simplex, sorted into descending order."""
        w = np.sort(rng.dirichlet(np.ones(3)))[::-1] * p_opt
        return cls.from_array(w, p_opt)

    @classmethod
    def from_array(cls, p, p_opt: float = 1.0) -> "PowerVector":
        p = np.asarray(p, dtype=float)
        # re-derive p3 so the sum is exact up to one rounding
        return cls((p[0], p[1], p_opt - p[0] - p[1]), p_opt)

    def as_array(self) -> np.ndarray:
        return np.array(self.p)


@dataclass(frozen=True)
class Codebook:
    """All transmit vectors of a scheme, shaped (n_spatial, n_signal, n_t).

    The flat index of entry ``[s, m]`` is ``s * n_signal + m``, i.e. the
    spatial index is major. For single-LED schemes ``s`` is the active LED.
    """

    vectors: np.ndarray = field(repr=False)
    name: str = ""

    def __post_init__(self):
        v = np.array(self.vectors, dtype=float)
        if v.ndim != 3:
            raise ValueError("codebook vectors must be shaped (n_spatial, n_signal, n_t)")
        if np.any(v < 0):
            raise ValueError("transmit intensities must be non-negative")
        v.setflags(write=False)
        object.__setattr__(self, "vectors", v)

    @property
    def n_spatial(self) -> int:
        return self.vectors.shape[0]

    @property
    def n_signal(self) -> int:
        return self.vectors.shape[1]

    @property
    def n_t(self) -> int:
        return self.vectors.shape[2]

    @property
    def size(self) -> int:
        return self.n_spatial * self.n_signal

    @property
    def flat(self) -> np.ndarray:
        return self.vectors.reshape(self.size, self.n_t)

    @property
    def spectral_efficiency(self) -> float:
        return math.log2(self.size)

    def mean_optical_power(self) -> float:
        """Average total emitted intensity per codeword (equal priors)."""
        return float(self.flat.sum(axis=1).mean())


@dataclass(frozen=True)
class TxVector:
    led_index: int
    symbol_index: int
    amplitude: float
    vector: np.ndarray = field(repr=False)


class ApqScheme:
    """APQ-SM constellation for ``n_t`` LEDs and part sizes ``split``."""

    def __init__(self, n_t: int, split, power: PowerVector | None = None):
        split = tuple(int(s) for s in split)
        if len(split) != 3 or not all(is_power_of_two(s) for s in split):
            raise ValueError(f"split must be three powers of 2, got {split}")
        if not is_power_of_two(n_t):
            raise ValueError(f"LED count must be a power of 2, got {n_t}")
        self.n_t = int(n_t)
        self.split = split
        self.m_total = split[0] * split[1] * split[2]
        self.part_levels = tuple(pam_levels(s) for s in split)
        self.power = power if power is not None else PowerVector.fixed()
        m1, m2, m3 = split
        m = np.arange(self.m_total)
        self._part_index = np.stack([m // (m2 * m3), (m // m3) % m2, m % m3], axis=1)
        # level of each part for each symbol, shape (M, 3)
        self.part_values = np.stack(
            [self.part_levels[i][self._part_index[:, i]] for i in range(3)], axis=1)
        self.part_values.setflags(write=False)

    def __repr__(self):
        return f"ApqScheme(n_t={self.n_t}, split={self.split}, p={self.power.p})"

    def with_power(self, power: PowerVector) -> "ApqScheme":
        return ApqScheme(self.n_t, self.split, power)

    @property
    def bits_spatial(self) -> int:
        return int(math.log2(self.n_t))

    @property
    def bits_parts(self) -> tuple:
        return tuple(int(math.log2(s)) for s in self.split)

    @property
    def spectral_efficiency(self) -> int:
        return self.bits_spatial + sum(self.bits_parts)

    def part_indices(self, m: int) -> tuple:
        if not 0 <= m < self.m_total:
            raise IndexError(f"symbol index {m} out of range [0, {self.m_total})")
        return tuple(int(v) for v in self._part_index[m])

    def amplitudes(self) -> np.ndarray:
        return self.part_values @ self.power.as_array()

    def amplitude(self, m: int) -> float:
        self.part_indices(m)
        return float(self.part_values[m] @ self.power.as_array())

    def tx_vector(self, led_index: int, m: int) -> TxVector:
        if not 0 <= led_index < self.n_t:
            raise IndexError(f"LED index {led_index} out of range [0, {self.n_t})")
        amp = self.amplitude(m)
        vec = np.zeros(self.n_t)
        vec[led_index] = amp
        return TxVector(led_index, m, amp, vec)

    def codebook(self) -> Codebook:
        amps = self.amplitudes()
        vectors = np.zeros((self.n_t, self.m_total, self.n_t))
        for l in range(self.n_t):
            vectors[l, :, l] = amps
        return Codebook(vectors, name="apq-sm")

    def map_bits(self, bits) -> TxVector:
        bits = [int(b) for b in bits]
        if len(bits) != self.spectral_efficiency:
            raise ValueError(f"expected {self.spectral_efficiency} bits, got {len(bits)}")
        if any(b not in (0, 1) for b in bits):
            raise ValueError("bits must be 0 or 1")
        pos = self.bits_spatial
        led = _bits_to_int(bits[:pos])
        idx = []
        for n in self.bits_parts:
            idx.append(gray_decode(_bits_to_int(bits[pos:pos + n])))
            pos += n
        _, m2, m3 = self.split
        m = idx[0] * m2 * m3 + idx[1] * m3 + idx[2]
        return self.tx_vector(led, m)

    def demap(self, led_index: int, symbol_index: int) -> list:
        if not 0 <= led_index < self.n_t:
            raise IndexError(f"LED index {led_index} out of range [0, {self.n_t})")
        parts = self.part_indices(symbol_index)
        bits = _int_to_bits(led_index, self.bits_spatial)
        for k, n in zip(parts, self.bits_parts):
            bits += _int_to_bits(gray_encode(k), n)
        return bits


def _bits_to_int(bits) -> int:
    v = 0
    for b in bits:
        v = (v << 1) | b
    return v


def _int_to_bits(v: int, n: int) -> list:
    return [(v >> (n - 1 - i)) & 1 for i in range(n)]


def average_symbol_energy(params, symbol_duration: float) -> float:
    """E_s = gamma^2 * P_opt^2 * T_sym for a :class:`~apqsm.channel.SystemParams`."""
    if symbol_duration <= 0:
        raise ValueError("symbol duration must be positive")
    return params.conv_factor_A_per_W ** 2 * params.p_opt_W ** 2 * symbol_duration
