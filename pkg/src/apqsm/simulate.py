"""Seeded Monte Carlo SER estimation over transmit SNR."""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.stats import binomtest

from .detection import BATCH_DETECTORS, received_points, transmit
from .modulation import Codebook


def sigma_from_snr_db(snr_db: float, gamma: float = 1.0, p_opt: float = 1.0) -> float:
    """Noise std for transmit SNR E_s/N_0 with B*T_sym = 1; +inf dB gives 0."""
    if snr_db == math.inf:
        return 0.0
    if not math.isfinite(snr_db):
        raise ValueError(f"SNR must be finite or +inf, got {snr_db!r}")
    return gamma * p_opt / math.sqrt(10.0 ** (snr_db / 10.0))


def wilson_interval(errors: int, trials: int, confidence: float = 0.95) -> tuple:
    if trials == 0:
        return 0.0, 1.0
    ci = binomtest(int(errors), int(trials)).proportion_ci(confidence, method="wilson")
    return float(ci.low), float(ci.high)


def point_seed(master_seed: int, snr_db: float) -> np.random.SeedSequence:
    """Independent stream per SNR value, stable under reordering of the SNR list."""
    key = int(np.float64(snr_db).view(np.uint64))
    return np.random.SeedSequence(master_seed, spawn_key=(key,))


@dataclass
class SweepSpec:
    codebook: Codebook
    H: np.ndarray
    snr_db_list: list
    detector: str = "joint"
    gamma: float = 1.0
    p_opt: float = 1.0
    min_errors: int = 200
    max_trials: int = 10_000_000
    master_seed: int = 0
    batch_size: int = 20_000
    label: str = ""
    # optional per-SNR codebooks, keyed by SNR value (power re-optimised per point)
    codebooks: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.detector not in BATCH_DETECTORS:
            raise ValueError(f"unknown detector {self.detector!r}")
        if self.min_errors < 1 or self.max_trials < 1 or self.batch_size < 1:
            raise ValueError("min_errors, max_trials and batch_size must be positive")
        self.H = np.asarray(getattr(self.H, "gains", self.H), dtype=float)


@dataclass
class SerPoint:
    snr_db: float
    trials: int
    errors: int
    ser: float
    ci_lo: float
    ci_hi: float
    unreliable: bool = False
    bound: float = math.nan


class SerCurve(list):
    """List of :class:`SerPoint` sorted by SNR."""

    COLUMNS = ("snr_db", "trials", "errors", "ser", "ci_lo", "ci_hi")

    @property
    def unreliable(self) -> list:
        return [pt.snr_db for pt in self if pt.unreliable]

    def to_csv(self, with_bound: bool = False) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.COLUMNS + (("bound",) if with_bound else ()))
        for pt in self:
            row = [f"{pt.snr_db:g}", pt.trials, pt.errors, f"{pt.ser:.10g}",
                   f"{pt.ci_lo:.10g}", f"{pt.ci_hi:.10g}"]
            if with_bound:
                row.append(f"{pt.bound:.10g}")
            w.writerow(row)
        return buf.getvalue()


def run_point(spec: SweepSpec, snr_db: float) -> SerPoint:
    """Simulate one SNR point until ``min_errors`` symbol errors or ``max_trials``.

    A symbol error is any mismatch of the (spatial, signal) index pair.
    """
    codebook = spec.codebooks.get(snr_db, spec.codebook)
    sigma = sigma_from_snr_db(snr_db, spec.gamma, spec.p_opt)
    rng = np.random.default_rng(point_seed(spec.master_seed, snr_db))
    points = received_points(codebook, spec.H, spec.gamma)
    detect = BATCH_DETECTORS[spec.detector]
    flat = codebook.flat
    n_signal = codebook.n_signal
    trials = errors = 0
    while trials < spec.max_trials and errors < spec.min_errors:
        n = min(spec.batch_size, spec.max_trials - trials)
        k = rng.integers(0, codebook.size, n)
        y = transmit(spec.H, flat[k], spec.gamma, sigma, rng)
        s_hat, m_hat = detect(y, points)
        errors += int(np.count_nonzero(s_hat * n_signal + m_hat != k))
        trials += n
        if sigma == 0:
            break
    lo, hi = wilson_interval(errors, trials)
    return SerPoint(float(snr_db), trials, errors, errors / trials, lo, hi,
                    unreliable=sigma > 0 and errors < spec.min_errors)


def _run_point_args(args):
    return run_point(*args)


def run_sweep(spec: SweepSpec, workers: int = 1) -> SerCurve:
    """One :func:`run_point` per SNR; each point owns an independent seeded stream,
    so results do not depend on ``workers``."""
    snrs = sorted(float(s) for s in spec.snr_db_list)
    if not snrs:
        raise ValueError("SNR list is empty")
    if workers > 1 and len(snrs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            points = list(pool.map(_run_point_args, [(spec, s) for s in snrs]))
    else:
        points = [run_point(spec, s) for s in snrs]
    return SerCurve(points)


def two_step_decomposition(codebook: Codebook, H, gamma: float, sigma: float,
                           trials: int, rng: np.random.Generator) -> dict:
    """Monte Carlo estimate of the terms of the exact two-step error decomposition.

    Returns the stage-1 index error rate, the symbol error rate conditioned
    on a correct and on a wrong index decision, and the overall SER.
    """
    points = received_points(codebook, H, gamma)
    k = rng.integers(0, codebook.size, trials)
    y = transmit(H, codebook.flat[k], gamma, sigma, rng)
    s_hat, m_hat = BATCH_DETECTORS["two-step"](y, points)
    s_true, m_true = k // codebook.n_signal, k % codebook.n_signal
    idx_err = s_hat != s_true
    sym_err = m_hat != m_true
    n_wrong = int(idx_err.sum())
    n_right = trials - n_wrong
    return {
        "index_error_rate": n_wrong / trials,
        "symbol_error_given_correct": float(sym_err[~idx_err].sum() / n_right) if n_right else math.nan,
        "symbol_error_given_wrong": float(sym_err[idx_err].sum() / n_wrong) if n_wrong else math.nan,
        "ser": float(np.mean(idx_err | sym_err)),
    }


def with_detector(spec: SweepSpec, detector: str) -> SweepSpec:
    return replace(spec, detector=detector)
