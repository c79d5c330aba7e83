"""AWGN transmission and maximum-likelihood detection.

Both detectors accept a single received vector (shape ``(N_r,)``) or a
batch (shape ``(B, N_r)``). Ties go to the lowest index in codebook order.
"""

from __future__ import annotations

import numpy as np

from .modulation import Codebook

DETECTORS = ("joint", "two-step")


def _gains(H) -> np.ndarray:
    return np.asarray(getattr(H, "gains", H), dtype=float)


def received_points(codebook: Codebook, H, gamma: float) -> np.ndarray:
    """Noiseless receive vectors ``gamma*H*x`` for every codeword, shape (S, M, N_r)."""
    return gamma * codebook.vectors @ _gains(H).T


def transmit(H, x, gamma: float, sigma: float, rng: np.random.Generator | None = None):
    """Return ``y = gamma*H*x + z`` with i.i.d. N(0, sigma^2) noise per photodiode."""
    H = _gains(H)
    x = np.asarray(getattr(x, "vector", x), dtype=float)
    if x.shape[-1] != H.shape[1]:
        raise ValueError(f"transmit vector length {x.shape[-1]} does not match "
                         f"{H.shape[1]} LEDs")
    y = gamma * x @ H.T
    if sigma > 0:
        if rng is None:
            raise ValueError("a seeded generator is required when sigma > 0")
        y = y + sigma * rng.standard_normal(y.shape)
    return y


def squared_distances(y, points) -> np.ndarray:
    """``||y_b - points_k||^2`` for a batch ``y`` (B, N_r) and points (..., N_r)."""
    y = np.atleast_2d(y)
    flat = points.reshape(-1, points.shape[-1])
    d = np.zeros((y.shape[0], flat.shape[0]))
    for r in range(flat.shape[1]):
        diff = y[:, r, None] - flat[None, :, r]
        d += diff * diff
    return d.reshape((y.shape[0],) + points.shape[:-1])


def detect_joint_batch(y, points) -> tuple:
    """Joint ML over all (spatial, signal) candidates; returns index arrays."""
    d = squared_distances(y, points)
    n_signal = points.shape[1]
    k = d.reshape(d.shape[0], -1).argmin(axis=1)
    return k // n_signal, k % n_signal


def detect_two_step_batch(y, points) -> tuple:
    """Spatial index first, then the signal index given that spatial index.

    Stage 1 picks the spatial index whose best candidate is closest; stage 2
    reuses that index's inner minimiser, which is exactly the conditional
    ML symbol decision.
    """
    d = squared_distances(y, points)
    inner_arg = d.argmin(axis=2)
    inner_min = np.take_along_axis(d, inner_arg[:, :, None], axis=2)[:, :, 0]
    l_hat = inner_min.argmin(axis=1)
    m_hat = inner_arg[np.arange(d.shape[0]), l_hat]
    return l_hat, m_hat


def candidate_evaluations(codebook: Codebook, detector: str) -> int:
    """Distance evaluations per received vector (both detectors scan every candidate)."""
    if detector not in DETECTORS:
        raise ValueError(f"unknown detector {detector!r}")
    return codebook.size


def detect_joint(y, H, codebook: Codebook, gamma: float):
    pts = received_points(codebook, H, gamma)
    l_hat, m_hat = detect_joint_batch(y, pts)
    if np.ndim(y) == 1:
        return int(l_hat[0]), int(m_hat[0])
    return l_hat, m_hat


def detect_two_step(y, H, codebook: Codebook, gamma: float):
    pts = received_points(codebook, H, gamma)
    l_hat, m_hat = detect_two_step_batch(y, pts)
    if np.ndim(y) == 1:
        return int(l_hat[0]), int(m_hat[0])
    return l_hat, m_hat


BATCH_DETECTORS = {"joint": detect_joint_batch, "two-step": detect_two_step_batch}
