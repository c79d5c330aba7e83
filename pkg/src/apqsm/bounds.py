"""Union-bound SER evaluators for joint and two-step ML detection."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

from .detection import _gains
from .modulation import Codebook

Q_CLAMP = 38.0


def q_function(x):
    """Gaussian tail probability Q(x) = erfc(x/sqrt 2)/2.

    Arguments beyond +-38 return exactly 0 or 1.
    """
    x = np.asarray(x, dtype=float)
    out = 0.5 * erfc(x / np.sqrt(2.0))
    out = np.where(x > Q_CLAMP, 0.0, out)
    out = np.where(x < -Q_CLAMP, 1.0, out)
    return out if out.ndim else float(out)


def _q_of_distance(dist, gamma: float, sigma: float):
    """Q(gamma*dist / (2*sigma)); sigma = 0 gives 0 for dist > 0 and 1/2 at dist = 0."""
    dist = np.asarray(dist, dtype=float)
    if sigma == 0:
        return np.where(dist > 0, 0.0, 0.5)
    return q_function(gamma * dist / (2.0 * sigma))


def pep(x_a, x_b, H, gamma: float, sigma: float) -> float:
    """Probability that ML prefers ``x_b`` when ``x_a`` was sent (two-candidate case)."""
    diff = np.asarray(x_a, dtype=float) - np.asarray(x_b, dtype=float)
    return float(_q_of_distance(np.linalg.norm(_gains(H) @ diff), gamma, sigma))


def pairwise_distances(codebook: Codebook, H) -> np.ndarray:
    """``||H(x_i - x_j)||`` over flat codeword indices, shape (K, K)."""
    pts = codebook.flat @ _gains(H).T
    diff = pts[:, None, :] - pts[None, :, :]
    return np.sqrt(np.einsum("ijr,ijr->ij", diff, diff))


def joint_aser_bound(codebook: Codebook, H, gamma: float, sigma: float) -> float:
    """Union bound on the joint-ML SER with equiprobable codewords."""
    q = _q_of_distance(pairwise_distances(codebook, H), gamma, sigma)
    np.fill_diagonal(q, 0.0)
    return float(q.sum() / codebook.size)


def min_distances(codebook: Codebook, H, gamma: float) -> np.ndarray:
    """For every (l, m), the distance to the closest codeword with another spatial index.

    Returned array has shape (n_spatial, n_signal) and includes the factor gamma.
    """
    if codebook.n_spatial < 2:
        raise ValueError("minimum distance needs at least two spatial indices")
    S, M = codebook.n_spatial, codebook.n_signal
    d = gamma * pairwise_distances(codebook, H).reshape(S, M, S, M)
    same = np.eye(S, dtype=bool)[:, None, :, None]
    d = np.where(same, np.inf, d)
    return d.min(axis=(2, 3))


def min_distance(codebook: Codebook, H, gamma: float, l: int, m: int) -> float:
    return float(min_distances(codebook, H, gamma)[l, m])


def index_error_bounds(codebook: Codebook, H, gamma: float, sigma: float) -> np.ndarray:
    """Per spatial index: mean over symbols of Q(D / 2 sigma)."""
    D = min_distances(codebook, H, gamma)
    return _q_of_distance(D, 1.0, sigma).mean(axis=1)


def index_error_bound(codebook: Codebook, H, gamma: float, sigma: float, l: int) -> float:
    return float(index_error_bounds(codebook, H, gamma, sigma)[l])


def symbol_error_bounds(codebook: Codebook, H, gamma: float, sigma: float) -> np.ndarray:
    """Per spatial index: union bound on symbol error given the index is right."""
    S, M = codebook.n_spatial, codebook.n_signal
    d = pairwise_distances(codebook, H).reshape(S, M, S, M)
    within = d[np.arange(S), :, np.arange(S), :]          # (S, M, M)
    q = _q_of_distance(within, gamma, sigma)
    q[:, np.arange(M), np.arange(M)] = 0.0
    return q.sum(axis=(1, 2)) / M


def symbol_error_bound(codebook: Codebook, H, gamma: float, sigma: float, l: int) -> float:
    return float(symbol_error_bounds(codebook, H, gamma, sigma)[l])


def two_step_aser_bound(codebook: Codebook, H, gamma: float, sigma: float) -> float:
    p_idx = index_error_bounds(codebook, H, gamma, sigma)
    p_sym = symbol_error_bounds(codebook, H, gamma, sigma)
    return float(np.mean(p_idx + p_sym - p_idx * p_sym))


@dataclass
class BoundReport:
    snr_db: np.ndarray
    joint_bound: np.ndarray
    index_bound: np.ndarray
    cond_symbol_bound: np.ndarray
    two_step_bound: np.ndarray

    COLUMNS = ("snr_db", "joint_bound", "index_bound", "cond_symbol_bound", "two_step_bound")

    def rows(self):
        return zip(*(getattr(self, c) for c in self.COLUMNS))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.COLUMNS)
        for row in self.rows():
            w.writerow([f"{v:.10g}" for v in row])
        return buf.getvalue()


def bound_report(codebook: Codebook, H, gamma: float, sigmas, snr_db) -> BoundReport:
    """Evaluate every bound at each (snr_db, sigma) pair; values are raw, not clipped."""
    cols = {c: [] for c in BoundReport.COLUMNS[1:]}
    two_step_capable = codebook.n_spatial >= 2
    for sigma in sigmas:
        cols["joint_bound"].append(joint_aser_bound(codebook, H, gamma, sigma))
        if two_step_capable:
            p_idx = index_error_bounds(codebook, H, gamma, sigma)
            p_sym = symbol_error_bounds(codebook, H, gamma, sigma)
            cols["index_bound"].append(p_idx.mean())
            cols["cond_symbol_bound"].append(p_sym.mean())
            cols["two_step_bound"].append(np.mean(p_idx + p_sym - p_idx * p_sym))
        else:
            for c in ("index_bound", "cond_symbol_bound", "two_step_bound"):
                cols[c].append(np.nan)
    return BoundReport(np.asarray(snr_db, dtype=float),
                       **{k: np.asarray(v, dtype=float) for k, v in cols.items()})
