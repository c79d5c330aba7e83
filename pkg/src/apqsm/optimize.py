"""Power allocation for APQ-SM by successive linear programming with a trust region.

The joint-detection union bound is written as a function of the power
vector p through the pair differences

    delta[pair, r, i] = x_i(m_hat) h[r, l_hat] - x_i(m) h[r, l]

so that each pairwise distance is ``sqrt(sum_r (p . delta[pair, r])^2)``.
Each iteration linearises the bound at the incumbent and minimises the
linear model over the ordered simplex intersected with an infinity-norm
box of radius ``delta`` around the incumbent.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .bounds import q_function
from .detection import _gains
from .modulation import ApqScheme, PowerVector

SQRT_8PI = math.sqrt(8.0 * math.pi)


@dataclass(frozen=True)
class DeltaTensor:
    """Pair differences for all ordered codeword pairs (a, b), a != b.

    ``pairs`` has shape (K*(K-1), N_r, 3); ``index`` holds the flat
    codeword indices (a, b) of each row, a = l*M + m.
    """

    pairs: np.ndarray = field(repr=False)
    index: np.ndarray = field(repr=False)
    n_codewords: int
    split: tuple = (1, 1, 1)

    @classmethod
    def from_scheme(cls, scheme: ApqScheme, H) -> "DeltaTensor":
        H = _gains(H)
        # per-codeword contribution x_i(m) * h[r, l], shape (K, N_r, 3)
        contrib = np.einsum("rl,mi->lmri", H, scheme.part_values)
        contrib = contrib.reshape(-1, H.shape[0], 3)
        K = contrib.shape[0]
        a, b = np.nonzero(~np.eye(K, dtype=bool))
        return cls(contrib[b] - contrib[a], np.stack([a, b], axis=1), K, scheme.split)

    def distances(self, p) -> np.ndarray:
        proj = self.pairs @ np.asarray(p, dtype=float)
        return np.sqrt(np.einsum("kr,kr->k", proj, proj))


def objective_B(p, delta: DeltaTensor, gamma: float, sigma: float) -> float:
    """Joint union bound as a function of the power vector."""
    s = delta.distances(p)
    return float(np.sum(q_function(gamma * s / (2.0 * sigma))) / delta.n_codewords)


def gradient_A(p, delta: DeltaTensor, gamma: float, sigma: float) -> np.ndarray:
    """Gradient of :func:`objective_B` with respect to p.

    Pairs whose distance is exactly zero contribute nothing (the norm is
    not differentiable there).
    """
    p = np.asarray(p, dtype=float)
    proj = delta.pairs @ p
    s2 = np.einsum("kr,kr->k", proj, proj)
    s = np.sqrt(s2)
    nz = s > 0
    w = np.zeros_like(s)
    w[nz] = np.exp(-gamma ** 2 * s2[nz] / (8.0 * sigma ** 2)) / s[nz]
    g = np.einsum("k,kr,kri->i", w, proj, delta.pairs)
    return -gamma / (sigma * delta.n_codewords * SQRT_8PI) * g


def _feasible_lines(p_l, radius: float, p_opt: float):
    """Half-planes a . (p1, p2) <= b for the ordered simplex and the box."""
    a1, a2, a3 = p_l
    return [
        ((1.0, 1.0), p_opt),            # p3 >= 0
        ((-1.0, -2.0), -p_opt),         # p3 <= p2
        ((-1.0, 1.0), 0.0),             # p2 <= p1
        ((0.0, -1.0), 0.0),             # p2 >= 0
        ((1.0, 0.0), a1 + radius),
        ((-1.0, 0.0), -(a1 - radius)),
        ((0.0, 1.0), a2 + radius),
        ((0.0, -1.0), -(a2 - radius)),
        ((1.0, 1.0), p_opt - a3 + radius),       # p3 >= a3 - radius
        ((-1.0, -1.0), -(p_opt - a3 - radius)),  # p3 <= a3 + radius
    ]


def polytope_vertices(p_l, radius: float, p_opt: float) -> np.ndarray:
    """Vertices (p1, p2) of the trust-region polytope, by pairwise line intersection."""
    lines = _feasible_lines(p_l, radius, p_opt)
    G = np.array([ln[0] for ln in lines])
    h = np.array([ln[1] for ln in lines])
    tol = 1e-12 * max(p_opt, 1.0)
    verts = []
    for i, j in itertools.combinations(range(len(lines)), 2):
        M = G[[i, j]]
        det = M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
        if abs(det) < 1e-14:
            continue
        v = np.linalg.solve(M, h[[i, j]])
        if np.all(G @ v <= h + tol):
            verts.append(v)
    return np.array(verts).reshape(-1, 2)


def solve_subproblem(p_l, A_l, radius: float, p_opt: float) -> np.ndarray:
    """Minimise ``A_l . (p - p_l)`` over the ordered simplex within the inf-norm box.

    The problem is a 2-D linear program once p3 = P_opt - p1 - p2 is
    eliminated, so an optimal vertex is found by enumeration. If no vertex
    improves on the incumbent beyond rounding, ``p_l`` itself is returned.
    """
    p_l = np.asarray(p_l, dtype=float)
    A_l = np.asarray(A_l, dtype=float)
    c = np.array([A_l[0] - A_l[2], A_l[1] - A_l[2]])
    verts = polytope_vertices(p_l, radius, p_opt)
    if verts.size == 0 or not np.any(c):
        return p_l.copy()
    obj = verts @ c
    base = float(c @ p_l[:2])
    best = obj.min()
    if best >= base - 1e-14 * np.abs(c).sum() * p_opt:
        return p_l.copy()
    ties = np.flatnonzero(obj <= best + 1e-15 * np.abs(c).sum() * p_opt)
    if len(ties) > 1:
        dist = np.abs(verts[ties] - p_l[:2]).max(axis=1)
        ties = ties[np.argsort(dist, kind="stable")]
    v = verts[ties[0]]
    return np.array([v[0], v[1], p_opt - v[0] - v[1]])


@dataclass(frozen=True)
class ScpConfig:
    alpha0: float = 0.1
    alpha1: float = 0.9
    alpha2: float = 1.0
    alpha: float = 1.5
    beta: float = 2.0
    delta0: float = 4.0
    epsilon: float = 1e-3
    n_max: int = 100

    def __post_init__(self):
        if not 0 < self.alpha0 < self.alpha1 < self.alpha2 <= 1:
            raise ValueError("need 0 < alpha0 < alpha1 < alpha2 <= 1")
        if self.alpha <= 0 or self.beta <= 0 or self.delta0 <= 0 or self.epsilon <= 0:
            raise ValueError("alpha, beta, delta0 and epsilon must be positive")
        if self.n_max < 1:
            raise ValueError("n_max must be at least 1")


FLAT_TOL = 1e-15


def trust_region_ratio(f_a_old: float, f_a_new: float, f_p_old: float, f_p_new: float) -> float:
    """Actual over predicted decrease.

    A zero predicted decrease yields 1 when the actual change is also
    negligible and -inf (reject) otherwise.
    """
    actual = f_a_old - f_a_new
    predicted = f_p_old - f_p_new
    if predicted == 0:
        return 1.0 if abs(actual) <= FLAT_TOL else -math.inf
    return actual / predicted


def update_radius(r: float, radius: float, config: ScpConfig) -> tuple:
    """Next trust-region radius and whether the candidate is accepted."""
    if r >= config.alpha2:
        return radius * config.beta, True
    if r >= config.alpha1:
        return radius, True
    if r >= config.alpha0:
        return radius / config.alpha, True
    return radius / config.alpha, False


@dataclass
class ScpStep:
    l: int
    p: tuple
    delta: float
    f_a: float
    r: float
    accepted: bool


@dataclass
class ScpTrace:
    steps: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = False

    COLUMNS = ("l", "p1", "p2", "p3", "delta", "f_a", "r", "accepted")

    def accepted_objectives(self) -> list:
        return [s.f_a for s in self.steps if s.accepted]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.COLUMNS)
        for s in self.steps:
            w.writerow([s.l, *(f"{v:.17g}" for v in s.p), f"{s.delta:.17g}",
                        f"{s.f_a:.17g}", f"{s.r:.17g}", int(s.accepted)])
        return buf.getvalue()


def scp_minimize(objective, gradient, p0: PowerVector, config: ScpConfig | None = None):
    """Trust-region SCP on the ordered simplex for any differentiable ``objective``.

    Trace row 0 is the starting point. Each later row is a candidate step
    with the radius it was computed under, its true objective, the ratio
    and whether it was accepted. ``trace.iterations`` counts the steps
    evaluated before the loop stopped. Returns ``(best PowerVector, ScpTrace)``.
    """
    config = config or ScpConfig()
    p_opt = p0.p_opt
    p = p0.as_array()
    radius = config.delta0
    f = objective(p)
    trace = ScpTrace([ScpStep(0, tuple(p), radius, f, math.nan, True)])
    best_p, best_f = p.copy(), f

    for l in range(1, config.n_max + 1):
        A = np.asarray(gradient(p), dtype=float)
        cand = solve_subproblem(p, A, radius, p_opt)
        if np.abs(cand - p).max() <= config.epsilon:
            trace.converged = True
            break
        f_new = objective(cand)
        f_p_new = f + float(A @ (cand - p))
        r = trust_region_ratio(f, f_new, f, f_p_new)
        used = radius
        radius, accept = update_radius(r, radius, config)
        trace.steps.append(ScpStep(l, tuple(cand), used, f_new, r, accept))
        trace.iterations = l
        if accept:
            p, f = cand, f_new
            if f <= best_f:
                best_p, best_f = p.copy(), f
    return PowerVector.from_array(best_p, p_opt), trace


def scp_optimize(delta: DeltaTensor, gamma: float, sigma: float,
                 config: ScpConfig | None = None, p0: PowerVector | None = None):
    """Minimise the joint union bound over p; see :func:`scp_minimize`.

    The default start is the lattice allocation of the split, which keeps
    all superimposed amplitudes distinct (4:2:1 does not for e.g. (4, 4, 4)).
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    p0 = p0 or PowerVector.lattice(delta.split)
    return scp_minimize(lambda p: objective_B(p, delta, gamma, sigma),
                        lambda p: gradient_A(p, delta, gamma, sigma), p0, config)
