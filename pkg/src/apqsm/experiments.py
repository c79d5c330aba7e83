"""Glue between an :class:`ExperimentConfig` and the simulation/optimisation modules."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .bounds import bound_report
from .channel import build_channel_matrix
from .config import ConfigError, ExperimentConfig, ResolvedVariant
from .modulation import Codebook, PowerVector
from .optimize import DeltaTensor, ScpTrace, objective_B, scp_optimize
from .simulate import SerCurve, SweepSpec, run_sweep, sigma_from_snr_db

# spawn_key prefix keeping power draws apart from the per-SNR noise streams
_RANDOM_POWER_STREAM = 7


def _snr_key(snr_db: float) -> int:
    return int(np.float64(snr_db).view(np.uint64))


@dataclass
class PowerChoice:
    snr_db: float
    mode: str
    power: PowerVector
    trace: ScpTrace | None = None


@dataclass
class VariantRun:
    variant: ResolvedVariant
    detector: str
    curve: SerCurve
    bounds: object
    powers: list = field(default_factory=list)


class Experiment:
    """Resolved view of a config for a given seed."""

    def __init__(self, cfg: ExperimentConfig, seed: int | None = None):
        self.cfg = cfg
        self.seed = cfg.seed if seed is None else seed
        self.variants = cfg.resolved_variants()

    # channel ------------------------------------------------------------
    def channel(self, variant: ResolvedVariant):
        return build_channel_matrix(variant.geometry, variant.params)

    def sigma(self, variant: ResolvedVariant, snr_db: float) -> float:
        p = variant.params
        return sigma_from_snr_db(snr_db, p.gamma, p.p_opt_W)

    # power allocation ---------------------------------------------------
    def power(self, variant: ResolvedVariant, snr_db: float, mode=None) -> PowerChoice:
        mode = variant.scheme.power if mode is None else mode
        p_opt = variant.params.p_opt_W
        split = variant.scheme.split
        if isinstance(mode, list):
            return PowerChoice(snr_db, "explicit", PowerVector(tuple(mode), p_opt))
        if mode == "fixed":
            return PowerChoice(snr_db, mode, PowerVector.fixed(p_opt))
        if mode == "lattice":
            return PowerChoice(snr_db, mode, PowerVector.lattice(split, p_opt))
        if mode == "random":
            ss = np.random.SeedSequence(self.seed, spawn_key=(_RANDOM_POWER_STREAM, _snr_key(snr_db)))
            return PowerChoice(snr_db, mode, PowerVector.random(np.random.default_rng(ss), p_opt))
        if mode == "optimize":
            scp = self.cfg.scp
            at = snr_db if scp.freeze_snr_db is None else scp.freeze_snr_db
            sigma = self.sigma(variant, at)
            if sigma == 0:
                raise ConfigError("cannot optimise power at infinite SNR")
            H = self.channel(variant)
            delta = DeltaTensor.from_scheme(variant.scheme.apq(PowerVector.lattice(split, p_opt)), H)
            p0 = scp.p0
            if p0 == "lattice":
                p0 = PowerVector.lattice(split, p_opt)
            elif p0 == "fixed":
                p0 = PowerVector.fixed(p_opt)
            else:
                p0 = PowerVector(tuple(p0), p_opt)
            p_star, trace = scp_optimize(delta, variant.params.gamma, sigma, scp.build(), p0)
            return PowerChoice(snr_db, mode, p_star, trace)
        raise ConfigError(f"unknown power mode {mode!r}")

    def codebook(self, variant: ResolvedVariant, snr_db: float, choice=None) -> Codebook:
        if variant.scheme.kind != "apq-sm":
            return variant.scheme.base_codebook(variant.params.p_opt_W)
        choice = choice or self.power(variant, snr_db)
        return variant.scheme.apq(choice.power).codebook()

    def objective(self, variant: ResolvedVariant, snr_db: float, power: PowerVector) -> float:
        H = self.channel(variant)
        delta = DeltaTensor.from_scheme(variant.scheme.apq(power), H)
        return objective_B(power.as_array(), delta, variant.params.gamma, self.sigma(variant, snr_db))

    # Monte Carlo --------------------------------------------------------
    def run(self, variant: ResolvedVariant, detector: str, workers: int = 1,
            snr_db=None) -> VariantRun:
        snrs = sorted(float(s) for s in (variant.snr_db if snr_db is None else snr_db))
        if not snrs:
            raise ConfigError(f"variant {variant.label!r}: SNR list is empty")
        H = self.channel(variant)
        gamma = variant.params.gamma
        powers, books = [], {}
        for s in snrs:
            if variant.scheme.kind == "apq-sm":
                choice = self.power(variant, s)
                powers.append(choice)
                books[s] = variant.scheme.apq(choice.power).codebook()
            else:
                books[s] = variant.scheme.base_codebook(variant.params.p_opt_W)
        sw = self.cfg.sweep
        spec = SweepSpec(books[snrs[0]], H.gains, snrs, detector, gamma, variant.params.p_opt_W,
                         sw.min_errors, sw.max_trials, self.seed, sw.batch_size,
                         variant.label, books)
        curve = run_sweep(spec, workers)
        reports = [bound_report(books[s], H.gains, gamma, [self.sigma(variant, s)], [s]) for s in snrs]
        bounds = _concat_reports(reports)
        column = bounds.two_step_bound if detector == "two-step" else bounds.joint_bound
        for pt, b in zip(curve, column):
            pt.bound = float(b)
        return VariantRun(variant, detector, curve, bounds, powers)


def _concat_reports(reports):
    first = reports[0]
    return type(first)(**{c: np.concatenate([getattr(r, c) for r in reports])
                          for c in first.COLUMNS})


def powers_csv(choices) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("snr_db", "mode", "p1", "p2", "p3"))
    for c in choices:
        w.writerow([f"{c.snr_db:g}", c.mode, *(f"{v:.17g}" for v in c.power.p)])
    return buf.getvalue()


COMPARE_COLUMNS = ("label", "scheme", "eta", "d_tx", "semi_angle_deg", "detector",
                   "snr_db", "trials", "errors", "ser", "ci_lo", "ci_hi", "bound")


def compare_csv(runs) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COMPARE_COLUMNS)
    for run in runs:
        v = run.variant
        d_tx = "" if v.d_tx is None else f"{v.d_tx:g}"
        for pt in run.curve:
            w.writerow([v.label, v.scheme.kind, v.eta, d_tx, f"{v.semi_angle_deg:g}",
                        run.detector, f"{pt.snr_db:g}", pt.trials, pt.errors,
                        f"{pt.ser:.10g}", f"{pt.ci_lo:.10g}", f"{pt.ci_hi:.10g}",
                        f"{pt.bound:.10g}"])
    return buf.getvalue()


def allocation_row(choice: PowerChoice, bound: float) -> list:
    it = choice.trace.iterations if choice.trace else 0
    conv = int(choice.trace.converged) if choice.trace else ""
    return [f"{choice.snr_db:g}", choice.mode, *(f"{v:.17g}" for v in choice.power.p),
            f"{bound:.17g}", it, conv]


ALLOCATION_COLUMNS = ("snr_db", "mode", "p1", "p2", "p3", "joint_bound", "iterations", "converged")

