"""Command-line entry point: ``apqsm channel|sweep|optimize|compare --config PATH``.

Exit status: 0 when every output was written and no simulated point is
flagged unreliable, 1 when some point is unreliable (unless
``--allow-unreliable``), 2 on configuration or usage errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path

from . import __version__
from .config import ConfigError, ExperimentConfig, load_config
from .experiments import (ALLOCATION_COLUMNS, Experiment, allocation_row, compare_csv,
                          powers_csv)
from .plotting import (allocation_plot_from_csv, compare_plot_from_csv, ser_plot_from_csv,
                       trace_plot_from_csv)

EXIT_OK, EXIT_UNRELIABLE, EXIT_CONFIG = 0, 1, 2


def _write(path: Path, text: str) -> Path:
    path.write_text(text, encoding="utf-8", newline="\n")
    return path


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _snr_tag(snr: float) -> str:
    return f"{snr:g}".replace("-", "m").replace(".", "p")


class Runner:
    def __init__(self, cfg: ExperimentConfig, seed: int, workers: int, out: Path,
                 log=print):
        self.cfg = cfg
        self.exp = Experiment(cfg, seed)
        self.workers = workers
        self.out = out
        self.unreliable: list = []
        self.log = log
        out.mkdir(parents=True, exist_ok=True)

    def metadata(self, command: str):
        meta = {
            "command": command,
            "config": self.cfg.name,
            "seed": self.exp.seed,
            "workers": self.workers,
            "version": __version__,
            "trust_region_norm": "inf",
            "scp_start": self.cfg.scp.p0,
        }
        _write(self.out / "metadata.json", json.dumps(meta, indent=2, sort_keys=True) + "\n")

    # subcommands ---------------------------------------------------------
    def channel(self):
        for v in self.exp.variants:
            name = "channel.csv" if len(self.exp.variants) == 1 else f"channel_{v.label}.csv"
            _write(self.out / name, self.exp.channel(v).to_csv())
        self.metadata("channel")

    def sweep(self):
        plotted = []
        for v in self.exp.variants:
            for det in self.cfg.detectors:
                run = self.exp.run(v, det, self.workers)
                self._note_unreliable(v.label, det, run.curve)
                path = _write(self.out / f"ser_{v.label}_{det}.csv", run.curve.to_csv(with_bound=True))
                plotted.append((f"{v.label} {det}", path))
            _write(self.out / f"bounds_{v.label}.csv", run.bounds.to_csv())
            if run.powers:
                _write(self.out / f"power_{v.label}.csv", powers_csv(run.powers))
        ser_plot_from_csv(plotted, self.out / "sweep.svg", self.cfg.name)
        self.metadata("sweep")

    def compare(self):
        variants = self.exp.variants
        if len(variants) == 1:
            return self.sweep()
        etas = {v.label: v.eta for v in variants}
        if len(set(etas.values())) > 1:
            raise ConfigError("compare needs equal spectral efficiency across variants, got "
                              + ", ".join(f"{k}={e}" for k, e in etas.items()))
        det = self.cfg.detectors[0]
        runs = []
        for v in variants:
            run = self.exp.run(v, det, self.workers)
            self._note_unreliable(v.label, det, run.curve)
            if run.powers:
                _write(self.out / f"power_{v.label}.csv", powers_csv(run.powers))
            runs.append(run)
        path = _write(self.out / "compare.csv", compare_csv(runs))
        compare_plot_from_csv(path, self.out / "compare.svg", self.cfg.plot_x, self.cfg.name)
        self.metadata("compare")

    def optimize(self):
        scp = self.cfg.scp
        updated = json.loads(self.cfg.model_dump_json())
        traces = []
        for idx, v in enumerate(self.exp.variants):
            if v.scheme.kind != "apq-sm":
                self.log(f"warning: variant {v.label!r} is {v.scheme.kind}; nothing to optimise",
                         file=sys.stderr)
                continue
            snrs = sorted(scp.snr_db if scp.snr_db is not None else v.snr_db)
            if not snrs:
                raise ConfigError(f"variant {v.label!r}: SNR list is empty")
            modes = [v.scheme.power] + [m for m in scp.baselines if m != v.scheme.power]
            rows, final = [], None
            for s in snrs:
                for mode in modes:
                    choice = self.exp.power(v, s, mode)
                    bound = self.exp.objective(v, s, choice.power)
                    rows.append(allocation_row(choice, bound))
                    if choice.trace is not None:
                        path = _write(self.out / f"trace_{v.label}_{_snr_tag(s)}dB.csv",
                                      choice.trace.to_csv())
                        traces.append((f"{v.label} {s:g} dB", path))
                    if mode == v.scheme.power:
                        final = choice  # highest SNR wins
            alloc = _write(self.out / f"allocation_{v.label}.csv",
                           _csv_text(ALLOCATION_COLUMNS, rows))
            if len(modes) > 1:
                allocation_plot_from_csv(alloc, self.out / f"allocation_{v.label}.svg", self.cfg.name)
            p_star = [float(x) for x in final.power.p]
            if self.cfg.variants and self.cfg.variants[idx].scheme is not None:
                updated["variants"][idx]["scheme"]["power"] = p_star
            else:
                updated["scheme"]["power"] = p_star
        if traces:
            trace_plot_from_csv(traces, self.out / "trace.svg", self.cfg.name)
        _write(self.out / "optimized_config.json", json.dumps(updated, indent=2) + "\n")
        self.metadata("optimize")

    def _note_unreliable(self, label, det, curve):
        for snr in curve.unreliable:
            self.unreliable.append((label, det, snr))


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="apqsm", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"apqsm {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, help_ in [("channel", "write the channel matrix"),
                        ("sweep", "Monte Carlo SER sweep with bounds"),
                        ("optimize", "SCP power allocation"),
                        ("compare", "SER of several schemes or setups side by side")]:
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", required=True, help="experiment JSON (or a preset name)")
        p.add_argument("--seed", type=int, help="master seed (overrides APQSM_SEED and the config)")
        p.add_argument("--workers", type=int, default=1, help="parallel processes over SNR points")
        p.add_argument("--allow-unreliable", action="store_true",
                       help="warn instead of failing when a point misses min_errors")
        p.add_argument("--out", help="output directory (default: config output.dir)")
    return ap


def resolve_seed(cli_seed, cfg: ExperimentConfig, environ=os.environ) -> int:
    if cli_seed is not None:
        return cli_seed
    env = environ.get("APQSM_SEED")
    if env not in (None, ""):
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"APQSM_SEED must be an integer, got {env!r}") from None
    return cfg.seed


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.workers < 1:
            raise ConfigError("--workers must be at least 1")
        cfg = load_config(args.config)
        seed = resolve_seed(args.seed, cfg)
        out = Path(args.out or cfg.output.dir)
        runner = Runner(cfg, seed, args.workers, out)
        getattr(runner, args.command)()
    except ConfigError as exc:
        print(f"apqsm: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"apqsm: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for label, det, snr in runner.unreliable:
        print(f"apqsm: {'warning' if args.allow_unreliable else 'error'}: {label} {det} "
              f"at {snr:g} dB did not reach min_errors", file=sys.stderr)
    if runner.unreliable and not args.allow_unreliable:
        return EXIT_UNRELIABLE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
