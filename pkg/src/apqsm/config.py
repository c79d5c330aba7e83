"""Experiment configuration: JSON file, versioned schema, unknown keys rejected."""

from __future__ import annotations

import json
import math
import re
from pathlib import Path
from typing import Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .baselines import build_ma_sm, build_sm_pam
from .channel import REFERENCE_PD_POSITIONS, Geometry, SystemParams, reference_geometry
from .modulation import ApqScheme, Codebook, PowerVector
from .optimize import ScpConfig

SCHEMA_VERSION = 1
PRESET_DIR = Path(__file__).with_name("presets")


class ConfigError(Exception):
    """Malformed or invalid experiment configuration."""


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class SystemSection(_Strict):
    pd_area_m2: float = 1e-4
    fov_deg: float = 15.0
    semi_angle_deg: float = 15.0
    refractive_index: float = 1.5
    filter_gain: float = 1.0
    conv_factor_A_per_W: float = 1.0
    p_opt_W: float = 1.0

    def build(self, semi_angle_deg: float | None = None) -> SystemParams:
        return SystemParams(
            pd_area_m2=self.pd_area_m2,
            fov_rad=math.radians(self.fov_deg),
            semi_angle_rad=math.radians(semi_angle_deg if semi_angle_deg is not None
                                        else self.semi_angle_deg),
            refractive_index=self.refractive_index,
            filter_gain=self.filter_gain,
            conv_factor_A_per_W=self.conv_factor_A_per_W,
            p_opt_W=self.p_opt_W,
        )


class GeometrySection(_Strict):
    room_dims: list[float] = [3.0, 3.0, 3.0]
    d_tx: Optional[float] = 0.2
    led_height: float = 2.5
    led_positions: Optional[list[list[float]]] = None
    pd_positions: list[list[float]] = [list(p) for p in REFERENCE_PD_POSITIONS]

    @model_validator(mode="after")
    def _one_layout(self):
        if self.led_positions is not None and self.d_tx is not None:
            raise ValueError("give either d_tx or led_positions, not both")
        if self.led_positions is None and self.d_tx is None:
            raise ValueError("one of d_tx or led_positions is required")
        return self

    def build(self, d_tx: float | None = None) -> Geometry:
        if d_tx is not None or self.led_positions is None:
            g = reference_geometry(d_tx if d_tx is not None else self.d_tx, self.led_height)
            leds = g.led_positions
        else:
            leds = np.array(self.led_positions)
        return Geometry(leds, np.array(self.pd_positions), tuple(self.room_dims))


PowerSpec = Union[Literal["optimize", "fixed", "random", "lattice"], list[float]]


class SchemeSection(_Strict):
    kind: Literal["apq-sm", "sm-pam", "ma-sm"] = "apq-sm"
    n_t: int = 4
    split: Optional[list[int]] = None
    power: PowerSpec = "fixed"
    m_pam: Optional[int] = None
    n_a: Optional[int] = None

    @model_validator(mode="after")
    def _fields_for_kind(self):
        if self.kind == "apq-sm":
            if self.split is None or len(self.split) != 3:
                raise ValueError("apq-sm needs split = [M1, M2, M3]")
        else:
            if self.m_pam is None:
                raise ValueError(f"{self.kind} needs m_pam")
            if self.kind == "ma-sm" and self.n_a is None:
                raise ValueError("ma-sm needs n_a")
        if isinstance(self.power, list) and len(self.power) != 3:
            raise ValueError("explicit power must be [p1, p2, p3]")
        return self

    def spectral_efficiency(self) -> int:
        return int(round(math.log2(self.base_codebook(1.0).size)))

    def apq(self, power: PowerVector) -> ApqScheme:
        return ApqScheme(self.n_t, self.split, power)

    def base_codebook(self, p_opt: float) -> Codebook:
        """Codebook for power modes that do not depend on SNR."""
        if self.kind == "sm-pam":
            return build_sm_pam(self.n_t, self.m_pam, p_opt)
        if self.kind == "ma-sm":
            return build_ma_sm(self.n_t, self.n_a, self.m_pam, p_opt)
        return self.apq(PowerVector.lattice(self.split, p_opt)).codebook()


class SweepSection(_Strict):
    snr_db: list[float] = Field(default_factory=list)
    min_errors: int = 200
    max_trials: int = 10_000_000
    batch_size: int = 20_000

    @field_validator("min_errors", "max_trials", "batch_size")
    @classmethod
    def _positive(cls, v):
        if v < 1:
            raise ValueError("must be positive")
        return v


class ScpSection(_Strict):
    alpha0: float = 0.1
    alpha1: float = 0.9
    alpha2: float = 1.0
    alpha: float = 1.5
    beta: float = 2.0
    delta0: float = 4.0
    epsilon: float = 1e-3
    n_max: int = 100
    p0: Union[Literal["lattice", "fixed"], list[float]] = "lattice"
    snr_db: Optional[list[float]] = None
    freeze_snr_db: Optional[float] = None
    baselines: list[Literal["fixed", "random", "lattice"]] = Field(default_factory=list)

    def build(self) -> ScpConfig:
        return ScpConfig(self.alpha0, self.alpha1, self.alpha2, self.alpha, self.beta,
                         self.delta0, self.epsilon, self.n_max)


class Variant(_Strict):
    label: str
    scheme: Optional[SchemeSection] = None
    d_tx: Optional[float] = None
    semi_angle_deg: Optional[float] = None
    snr_db: Optional[list[float]] = None

    @field_validator("label")
    @classmethod
    def _label_chars(cls, v):
        if not re.fullmatch(r"[A-Za-z0-9_.+-]+", v):
            raise ValueError("label may only contain letters, digits and _ . + -")
        return v


class OutputSection(_Strict):
    dir: str = "out"


class ExperimentConfig(_Strict):
    schema_version: Literal[1] = 1
    name: str = "experiment"
    seed: int = 0
    system: SystemSection = Field(default_factory=SystemSection)
    geometry: GeometrySection = Field(default_factory=GeometrySection)
    scheme: SchemeSection = Field(default_factory=lambda: SchemeSection(split=[2, 4, 2]))
    detectors: list[Literal["joint", "two-step"]] = Field(default_factory=lambda: ["joint"])
    sweep: SweepSection = Field(default_factory=SweepSection)
    scp: ScpSection = Field(default_factory=ScpSection)
    variants: list[Variant] = Field(default_factory=list)
    plot_x: Literal["snr_db", "semi_angle_deg", "d_tx"] = "snr_db"
    output: OutputSection = Field(default_factory=OutputSection)

    @model_validator(mode="after")
    def _unique_labels(self):
        labels = [v.label for v in self.variants]
        if len(set(labels)) != len(labels):
            raise ValueError("variant labels must be unique")
        return self

    def resolved_variants(self) -> list:
        """Variants with every field filled from the top-level sections."""
        if not self.variants:
            return [ResolvedVariant(self, Variant(label=self.scheme.kind))]
        return [ResolvedVariant(self, v) for v in self.variants]


class ResolvedVariant:
    def __init__(self, cfg: ExperimentConfig, v: Variant):
        self.label = v.label
        self.scheme = v.scheme or cfg.scheme
        self.d_tx = v.d_tx if v.d_tx is not None else (
            cfg.geometry.d_tx if cfg.geometry.led_positions is None else None)
        self.semi_angle_deg = (v.semi_angle_deg if v.semi_angle_deg is not None
                               else cfg.system.semi_angle_deg)
        self.snr_db = list(v.snr_db if v.snr_db is not None else cfg.sweep.snr_db)
        self.params = cfg.system.build(self.semi_angle_deg)
        self.geometry = cfg.geometry.build(v.d_tx)
        if self.geometry.n_t != self.scheme.n_t:
            raise ConfigError(f"variant {self.label!r}: scheme has n_t={self.scheme.n_t} "
                              f"but geometry has {self.geometry.n_t} LEDs")

    @property
    def eta(self) -> int:
        return self.scheme.spectral_efficiency()


def _line_of(text: str, loc) -> int | None:
    """Best-effort line number for a pydantic error location."""
    keys = [k for k in loc if isinstance(k, str)]
    if not keys:
        return None
    pattern = re.compile(r'"%s"\s*:' % re.escape(keys[-1]))
    for i, line in enumerate(text.splitlines(), 1):
        if pattern.search(line):
            return i
    return None


def parse_config(text: str, source: str = "<config>") -> ExperimentConfig:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{source}:1: top level must be a JSON object")
    try:
        return ExperimentConfig.model_validate(raw)
    except ValidationError as exc:
        msgs = []
        for err in exc.errors():
            path = ".".join(str(k) for k in err["loc"]) or "<root>"
            line = _line_of(text, err["loc"])
            where = f"{source}:{line}" if line else source
            msgs.append(f"{where}: {path}: {err['msg']}")
        raise ConfigError("\n".join(msgs)) from None


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.exists() and preset_path(path.name).exists():
        path = preset_path(path.name)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc.strerror}") from exc
    return parse_config(text, str(path))


def preset_path(name: str) -> Path:
    return PRESET_DIR / (name if name.endswith(".json") else name + ".json")
