"""Line-of-sight optical MIMO channel between ceiling LEDs and desk photodiodes.

LEDs point straight down and photodiodes straight up, so both the
emission and the incidence angle follow from the vertical separation and
the LED-PD distance. Only the direct path is modelled.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

LED_NORMAL = np.array([0.0, 0.0, -1.0])
PD_NORMAL = np.array([0.0, 0.0, 1.0])


class GeometryError(ValueError):
    """Invalid or degenerate room/LED/PD layout."""


@dataclass(frozen=True)
class SystemParams:
    """Optical front-end constants.

    Defaults are the reference desk setup: 1 cm^2 detector, 15 deg field of
    view, 15 deg LED half-power semi-angle, unit filter gain, 1 A/W and 1 W.
    """

    pd_area_m2: float = 1e-4
    fov_rad: float = math.radians(15.0)
    semi_angle_rad: float = math.radians(15.0)
    refractive_index: float = 1.5
    filter_gain: float = 1.0
    conv_factor_A_per_W: float = 1.0
    p_opt_W: float = 1.0

    def __post_init__(self):
        for name in ("pd_area_m2", "fov_rad", "semi_angle_rad", "refractive_index",
                     "filter_gain", "conv_factor_A_per_W", "p_opt_W"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be finite and > 0, got {value!r}")
        if not self.fov_rad < math.pi / 2:
            raise ValueError("fov_rad must lie in (0, pi/2)")
        if not self.semi_angle_rad < math.pi / 2:
            raise ValueError("semi_angle_rad must lie in (0, pi/2)")

    @property
    def gamma(self) -> float:
        return self.conv_factor_A_per_W


@dataclass(frozen=True)
class Geometry:
    led_positions: np.ndarray
    pd_positions: np.ndarray
    room_dims: tuple = (3.0, 3.0, 3.0)

    def __post_init__(self):
        leds = np.array(self.led_positions, dtype=float)
        pds = np.array(self.pd_positions, dtype=float)
        if leds.ndim != 2 or leds.shape[1] != 3 or pds.ndim != 2 or pds.shape[1] != 3:
            raise GeometryError("positions must be lists of 3-D points")
        n_t = leds.shape[0]
        if n_t < 1 or n_t & (n_t - 1):
            raise GeometryError(f"LED count must be a power of 2, got {n_t}")
        if pds.shape[0] < 1:
            raise GeometryError("at least one photodiode is required")
        room = np.array(self.room_dims, dtype=float)
        if room.shape != (3,) or np.any(room <= 0):
            raise GeometryError("room_dims must be three positive extents")
        for label, pts in (("LED", leds), ("PD", pds)):
            if np.any(pts < 0) or np.any(pts > room):
                raise GeometryError(f"{label} position outside the room {tuple(room)}")
        if leds[:, 2].min() <= pds[:, 2].max():
            raise GeometryError("every LED must sit above every photodiode")
        leds.setflags(write=False)
        pds.setflags(write=False)
        object.__setattr__(self, "led_positions", leds)
        object.__setattr__(self, "pd_positions", pds)
        object.__setattr__(self, "room_dims", tuple(float(v) for v in room))

    @property
    def n_t(self) -> int:
        return self.led_positions.shape[0]

    @property
    def n_r(self) -> int:
        return self.pd_positions.shape[0]


REFERENCE_PD_POSITIONS = (
    (1.55, 1.55, 0.75),
    (1.45, 1.55, 0.75),
    (1.55, 1.45, 0.75),
    (1.45, 1.45, 0.75),
)


def reference_geometry(d_tx: float = 0.2, led_height: float = 2.5) -> Geometry:
    """Four ceiling LEDs on a square of side ``d_tx`` centred over the desk.

    With ``d_tx = 0.2`` this is the reference layout: LEDs at
    (1.6, 1.6), (1.4, 1.6), (1.6, 1.4), (1.4, 1.4) and 2.5 m height.
    """
    c = 1.5
    h = d_tx / 2.0
    leds = [(c + h, c + h, led_height), (c - h, c + h, led_height),
            (c + h, c - h, led_height), (c - h, c - h, led_height)]
    return Geometry(np.array(leds), np.array(REFERENCE_PD_POSITIONS))


def lambertian_order(semi_angle_rad: float) -> float:
    """Lambertian mode number of an LED with the given half-power semi-angle."""
    if not 0.0 < semi_angle_rad < math.pi / 2:
        raise ValueError(f"semi-angle must lie in (0, pi/2), got {semi_angle_rad!r}")
    return -math.log(2.0) / math.log(math.cos(semi_angle_rad))


def radiant_intensity(angle_rad: float, order: float) -> float:
    if not 0.0 <= angle_rad <= math.pi / 2:
        raise ValueError(f"emission angle must lie in [0, pi/2], got {angle_rad!r}")
    return (order + 1.0) / (2.0 * math.pi) * math.cos(angle_rad) ** order


def concentrator_gain(incidence_rad: float, params: SystemParams) -> float:
    if incidence_rad < 0:
        raise ValueError("incidence angle must be non-negative")
    if incidence_rad <= params.fov_rad:
        return params.refractive_index ** 2 / math.sin(params.fov_rad) ** 2
    return 0.0


def channel_gain(led_pos, pd_pos, params: SystemParams) -> float:
    """DC gain of the direct path from one LED to one photodiode."""
    led = np.asarray(led_pos, dtype=float)
    pd = np.asarray(pd_pos, dtype=float)
    v = pd - led
    d = float(np.sqrt(v @ v))
    if d == 0.0:
        raise GeometryError("LED and photodiode coincide")
    cos_tx = float(v @ LED_NORMAL) / d
    cos_rx = float(-v @ PD_NORMAL) / d
    if cos_tx <= 0.0 or cos_rx <= 0.0:
        return 0.0
    phi_tx = math.acos(min(cos_tx, 1.0))
    phi_rx = math.acos(min(cos_rx, 1.0))
    if phi_rx > params.fov_rad:
        return 0.0
    order = lambertian_order(params.semi_angle_rad)
    return (params.pd_area_m2 / d ** 2 * radiant_intensity(phi_tx, order)
            * params.filter_gain * concentrator_gain(phi_rx, params) * math.cos(phi_rx))


@dataclass(frozen=True)
class ChannelMatrix:
    """N_r x N_t gains; row r is photodiode r, column l is LED l."""

    gains: np.ndarray = field(repr=False)

    def __post_init__(self):
        g = np.array(self.gains, dtype=float)
        if g.ndim != 2:
            raise ValueError("channel gains must be a 2-D array")
        if np.any(g < 0) or not np.all(np.isfinite(g)):
            raise ValueError("channel gains must be finite and non-negative")
        g.setflags(write=False)
        object.__setattr__(self, "gains", g)

    @property
    def shape(self):
        return self.gains.shape

    def column_correlation(self) -> np.ndarray:
        """Normalised inner products between LED columns."""
        g = self.gains
        norms = np.linalg.norm(g, axis=0)
        with np.errstate(invalid="ignore", divide="ignore"):
            return (g.T @ g) / np.outer(norms, norms)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        n_t = self.gains.shape[1]
        writer.writerow(["pd"] + [f"led{j + 1}" for j in range(n_t)])
        for r, row in enumerate(self.gains):
            writer.writerow([f"pd{r + 1}"] + [f"{v:.16e}" for v in row])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "ChannelMatrix":
        rows = list(csv.reader(io.StringIO(text)))
        return cls(np.array([[float(v) for v in row[1:]] for row in rows[1:]]))


def build_channel_matrix(geometry: Geometry, params: SystemParams) -> ChannelMatrix:
    gains = np.empty((geometry.n_r, geometry.n_t))
    for r, pd in enumerate(geometry.pd_positions):
        for l, led in enumerate(geometry.led_positions):
            gains[r, l] = channel_gain(led, pd, params)
    return ChannelMatrix(gains)
