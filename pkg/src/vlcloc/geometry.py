"""
Scene geometry: vectors, LED/receiver poses and the corner-VAP room builder.

Positions and directions are plain ``numpy`` arrays of shape ``(3,)``. The
frame has its origin at a floor corner, ``z`` pointing up and the ceiling at
``z = height``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Tuple

import numpy as np

from .exceptions import ConfigError, DomainError

UNIT_TOL = 1e-9


def as_vec3(v, name: str = "vector") -> np.ndarray:
    """Validate and return ``v`` as a finite float array of shape (3,)."""
    arr = np.asarray(v, dtype=float)
    if arr.shape != (3,):
        raise DomainError(f"{name} must have shape (3,), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} must be finite, got {arr}")
    return arr


def as_unit(v, name: str = "direction") -> np.ndarray:
    """Return ``v`` scaled to unit 2-norm; zero vectors are rejected."""
    arr = as_vec3(v, name)
    norm = np.linalg.norm(arr)
    if norm == 0.0:
        raise DomainError(f"{name} must be non-zero")
    return arr / norm


def incidence(r_receiver, r_led) -> np.ndarray:
    """Incidence vector from an LED to the receiver, ``r_receiver - r_led``."""
    return as_vec3(r_receiver, "r_receiver") - as_vec3(r_led, "r_led")


def _checked_norm(v: np.ndarray) -> float:
    norm = float(np.linalg.norm(v))
    if norm == 0.0:
        raise DomainError("zero-length incidence vector: receiver coincides with LED")
    return norm


def emission_cosine(v, led_direction) -> float:
    """Cosine of the angle between the LED axis and the incidence vector."""
    v = as_vec3(v, "v")
    return float(v @ as_vec3(led_direction, "led_direction")) / _checked_norm(v)


def incidence_cosine(v, rx_direction) -> float:
    """Cosine of the angle between the receiver normal and the reversed incidence vector."""
    v = as_vec3(v, "v")
    return -float(v @ as_vec3(rx_direction, "rx_direction")) / _checked_norm(v)


@dataclass(frozen=True)
class LedTransmitter:
    """One Lambertian source. ``orientation`` is normalised on construction."""

    vap_index: int
    led_index: int
    location: np.ndarray
    orientation: np.ndarray
    mode: float = 1.0
    tx_power: float = 1.0

    def __post_init__(self):
        if self.vap_index < 0 or self.led_index < 0:
            raise ConfigError("LED indices must be non-negative")
        if not self.mode >= 1.0:
            raise ConfigError(f"Lambertian mode must be >= 1, got {self.mode}")
        if self.tx_power != 1.0:
            raise ConfigError("transmit power is fixed at 1 W")
        object.__setattr__(self, "location", as_vec3(self.location, "location"))
        object.__setattr__(self, "orientation", as_unit(self.orientation, "orientation"))


@dataclass(frozen=True)
class Receiver:
    """Photodiode pose and optics: location, unit normal, field of view (rad) and area (m^2)."""

    location: np.ndarray
    orientation: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))
    fov: float = math.radians(85.0)
    area: float = 1e-4

    def __post_init__(self):
        if not 0.0 < self.fov <= math.pi / 2:
            raise ConfigError(f"fov must lie in (0, pi/2], got {self.fov}")
        if not self.area > 0.0:
            raise ConfigError(f"area must be positive, got {self.area}")
        object.__setattr__(self, "location", as_vec3(self.location, "location"))
        object.__setattr__(self, "orientation", as_unit(self.orientation, "orientation"))


@dataclass(frozen=True)
class Scene:
    """
    Room box, VAPs and receiver.

    ``vaps`` is a tuple of K tuples, each holding M LEDs. Flattened per-LED
    arrays follow the vectorisation order of the RSS vector: LED index fastest,
    then VAP index (flat index ``k * M + m``).
    """

    room: Tuple[float, float, float]
    vaps: Tuple[Tuple[LedTransmitter, ...], ...]
    receiver: Receiver

    def __post_init__(self):
        room = tuple(float(d) for d in self.room)
        if len(room) != 3 or min(room) <= 0:
            raise ConfigError(f"room dimensions must be three positive numbers, got {self.room}")
        vaps = tuple(tuple(v) for v in self.vaps)
        if not vaps or any(len(v) == 0 for v in vaps):
            raise ConfigError("scene needs K >= 1 VAPs with M >= 1 LEDs each")
        if len({len(v) for v in vaps}) != 1:
            raise ConfigError("all VAPs must carry the same number of LEDs")
        tol = 1e-9
        for vap in vaps:
            for led in vap:
                if np.any(led.location < -tol) or np.any(led.location > np.array(room) + tol):
                    raise ConfigError(f"LED at {led.location} lies outside the room")
        object.__setattr__(self, "room", room)
        object.__setattr__(self, "vaps", vaps)

    @property
    def n_vaps(self) -> int:
        return len(self.vaps)

    @property
    def leds_per_vap(self) -> int:
        return len(self.vaps[0])

    @property
    def n_leds(self) -> int:
        return self.n_vaps * self.leds_per_vap

    @property
    def leds(self) -> Tuple[LedTransmitter, ...]:
        return tuple(led for vap in self.vaps for led in vap)

    @property
    def led_locations(self) -> np.ndarray:
        return np.array([led.location for led in self.leds])

    @property
    def led_orientations(self) -> np.ndarray:
        return np.array([led.orientation for led in self.leds])

    @property
    def led_modes(self) -> np.ndarray:
        return np.array([led.mode for led in self.leds], dtype=float)

    def index_map(self):
        """List of ``(m, k)`` pairs, one per flat index."""
        return [(m, k) for k in range(self.n_vaps) for m in range(self.leds_per_vap)]

    def flat_index(self, m: int, k: int) -> int:
        return k * self.leds_per_vap + m

    def with_receiver_at(self, location) -> "Scene":
        return replace(self, receiver=replace(self.receiver, location=location))

    def contains(self, point, margin: float = 0.0) -> bool:
        p = as_vec3(point)
        return bool(np.all(p >= margin) and np.all(p <= np.array(self.room) - margin))


@dataclass(frozen=True)
class RoomScenarioConfig:
    """Parametric corner-VAP room. Angles are in degrees."""

    room: Tuple[float, float, float] = (5.0, 4.0, 3.0)
    ceiling_deg: float = 30.0
    polar_deg: float = 20.0
    leds_per_vap: int = 4
    mode: float = 10.0
    fov_deg: float = 85.0
    area: float = 1e-4
    orientation: Tuple[float, float, float] = (0.0, 0.0, 1.0)

    def __post_init__(self):
        if len(self.room) != 3 or min(self.room) <= 0:
            raise ConfigError(f"room dimensions must be positive, got {self.room}")
        if not 0.0 <= self.ceiling_deg < 90.0:
            raise ConfigError(f"ceiling angle must lie in [0, 90), got {self.ceiling_deg}")
        if not 0.0 <= self.polar_deg < 90.0:
            raise ConfigError(f"polar angle must lie in [0, 90), got {self.polar_deg}")
        if self.leds_per_vap < 1:
            raise ConfigError("leds_per_vap must be >= 1")
        if not self.mode >= 1.0:
            raise ConfigError("mode must be >= 1")
        if not 0.0 < self.fov_deg <= 90.0:
            raise ConfigError("fov must lie in (0, 90] degrees")
        if not self.area > 0:
            raise ConfigError("receiver area must be positive")


def vap_axes(room: Sequence[float], ceiling_deg: float):
    """Ceiling-corner VAP locations and their unit axes.

    Each axis points at the room centre in plan view and dips ``ceiling_deg``
    below the ceiling plane.
    """
    depth, width, height = room
    corners = np.array([
        [0.0, 0.0, height],
        [depth, 0.0, height],
        [depth, width, height],
        [0.0, width, height],
    ])
    centre = np.array([depth / 2, width / 2])
    elev = math.radians(ceiling_deg)
    axes = []
    for corner in corners:
        h = centre - corner[:2]
        h = h / np.linalg.norm(h)
        axes.append(np.array([math.cos(elev) * h[0], math.cos(elev) * h[1], -math.sin(elev)]))
    return corners, np.array(axes)


def _tilted_directions(axis: np.ndarray, polar: float, count: int) -> np.ndarray:
    # e1 lies in the vertical plane through the axis and tilts it further down
    horiz = np.array([axis[0], axis[1], 0.0])
    horiz /= np.linalg.norm(horiz)
    sin_e = -axis[2]
    cos_e = float(np.hypot(axis[0], axis[1]))
    e1 = np.array([-sin_e * horiz[0], -sin_e * horiz[1], -cos_e])
    e2 = np.cross(axis, e1)
    az = 2.0 * np.pi * np.arange(count) / count
    dirs = (
        math.cos(polar) * axis[None, :]
        + math.sin(polar) * (np.cos(az)[:, None] * e1[None, :] + np.sin(az)[:, None] * e2[None, :])
    )
    return dirs / np.linalg.norm(dirs, axis=1, keepdims=True)


def build_room_scene(cfg: RoomScenarioConfig, receiver_location=None) -> Scene:
    """Four ceiling-corner VAPs, each with ``cfg.leds_per_vap`` LEDs tilted
    ``cfg.polar_deg`` off the VAP axis at equally spaced azimuths.

    LED ``m = 0`` sits in the downward-tilt plane. The receiver defaults to the
    room centre at 1 m height.
    """
    corners, axes = vap_axes(cfg.room, cfg.ceiling_deg)
    polar = math.radians(cfg.polar_deg)
    vaps = []
    for k, (corner, axis) in enumerate(zip(corners, axes)):
        dirs = _tilted_directions(axis, polar, cfg.leds_per_vap)
        vaps.append(tuple(
            LedTransmitter(k, m, corner.copy(), d, mode=cfg.mode) for m, d in enumerate(dirs)
        ))
    if receiver_location is None:
        receiver_location = (cfg.room[0] / 2, cfg.room[1] / 2, 1.0)
    rx = Receiver(
        location=receiver_location,
        orientation=cfg.orientation,
        fov=math.radians(cfg.fov_deg),
        area=cfg.area,
    )
    return Scene(room=tuple(cfg.room), vaps=tuple(vaps), receiver=rx)


def diagonal_scene(mode: float = 30.0, receiver_location=(1.0, 1.0, 0.75)) -> Scene:
    """3 m cube with one LED per ceiling corner, each aimed along the corner
    diagonal at 45 degrees below the ceiling; the RSS objective has several local minima here."""
    cfg = RoomScenarioConfig(room=(3.0, 3.0, 3.0), ceiling_deg=45.0, polar_deg=0.0,
                             leds_per_vap=1, mode=mode)
    return build_room_scene(cfg, receiver_location)


def grid_points(room: Sequence[float], spacing: float) -> np.ndarray:
    """Cell-centred regular grid strictly inside the room, shape (N, 3)."""
    if not spacing > 0:
        raise ConfigError("grid spacing must be positive")
    axes = []
    for extent in room:
        n = max(int(round(extent / spacing)), 1)
        axes.append((np.arange(n) + 0.5) * (extent / n))
    xx, yy, zz = np.meshgrid(*axes, indexing="ij")
    return np.column_stack([xx.ravel(), yy.ravel(), zz.ravel()])
