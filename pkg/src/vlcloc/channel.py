"""
Lambertian line-of-sight channel and noisy RSS observations.

Received power uses unit photodiode responsivity, so watts and amperes are
interchangeable and the noise variance is quoted in A^2.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .exceptions import ConfigError, DomainError, InputError
from .geometry import LedTransmitter, Receiver, Scene, as_vec3


def lambertian_f(v: np.ndarray, led_dir: np.ndarray, rx_dir: np.ndarray, mode) -> np.ndarray:
    """``(v.n_led)^n (v.n_rx) / |v|^(n+3)`` along the last axis of ``v``."""
    norm = np.linalg.norm(v, axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        # normalised form avoids overflow of |v|^(n+3) far from the LED
        cos_led = np.maximum(np.sum(v * led_dir, axis=-1) / norm, 0.0)
        return cos_led ** mode * (np.sum(v * rx_dir, axis=-1) / norm) / (norm * norm)


def gates(v: np.ndarray, led_dir: np.ndarray, rx_dir: np.ndarray, cos_fov: float) -> np.ndarray:
    """Product of the emission and FOV rectangle gates (boundaries included)."""
    norm = np.linalg.norm(v, axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        cos_emit = np.sum(v * led_dir, axis=-1) / norm
        cos_inc = -np.sum(v * rx_dir, axis=-1) / norm
    return (cos_emit >= 0.0) & (cos_inc >= cos_fov)


def _power_grid(points: np.ndarray, led_loc, led_dir, modes, rx: Receiver) -> np.ndarray:
    # points (..., 3) -> powers (..., L)
    v = points[..., None, :] - led_loc
    if np.any(np.all(v == 0.0, axis=-1)):
        raise DomainError("candidate location coincides with an LED")
    gate = gates(v, led_dir, rx.orientation, np.cos(rx.fov))
    f = lambertian_f(v, led_dir, rx.orientation, modes)
    scale = (modes + 1.0) * rx.area / (2.0 * np.pi)
    return np.where(gate, -scale * f, 0.0)


def received_power(led: LedTransmitter, rx: Receiver) -> float:
    """Power (W) collected by ``rx`` from one LED; exactly 0 outside either gate."""
    p = _power_grid(rx.location, led.location[None, :], led.orientation[None, :],
                    np.array([led.mode]), rx)
    return float(p[0])


def rss_vector(scene: Scene, candidate) -> np.ndarray:
    """Noiseless RSS vector for a receiver placed at ``candidate``.

    ``candidate`` may also be an ``(N, 3)`` batch, giving an ``(N, K*M)`` array.
    """
    pts = np.asarray(candidate, dtype=float)
    if pts.shape[-1] != 3:
        raise DomainError(f"candidate must end in a length-3 axis, got {pts.shape}")
    return _power_grid(pts, scene.led_locations, scene.led_orientations, scene.led_modes,
                       scene.receiver)


@dataclass(frozen=True)
class Observation:
    """Noisy RSS vector ``s`` (flat index ``k * M + m``) with its noise level and seed."""

    s: np.ndarray
    n_vaps: int
    leds_per_vap: int
    noise_variance: float = 0.0
    seed: object = None

    def __post_init__(self):
        s = np.asarray(self.s, dtype=float)
        if s.ndim != 1 or s.size != self.n_vaps * self.leds_per_vap:
            raise InputError(
                f"observation length {s.size} != K*M = {self.n_vaps * self.leds_per_vap}")
        if self.noise_variance < 0:
            raise ConfigError("noise variance must be non-negative")
        object.__setattr__(self, "s", s)

    @classmethod
    def for_scene(cls, s, scene: Scene, noise_variance: float = 0.0, seed=None) -> "Observation":
        s = np.asarray(s, dtype=float)
        if s.ndim != 1 or s.size != scene.n_leds:
            raise InputError(f"observation length {s.size} does not match scene ({scene.n_leds} LEDs)")
        return cls(s, scene.n_vaps, scene.leds_per_vap, noise_variance, seed)

    @property
    def index_map(self) -> Tuple[Tuple[int, int], ...]:
        return tuple((m, k) for k in range(self.n_vaps) for m in range(self.leds_per_vap))

    def by_vap(self) -> np.ndarray:
        """``(K, M)`` view: row k holds the M readings of VAP k."""
        return self.s.reshape(self.n_vaps, self.leds_per_vap)

    def check_scene(self, scene: Scene) -> None:
        if (self.n_vaps, self.leds_per_vap) != (scene.n_vaps, scene.leds_per_vap):
            raise InputError("observation dimensions do not match the scene")


def observe(scene: Scene, noise_variance: float, seed=None) -> Observation:
    """``rss_vector`` at the scene's receiver plus iid N(0, noise_variance) noise.

    Negative samples are kept as-is.
    """
    if noise_variance < 0:
        raise ConfigError("noise variance must be non-negative")
    p = rss_vector(scene, scene.receiver.location)
    rng = np.random.default_rng(seed)
    s = p + rng.normal(0.0, np.sqrt(noise_variance), size=p.shape)
    return Observation(s, scene.n_vaps, scene.leds_per_vap, float(noise_variance), seed)
