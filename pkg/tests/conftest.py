import math

import numpy as np
import pytest
from hypothesis import settings

from vlcloc.geometry import (LedTransmitter, Receiver, RoomScenarioConfig, Scene,
                             build_room_scene, diagonal_scene)

settings.register_profile("ci", max_examples=60, deadline=None)
settings.load_profile("ci")


def single_led_scene(led_loc=(0.0, 0.0, 3.0), led_dir=(0.0, 0.0, -1.0), mode=1.0,
                     rx_loc=(0.0, 0.0, 0.0), rx_dir=(0.0, 0.0, 1.0), area=1e-4,
                     fov_deg=85.0, room=(4.0, 4.0, 4.0)):
    led = LedTransmitter(0, 0, led_loc, led_dir, mode=mode)
    rx = Receiver(rx_loc, rx_dir, math.radians(fov_deg), area)
    return Scene(room, ((led,),), rx)


@pytest.fixture
def room_scene():
    return build_room_scene(RoomScenarioConfig(mode=10.0), (2.0, 2.0, 1.0))


@pytest.fixture
def room_scene_30():
    return build_room_scene(RoomScenarioConfig(mode=30.0), (2.0, 2.0, 1.0))


@pytest.fixture
def diag():
    return diagonal_scene()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
