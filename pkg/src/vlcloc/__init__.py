"""3D receiver localisation for visible-light-communication systems."""

from .aoa import aoa_localize, aoa_solve, build_problem, max_contour_radius, select_leds
from .channel import Observation, observe, received_power, rss_vector
from .crlb import coverage_map, crlb_rmse, fim
from .estimators import AOALocalizer, RSSLocalizer
from .exceptions import (ConfigError, DomainError, InputError, InsufficientAnchorsError,
                         NoAnchorsError, NoContourError, SingularityError, VLCLocError)
from .geometry import (LedTransmitter, Receiver, RoomScenarioConfig, Scene, build_room_scene,
                       diagonal_scene)
from .results import EstimationResult
from .rss import RrcConfig, SolverConfig, gauss_newton, jacobian, rss_localize

__version__ = "0.1.0"
