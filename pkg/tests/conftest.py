import pytest

from geometry import Position3D
from pathloss import PAPER_MODEL
from remote_id import BroadcastSchedule
from simulator import TABLE3_NOISE, Scenario, Station, Waypoint

SQUARE = {
    'GS1': Position3D(0.0, 0.0, 0.0),
    'GS2': Position3D(200.0, 0.0, 0.0),
    'GS3': Position3D(200.0, 200.0, 0.0),
    'GS4': Position3D(0.0, 200.0, 0.0),
}

UNEVEN = {
    'GS1': Position3D(0.0, 0.0, 0.0),
    'GS2': Position3D(400.0, 0.0, 5.0),
    'GS3': Position3D(400.0, 400.0, 0.0),
    'GS4': Position3D(0.0, 400.0, 12.0),
}


@pytest.fixture
def square_registry():
    return dict(SQUARE)


@pytest.fixture
def uneven_registry():
    return dict(UNEVEN)


def make_scenario(stations=None, waypoints=None, **overrides):
    stations = stations or [Station(sid, pos) for sid, pos in UNEVEN.items()]
    waypoints = waypoints or [Waypoint(Position3D(200.0, 200.0, 60.0), 10.0),
                              Waypoint(Position3D(150.0, 250.0, 80.0), 10.0)]
    kwargs = dict(stations=tuple(stations), waypoints=tuple(waypoints),
                  truth_model=PAPER_MODEL, noise=TABLE3_NOISE,
                  schedule=BroadcastSchedule(), seed=7)
    kwargs.update(overrides)
    return Scenario(**kwargs)


@pytest.fixture
def scenario():
    return make_scenario()
