#!/usr/bin/env python3
"""Deterministic RSSI sample streams from a declarative scenario.

Every emission draws from its own generator seeded by
(scenario seed, station key, emission index), so a station's stream does not
depend on the order stations are simulated in or on the worker count.
"""
import bisect
import hashlib
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Sequence, Tuple

import numpy as np
import pandas as pd

import config
from errors import InvalidScenario
from geometry import Position3D, euclidean_distance
from pathloss import PathLossModel, predict_rssi
from remote_id import BroadcastSchedule, MessageFormat, UavId

log = logging.getLogger(__name__)

SAMPLE_LOG_COLUMNS = ['station_id', 'uav_id', 'timestamp_s', 'rssi_db', 'truth_distance_m']


@dataclass(frozen=True)
class NoiseProfile:
    anchors: Tuple[Tuple[float, float], ...]
    per_format_offset_db: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if not self.anchors:
            raise InvalidScenario("noise profile needs at least one anchor")
        distances = [d for d, _ in self.anchors]
        if any(b <= a for a, b in zip(distances, distances[1:])):
            raise InvalidScenario("noise anchor distances must be strictly increasing")
        if any(s < 0 for _, s in self.anchors):
            raise InvalidScenario("noise std dev must be >= 0")

    def offset_for(self, fmt) -> float:
        return float(self.per_format_offset_db.get(MessageFormat(fmt).value, 0.0))


TABLE3_NOISE = NoiseProfile(anchors=tuple(config.TABLE3_NOISE_ANCHORS))


@dataclass(frozen=True)
class Station:
    id: str
    position: Position3D
    bias_db: float = 0.0


@dataclass(frozen=True)
class Waypoint:
    position: Position3D
    dwell_s: float


@dataclass(frozen=True)
class Scenario:
    stations: Tuple[Station, ...]
    waypoints: Tuple[Waypoint, ...]
    truth_model: PathLossModel
    noise: NoiseProfile
    schedule: BroadcastSchedule = BroadcastSchedule()
    loss_probability: float = 0.0
    seed: int = 0
    uav_id: UavId = UavId('FF1')
    message_format: MessageFormat = MessageFormat.M3

    def __post_init__(self):
        if not self.stations:
            raise InvalidScenario("scenario has no stations")
        ids = [s.id for s in self.stations]
        if len(set(ids)) != len(ids):
            raise InvalidScenario(f"duplicate station ids in {ids}")
        if not self.waypoints:
            raise InvalidScenario("scenario has no waypoints")
        if any(not w.dwell_s > 0 for w in self.waypoints):
            raise InvalidScenario("every waypoint needs dwell_s > 0")
        if not 0 <= self.loss_probability < 1:
            raise InvalidScenario(f"loss_probability {self.loss_probability} outside [0, 1)")
        if not 0 <= self.seed < 2 ** 64:
            raise InvalidScenario("seed must be an unsigned 64-bit integer")
        for s in self.stations:
            if s.position.z < 0:
                raise InvalidScenario(f"station {s.id} below ground")
        for w in self.waypoints:
            if w.position.z < 0:
                raise InvalidScenario(f"waypoint {w.position} below ground")

    def usable_waypoints(self) -> List[int]:
        need = self.schedule.dwell_requirement_s
        return [i for i, w in enumerate(self.waypoints) if w.dwell_s >= need]

    def with_seed(self, seed):
        return Scenario(self.stations, self.waypoints, self.truth_model, self.noise,
                        self.schedule, self.loss_probability, seed, self.uav_id,
                        self.message_format)


@dataclass(frozen=True)
class EmittedSample:
    station_id: str
    uav_id: str
    rssi_db: float
    timestamp_s: float
    truth_distance_m: float


def sigma_at(profile: NoiseProfile, distance_m: float) -> float:
    """Piecewise-linear std dev between anchors, clamped beyond the ends."""
    distances = [d for d, _ in profile.anchors]
    sigmas = [s for _, s in profile.anchors]
    if distance_m <= distances[0]:
        return sigmas[0]
    if distance_m >= distances[-1]:
        return sigmas[-1]
    i = bisect.bisect_right(distances, distance_m)
    d0, d1 = distances[i - 1], distances[i]
    s0, s1 = sigmas[i - 1], sigmas[i]
    return s0 + (s1 - s0) * (distance_m - d0) / (d1 - d0)


def station_key(station_id: str) -> int:
    """Stable 64-bit key for a station id (Python's hash() is salted per process)."""
    return int.from_bytes(hashlib.sha256(station_id.encode('utf-8')).digest()[:8], 'big')


def emission_times(scenario: Scenario) -> List[Tuple[float, int]]:
    """(timestamp, waypoint index) of every broadcast, floor(dwell / interval) per waypoint."""
    interval = scenario.schedule.interval_s
    times = []
    start = 0.0
    for w_index, waypoint in enumerate(scenario.waypoints):
        count = int(math.floor(waypoint.dwell_s / interval + 1e-9))
        times.extend((start + k * interval, w_index) for k in range(count))
        start += waypoint.dwell_s
    return times


def _simulate_station(scenario: Scenario, station: Station,
                      times: Sequence[Tuple[float, int]]) -> List[EmittedSample]:
    key = station_key(station.id)
    offset = scenario.noise.offset_for(scenario.message_format) + station.bias_db
    uav = str(scenario.uav_id)
    samples = []
    for index, (t, w_index) in enumerate(times):
        rng = np.random.default_rng([scenario.seed, key, index])
        lost = rng.random() < scenario.loss_probability
        noise_unit = rng.standard_normal()
        if lost:
            continue
        truth = euclidean_distance(station.position, scenario.waypoints[w_index].position)
        # a UAV directly on the antenna has no defined path loss; clamp to 1 cm
        distance = max(truth, 0.01)
        rssi = (predict_rssi(scenario.truth_model, distance) + offset
                + sigma_at(scenario.noise, distance) * noise_unit)
        samples.append(EmittedSample(station.id, uav, float(rssi), t, truth))
    return samples


def simulate(scenario: Scenario, workers: int = 1) -> Dict[str, List[EmittedSample]]:
    usable = set(scenario.usable_waypoints())
    for i, w in enumerate(scenario.waypoints):
        if i not in usable:
            log.warning("waypoint %d dwells %.1f s, below the %.1f s needed for one window",
                        i, w.dwell_s, scenario.schedule.dwell_requirement_s)
    times = emission_times(scenario)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            streams = list(pool.map(lambda s: _simulate_station(scenario, s, times),
                                    scenario.stations))
    else:
        streams = [_simulate_station(scenario, s, times) for s in scenario.stations]
    result = {s.id: stream for s, stream in zip(scenario.stations, streams)}
    log.info("simulated %d emissions per station across %d stations",
             len(times), len(scenario.stations))
    return result


def samples_frame(streams: Dict[str, List[EmittedSample]]) -> pd.DataFrame:
    """Merge station streams into one sample log ordered by time, then station."""
    rows = [asdict(s) for stream in streams.values() for s in stream]
    df = pd.DataFrame(rows, columns=SAMPLE_LOG_COLUMNS)
    return df.sort_values(['timestamp_s', 'station_id'], kind='mergesort').reset_index(drop=True)


def _position(obj, where):
    try:
        return Position3D(float(obj['x']), float(obj['y']), float(obj['z']))
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidScenario(f"bad position in {where}: {exc}") from None


def scenario_from_dict(doc: dict) -> Scenario:
    try:
        model = doc['truth_model']
        noise = doc.get('noise', {})
        schedule = doc.get('schedule', {})
        stations = tuple(Station(str(s['id']), _position(s, f"station {s.get('id')}"),
                                 float(s.get('bias_db', 0.0)))
                         for s in doc['stations'])
        waypoints = tuple(Waypoint(_position(w, f"waypoint {i}"), float(w['dwell_s']))
                          for i, w in enumerate(doc['waypoints']))
        anchors = noise.get('anchors', config.TABLE3_NOISE_ANCHORS)
        return Scenario(
            stations=stations,
            waypoints=waypoints,
            truth_model=PathLossModel(float(model['L']), float(model['C'])),
            noise=NoiseProfile(anchors=tuple((float(d), float(s)) for d, s in anchors),
                               per_format_offset_db={MessageFormat(k).value: float(v) for k, v in
                                                     noise.get('per_format_offset_db', {}).items()}),
            schedule=BroadcastSchedule(float(schedule.get('interval_s', config.MESSAGE_INTERVAL_S)),
                                       int(schedule.get('window_size', config.WINDOW_SIZE))),
            loss_probability=float(doc.get('loss_probability', 0.0)),
            seed=int(doc.get('seed', 0)),
            uav_id=UavId(str(doc.get('uav_id', 'FF1'))),
            message_format=MessageFormat(doc.get('message_format', 'M3')),
        )
    except InvalidScenario:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidScenario(f"invalid scenario: {exc}") from None


def load_scenario(path) -> Scenario:
    try:
        doc = json.loads(Path(path).read_text(encoding='utf-8'))
    except json.JSONDecodeError as exc:
        raise InvalidScenario(f"{path}: not valid JSON ({exc})") from None
    if not isinstance(doc, dict):
        raise InvalidScenario(f"{path}: top level must be an object")
    return scenario_from_dict(doc)
