#!/usr/bin/env python3
"""Ground station -> collector data path.

Stations average their samples into report lines
    station_id,uav_id,window_end_s,mean_rssi_db,sample_count
and the collector keeps, per UAV, the freshest report of every station. Once
enough stations have reported, each report becomes a sphere (radius from the
path-loss model) and the UAV is located. Reports from an earlier window never
join a later fix. One aggregation sequence owns all fusion state, whether
lines come from a log file or from live TCP streams.
"""
import asyncio
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Dict, Iterable, Iterator, List, Optional, Tuple

import pandas as pd

import config
from errors import LocalizationError, MalformedLine, UnknownStation
from geometry import Position3D
from pathloss import (DistanceEstimate, PathLossModel, RssiSample,
                      estimate_distance, mean_rssi)
from trilateration import LocateOutcome, SphereConstraint, locate

log = logging.getLogger(__name__)

REPORT_FIELDS = ['station_id', 'uav_id', 'window_end_s', 'mean_rssi_db', 'sample_count']
REGISTRY_COLUMNS = ['station_id', 'x_m', 'y_m', 'z_m']
FIX_LOG_COLUMNS = ['uav_id', 'x_m', 'y_m', 'z_m', 'residual_m', 'path', 'status']


@dataclass(frozen=True)
class StationReport:
    station_id: str
    uav_id: str
    window_end_s: float
    mean_rssi_db: float
    sample_count: int

    def __post_init__(self):
        if self.sample_count < 1:
            raise ValueError("sample_count must be >= 1")


def _exact(value, min_decimals):
    """Shortest fixed-point text with at least `min_decimals` that parses back exactly."""
    for decimals in range(min_decimals, 18):
        text = f"{value:.{decimals}f}"
        if float(text) == value:
            return text
    return repr(value)


def encode_report(report: StationReport) -> str:
    return ','.join([report.station_id, report.uav_id,
                     _exact(report.window_end_s, 1),
                     _exact(report.mean_rssi_db, 2),
                     str(report.sample_count)]) + '\n'


def parse_report(line: str) -> StationReport:
    fields = line.rstrip('\r\n').split(',')
    if len(fields) != len(REPORT_FIELDS):
        raise MalformedLine(f"expected {len(REPORT_FIELDS)} fields, got {len(fields)}: {line!r}")
    station_id, uav_id, end, rssi, count = (f.strip() for f in fields)
    if not station_id or not uav_id:
        raise MalformedLine(f"empty id in {line!r}")
    try:
        window_end_s = float(end)
        mean_rssi_db = float(rssi)
        sample_count = int(count)
    except ValueError:
        raise MalformedLine(f"non-numeric field in {line!r}") from None
    if not (math.isfinite(window_end_s) and math.isfinite(mean_rssi_db)) or sample_count < 1:
        raise MalformedLine(f"out-of-range field in {line!r}")
    return StationReport(station_id, uav_id, window_end_s, mean_rssi_db, sample_count)


def merge_reports(reports: Iterable[StationReport]) -> List[StationReport]:
    """Deterministic collector order: window end time, then station id."""
    return sorted(reports, key=lambda r: (r.window_end_s, r.station_id))


class ReportWindower:
    """Station side: samples -> one report per completed window.

    A partial window older than window_size * interval_s (the UAV has moved on)
    becomes a report if it holds at least `min_samples`, and is dropped otherwise.
    """

    def __init__(self, window_size=config.WINDOW_SIZE, interval_s=config.MESSAGE_INTERVAL_S,
                 min_samples=None):
        self.window_size = window_size
        self.span_s = window_size * interval_s
        self.min_samples = window_size if min_samples is None else min_samples
        if not 1 <= self.min_samples <= window_size:
            raise ValueError(f"min_samples must be in [1, {window_size}], got {self.min_samples}")
        self._buffers: Dict[Tuple[str, str], List[RssiSample]] = {}
        self.dropped_partials = 0

    def _close(self, key) -> Optional[StationReport]:
        buffer = self._buffers.pop(key, [])
        if not buffer:
            return None
        if len(buffer) < self.min_samples:
            self.dropped_partials += 1
            log.debug("dropping partial window of %d samples from %s", len(buffer), key[0])
            return None
        window = mean_rssi(buffer)
        return StationReport(key[0], key[1], window.window_end_s, window.value_db,
                             window.sample_count)

    def add(self, sample: RssiSample) -> List[StationReport]:
        key = (sample.station_id, sample.uav_id)
        reports = []
        buffer = self._buffers.get(key)
        if buffer and sample.timestamp_s - buffer[0].timestamp_s >= self.span_s - 1e-9:
            stale = self._close(key)
            if stale:
                reports.append(stale)
        self._buffers.setdefault(key, []).append(sample)
        if len(self._buffers[key]) >= self.window_size:
            reports.append(self._close(key))
        return reports

    def flush(self) -> List[StationReport]:
        reports = [self._close(key) for key in list(self._buffers)]
        return [r for r in reports if r is not None]


def reports_from_samples(samples: Iterable[RssiSample], **windower_kwargs) -> List[StationReport]:
    windower = ReportWindower(**windower_kwargs)
    reports = []
    for sample in samples:
        reports.extend(windower.add(sample))
    reports.extend(windower.flush())
    return merge_reports(reports)


def load_registry(path) -> Dict[str, Position3D]:
    df = pd.read_csv(path, dtype={'station_id': str})
    missing = set(REGISTRY_COLUMNS) - set(df.columns)
    if missing:
        raise ValueError(f"{path}: registry missing columns {sorted(missing)}")
    if df['station_id'].duplicated().any():
        raise ValueError(f"{path}: duplicate station ids")
    return {row.station_id: Position3D(float(row.x_m), float(row.y_m), float(row.z_m))
            for row in df.itertuples(index=False)}


@dataclass
class FusionWindow:
    """Freshest report per station for one UAV.

    Reports older than max_age_s, or a full window span behind the newest
    report, are evicted; only reports of one window cohort are fused.
    """
    uav_id: str
    max_age_s: float = config.FUSION_MAX_AGE_S
    cohort_span_s: float = config.COHORT_SPAN_S
    reports: Dict[str, StationReport] = field(default_factory=dict)

    def _stale(self, age):
        return age > self.max_age_s or age >= self.cohort_span_s - 1e-9

    def update(self, report: StationReport):
        self.reports[report.station_id] = report
        newest = max(r.window_end_s for r in self.reports.values())
        for sid in [sid for sid, r in self.reports.items()
                    if self._stale(newest - r.window_end_s)]:
            log.debug("evicting stale report from %s for %s", sid, self.uav_id)
            del self.reports[sid]


@dataclass(frozen=True)
class FixRecord:
    uav_id: str
    outcome: Optional[LocateOutcome]
    failure: Optional[str]
    reports: Tuple[StationReport, ...]
    estimates: Tuple[DistanceEstimate, ...]
    wall_time: float

    @property
    def ok(self):
        return self.outcome is not None

    def log_row(self) -> dict:
        if self.outcome is None:
            return {'uav_id': self.uav_id, 'x_m': '', 'y_m': '', 'z_m': '',
                    'residual_m': '', 'path': '', 'status': self.failure}
        p = self.outcome.position
        return {'uav_id': self.uav_id, 'x_m': f"{p.x:.6f}", 'y_m': f"{p.y:.6f}",
                'z_m': f"{p.z:.6f}", 'residual_m': f"{self.outcome.residual_norm_m:.6f}",
                'path': self.outcome.path, 'status': 'ok'}


class Collector:
    """Single-writer fusion state over all UAVs."""

    def __init__(self, registry: Dict[str, Position3D], model: PathLossModel,
                 settings: config.FusionSettings = config.FusionSettings()):
        self.registry = registry
        self.model = model
        self.settings = settings
        self.windows: Dict[str, FusionWindow] = {}
        self.dropped_unknown = 0
        self.dropped_malformed = 0

    def position_of(self, station_id) -> Position3D:
        try:
            return self.registry[station_id]
        except KeyError:
            raise UnknownStation(f"station {station_id} is not in the registry") from None

    def ingest_line(self, line: str) -> Optional[FixRecord]:
        if not line.strip():
            return None
        try:
            report = parse_report(line)
        except MalformedLine as exc:
            self.dropped_malformed += 1
            log.warning("dropping malformed report: %s", exc)
            return None
        return self.ingest_report(report)

    def ingest_report(self, report: StationReport) -> Optional[FixRecord]:
        try:
            self.position_of(report.station_id)
        except UnknownStation as exc:
            self.dropped_unknown += 1
            log.warning("dropping report: %s", exc)
            return None
        window = self.windows.setdefault(
            report.uav_id, FusionWindow(report.uav_id, self.settings.max_age_s,
                                        self.settings.cohort_span_s))
        window.update(report)
        if len(window.reports) < self.settings.min_stations:
            return None
        used = tuple(window.reports[sid] for sid in sorted(window.reports))
        window.reports.clear()
        return self._fix(report.uav_id, used)

    def _fix(self, uav_id, used) -> FixRecord:
        estimates = ()
        try:
            estimates = tuple(estimate_distance(self.model, r.mean_rssi_db) for r in used)
            constraints = [SphereConstraint(self.registry[r.station_id], e.distance_m, r.station_id)
                           for r, e in zip(used, estimates)]
            outcome, failure = locate(constraints), None
        except LocalizationError as exc:
            outcome, failure = None, type(exc).__name__
            log.warning("fix for %s failed: %s", uav_id, exc)
        return FixRecord(uav_id, outcome, failure, used, estimates, time.time())


def ingest(lines: Iterable[str], registry: Dict[str, Position3D], model: PathLossModel,
           settings: config.FusionSettings = config.FusionSettings(),
           collector: Optional[Collector] = None) -> Iterator[FixRecord]:
    collector = collector or Collector(registry, model, settings)
    for line in lines:
        fix = collector.ingest_line(line)
        if fix is not None:
            yield fix


def fix_log_frame(fixes: Iterable[FixRecord]) -> pd.DataFrame:
    return pd.DataFrame([f.log_row() for f in fixes], columns=FIX_LOG_COLUMNS)


class TcpCollector:
    """Newline-delimited TCP front end; every connection feeds one queue."""

    def __init__(self, collector: Collector, host='127.0.0.1', port=0):
        self.collector = collector
        self.host = host
        self.port = port
        self.fixes: List[FixRecord] = []
        self._queue: asyncio.Queue = None
        self._server = None
        self._consumer = None
        self._active = 0
        self._seen = 0

    async def start(self):
        self._queue = asyncio.Queue()
        self._server = await asyncio.start_server(self._handle, self.host, self.port)
        self.port = self._server.sockets[0].getsockname()[1]
        self._consumer = asyncio.create_task(self._consume())
        log.info("collector listening on %s:%d", self.host, self.port)

    async def _handle(self, reader, writer):
        self._active += 1
        self._seen += 1
        try:
            while True:
                raw = await reader.readline()
                if not raw:
                    break
                await self._queue.put(raw.decode('utf-8', errors='replace'))
        finally:
            self._active -= 1
            writer.close()

    async def _consume(self):
        while True:
            line = await self._queue.get()
            fix = self.collector.ingest_line(line)
            if fix is not None:
                self.fixes.append(fix)
            self._queue.task_done()

    async def wait_idle(self, connections=1, timeout=5.0):
        """Wait until `connections` streams have come and gone and the queue is drained."""
        loop = asyncio.get_running_loop()
        deadline = loop.time() + timeout
        while self._seen < connections or self._active:
            if loop.time() > deadline:
                raise TimeoutError("collector streams still open")
            await asyncio.sleep(0.01)
        await self._queue.join()

    async def stop(self):
        self._server.close()
        await self._server.wait_closed()
        self._consumer.cancel()
        try:
            await self._consumer
        except asyncio.CancelledError:
            pass
