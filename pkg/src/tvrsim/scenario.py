"""Synthetic free-flow highway snapshots and CSV ingestion."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .geometry import Vehicle, VehicleArrays, VehicleClass

__all__ = [
    "DENSITY_PRESETS",
    "CSV_COLUMNS",
    "HeightDistribution",
    "RoadConfig",
    "Scenario",
    "ScenarioFormatError",
    "generate",
    "load_csv",
    "save_csv",
    "spacing_samples",
]

# vehicles / km / lane
DENSITY_PRESETS = {"low": 2.5, "medium": 7.5, "high": 10.0}

CSV_COLUMNS = ("id", "x_m", "y_m", "heading_deg", "length_m", "width_m", "height_m", "class")

# height above which an unlabeled ingested vehicle counts as tall
TALL_HEIGHT_THRESHOLD = 2.0


class ScenarioFormatError(ValueError):
    pass


@dataclass(frozen=True)
class HeightDistribution:
    mean: float
    std: float


@dataclass(frozen=True)
class RoadConfig:
    length: float = 13_500.0
    lanes: int = 4
    lane_width: float = 3.5
    density: float = DENSITY_PRESETS["medium"]
    tall_fraction: float = 0.1436
    tall_height: HeightDistribution = HeightDistribution(3.35, 0.08)
    short_height: HeightDistribution = HeightDistribution(1.5, 0.08)
    tall_dims: tuple[float, float] = (6.3, 2.0)
    short_dims: tuple[float, float] = (4.2, 1.8)

    def __post_init__(self):
        if not self.density > 0:
            raise ValueError(f"density must be positive, got {self.density!r}")
        if not 0.0 <= self.tall_fraction <= 1.0:
            raise ValueError(f"tall_fraction must lie in [0, 1], got {self.tall_fraction!r}")
        if self.lanes < 1 or not self.length > 0 or not self.lane_width > 0:
            raise ValueError("road needs at least one lane and positive length/lane width")
        for dist in (self.tall_height, self.short_height):
            if not dist.std > 0 or not dist.mean > 0:
                raise ValueError("height distributions need positive mean and std")

    @property
    def linear_density(self) -> float:
        """Vehicles per meter of road, all lanes pooled."""
        return self.lanes * self.density / 1000.0

    def lane_center(self, lane: int) -> float:
        return (lane + 0.5) * self.lane_width


@dataclass(frozen=True)
class Scenario:
    vehicles: tuple[Vehicle, ...]
    road: RoadConfig | None = None
    seed: int | None = None
    _index: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "vehicles", tuple(self.vehicles))
        index = {v.id: k for k, v in enumerate(self.vehicles)}
        if len(index) != len(self.vehicles):
            raise ValueError("duplicate vehicle ids")
        object.__setattr__(self, "_index", index)

    def __len__(self):
        return len(self.vehicles)

    @cached_property
    def arrays(self) -> VehicleArrays:
        return VehicleArrays.from_vehicles(self.vehicles)

    def index_of(self, vehicle_id: int) -> int:
        return self._index[vehicle_id]

    def vehicle(self, vehicle_id: int) -> Vehicle:
        return self.vehicles[self._index[vehicle_id]]

    @property
    def road_length(self) -> float:
        if self.road is not None:
            return self.road.length
        if not self.vehicles:
            return 0.0
        x = self.arrays.x
        return float(x.max() - x.min())

    @property
    def tall_fraction(self) -> float:
        return float(self.arrays.tall.mean()) if self.vehicles else 0.0

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for v in self.vehicles:
            writer.writerow([
                v.id, repr(v.center[0]), repr(v.center[1]), repr(v.heading_deg),
                repr(v.length), repr(v.width), repr(v.height), v.vclass.value,
            ])
        return buf.getvalue()


def generate(config: RoadConfig, seed: int) -> Scenario:
    """Draw one static free-flow snapshot.

    Each lane is filled front to back: bumper-to-bumper gaps are exponential
    with mean ``1000 / density`` meters and every vehicle occupies its own
    length on top of the gap, so same-lane footprints never overlap.
    """
    rng = np.random.default_rng(seed)
    rate = config.density / 1000.0
    vehicles = []
    next_id = 0
    for lane in range(config.lanes):
        y = config.lane_center(lane)
        cursor = 0.0
        while True:
            gap = rng.exponential(1.0 / rate)
            tall = rng.random() < config.tall_fraction
            dist = config.tall_height if tall else config.short_height
            height = rng.normal(dist.mean, dist.std)
            length, width = config.tall_dims if tall else config.short_dims
            rear = cursor + gap
            if rear + length > config.length:
                break
            vehicles.append(Vehicle(
                id=next_id,
                center=(rear + length / 2, y),
                length=length,
                width=width,
                height=height,
                vclass=VehicleClass.TALL if tall else VehicleClass.SHORT,
                lane=lane,
            ))
            next_id += 1
            cursor = rear + length
    return Scenario(tuple(vehicles), road=config, seed=seed)


def _parse_row(row, lineno, lane_width):
    try:
        vid = int(row["id"])
        x, y = float(row["x_m"]), float(row["y_m"])
        heading = math.radians(float(row["heading_deg"]))
        length, width, height = (float(row[k]) for k in ("length_m", "width_m", "height_m"))
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioFormatError(f"row {lineno}: cannot parse ({exc})") from exc

    label = (row.get("class") or "").strip().lower()
    if label:
        try:
            vclass = VehicleClass(label)
        except ValueError:
            raise ScenarioFormatError(f"row {lineno}: unknown class {label!r}") from None
    else:
        vclass = VehicleClass.TALL if height > TALL_HEIGHT_THRESHOLD else VehicleClass.SHORT

    try:
        return Vehicle(
            id=vid,
            center=(x, y),
            length=length,
            width=width,
            height=height,
            vclass=vclass,
            lane=max(int(math.floor(y / lane_width)), 0),
            heading=(math.cos(heading), math.sin(heading)),
        )
    except ValueError as exc:
        raise ScenarioFormatError(f"row {lineno}: {exc}") from exc


def load_csv(path, lane_width: float = 3.5) -> Scenario:
    """Read a vehicle snapshot in the ``id,x_m,y_m,...`` schema.

    The ``class`` column may be missing or blank; vehicles taller than 2 m
    are then classed as tall.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ScenarioFormatError(f"{path}: missing header")
        missing = [c for c in CSV_COLUMNS[:-1] if c not in reader.fieldnames]
        if missing:
            raise ScenarioFormatError(f"{path}: header lacks columns {missing}")
        # header is line 1
        vehicles = [_parse_row(row, lineno, lane_width) for lineno, row in enumerate(reader, start=2)]
    vehicles.sort(key=lambda v: (v.lane, v.center[0]))
    return Scenario(tuple(vehicles))


def save_csv(scenario: Scenario, path) -> Path:
    path = Path(path)
    path.write_text(scenario.to_csv(), encoding="utf-8")
    return path


def spacing_samples(scenario: Scenario) -> np.ndarray:
    """Distance from every vehicle to its nearest neighbour, any lane."""
    if len(scenario) < 2:
        raise ValueError("spacing needs at least two vehicles")
    arr = scenario.arrays
    order = np.argsort(arr.x, kind="stable")
    xs, ys = arr.x[order], arr.y[order]
    best = np.full(xs.size, np.inf)
    # walk outward in x until the x-gap alone exceeds the current best
    for shift in range(1, xs.size):
        dx = xs[shift:] - xs[:-shift]
        if dx.size == 0 or (dx >= np.maximum(best[shift:], best[:-shift])).all():
            break
        d = np.hypot(dx, ys[shift:] - ys[:-shift])
        best[shift:] = np.minimum(best[shift:], d)
        best[:-shift] = np.minimum(best[:-shift], d)
    out = np.empty_like(best)
    out[order] = best
    return out
