"""Vehicle geometry, Fresnel-zone obstruction tests and LOS statistics.

Every vehicle is a flat-roofed rectangle oriented along its heading. A link
between two roof antennas is obstructed by a third vehicle when that
vehicle's footprint comes within 60% of the first Fresnel radius of the
ground track of the link, and its roof reaches above the lower edge of the
60% ellipsoid at that point. The obstructing vehicle is then represented by
a single knife edge at the axial position of closest approach.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple

import numpy as np

__all__ = [
    "FRESNEL_FRACTION",
    "VehicleClass",
    "Vehicle",
    "VehicleArrays",
    "ObstacleSample",
    "LinkProfile",
    "LinkBlock",
    "fresnel_radius",
    "link_profile",
    "is_los",
    "iter_link_blocks",
    "obstacle_count_matrix",
    "per_vehicle_los_ratio",
]

FRESNEL_FRACTION = 0.6
SPEED_OF_LIGHT = 299_792_458.0


class VehicleClass(enum.Enum):
    TALL = "tall"
    SHORT = "short"


@dataclass(frozen=True)
class Vehicle:
    id: int
    center: tuple[float, float]
    length: float
    width: float
    height: float
    vclass: VehicleClass
    lane: int = 0
    heading: tuple[float, float] = (1.0, 0.0)
    antenna_offset: float = 0.0

    def __post_init__(self):
        for name in ("length", "width", "height"):
            value = getattr(self, name)
            if not value > 0:
                raise ValueError(f"vehicle {self.id}: {name} must be positive, got {value!r}")
        hx, hy = self.heading
        norm = math.hypot(hx, hy)
        if norm == 0:
            raise ValueError(f"vehicle {self.id}: zero heading vector")
        if abs(norm - 1.0) > 1e-12:
            object.__setattr__(self, "heading", (hx / norm, hy / norm))

    @property
    def is_tall(self) -> bool:
        return self.vclass is VehicleClass.TALL

    @property
    def antenna(self) -> tuple[float, float, float]:
        return (self.center[0], self.center[1], self.height + self.antenna_offset)

    @property
    def heading_deg(self) -> float:
        return math.degrees(math.atan2(self.heading[1], self.heading[0]))


class VehicleArrays(NamedTuple):
    """Column view of a vehicle list, index-aligned with the list."""

    ids: np.ndarray
    x: np.ndarray
    y: np.ndarray
    hx: np.ndarray
    hy: np.ndarray
    half_length: np.ndarray
    half_width: np.ndarray
    height: np.ndarray
    antenna_z: np.ndarray
    tall: np.ndarray

    @classmethod
    def from_vehicles(cls, vehicles) -> "VehicleArrays":
        n = len(vehicles)

        def col(fn, dtype=float):
            return np.fromiter((fn(v) for v in vehicles), dtype=dtype, count=n)

        return cls(
            ids=col(lambda v: v.id, np.int64),
            x=col(lambda v: v.center[0]),
            y=col(lambda v: v.center[1]),
            hx=col(lambda v: v.heading[0]),
            hy=col(lambda v: v.heading[1]),
            half_length=col(lambda v: v.length / 2),
            half_width=col(lambda v: v.width / 2),
            height=col(lambda v: v.height),
            antenna_z=col(lambda v: v.height + v.antenna_offset),
            tall=col(lambda v: v.is_tall, bool),
        )


@dataclass(frozen=True)
class ObstacleSample:
    vehicle_id: int
    d1: float
    clearance: float
    height: float


@dataclass(frozen=True)
class LinkProfile:
    tx_antenna: tuple[float, float, float]
    rx_antenna: tuple[float, float, float]
    distance: float
    obstacles: tuple[ObstacleSample, ...] = field(default_factory=tuple)

    @property
    def ground_distance(self) -> float:
        return math.hypot(
            self.rx_antenna[0] - self.tx_antenna[0],
            self.rx_antenna[1] - self.tx_antenna[1],
        )


def fresnel_radius(d1, d2, wavelength):
    """First Fresnel zone radius at distances ``d1``, ``d2`` from the two ends.

    Accepts scalars or arrays; scalar input must be strictly positive.
    """
    if np.ndim(d1) == 0 and np.ndim(d2) == 0 and np.ndim(wavelength) == 0:
        if not (d1 > 0 and d2 > 0 and wavelength > 0):
            raise ValueError(
                f"fresnel_radius needs positive inputs, got d1={d1!r}, d2={d2!r}, "
                f"wavelength={wavelength!r}"
            )
        return math.sqrt(wavelength * d1 * d2 / (d1 + d2))
    d1 = np.asarray(d1, dtype=float)
    d2 = np.asarray(d2, dtype=float)
    total = d1 + d2
    with np.errstate(invalid="ignore", divide="ignore"):
        r2 = np.where(total > 0, wavelength * d1 * d2 / total, 0.0)
    return np.sqrt(np.clip(r2, 0.0, None))


def _segment_box_approach(px, py, qx, qy, cx, cy, ux, uy, a, b):
    """Closest approach of segments P->Q to oriented rectangles.

    All arguments broadcast together. Rectangles are centred at (cx, cy) with
    unit heading (ux, uy), half-length ``a`` and half-width ``b``. Returns the
    separation and the segment parameter t in [0, 1] where it occurs; for
    intersecting pairs the separation is 0 and t is the middle of the clipped
    chord.
    """
    # rectangle-local frame
    rx, ry = px - cx, py - cy
    plx = rx * ux + ry * uy
    ply = -rx * uy + ry * ux
    rx, ry = qx - cx, qy - cy
    qlx = rx * ux + ry * uy
    qly = -rx * uy + ry * ux
    dx = qlx - plx
    dy = qly - ply

    # Liang-Barsky clip against the box
    t0 = np.zeros(np.broadcast_shapes(np.shape(plx), np.shape(qlx), np.shape(a), np.shape(b)))
    t1 = np.ones_like(t0)
    hit = np.ones(t0.shape, dtype=bool)
    with np.errstate(divide="ignore", invalid="ignore"):
        for p, q in ((-dx, plx + a), (dx, a - plx), (-dy, ply + b), (dy, b - ply)):
            p = np.broadcast_to(p, t0.shape)
            q = np.broadcast_to(q, t0.shape)
            parallel = p == 0
            hit &= ~(parallel & (q < 0))
            r = q / p
            t0 = np.where(~parallel & (p < 0), np.maximum(t0, r), t0)
            t1 = np.where(~parallel & (p > 0), np.minimum(t1, r), t1)
    hit &= t0 <= t1

    def point_box(lx, ly):
        return np.hypot(np.maximum(np.abs(lx) - a, 0.0), np.maximum(np.abs(ly) - b, 0.0))

    best = point_box(plx, ply)
    best_t = np.zeros_like(t0)
    d_q = point_box(qlx, qly)
    take = d_q < best
    best = np.where(take, d_q, best)
    best_t = np.where(take, 1.0, best_t)

    seg2 = dx * dx + dy * dy
    with np.errstate(divide="ignore", invalid="ignore"):
        for sx, sy in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
            kx, ky = sx * a, sy * b
            tc = ((kx - plx) * dx + (ky - ply) * dy) / seg2
            tc = np.clip(np.nan_to_num(tc), 0.0, 1.0)
            dc = np.hypot(plx + tc * dx - kx, ply + tc * dy - ky)
            take = dc < best
            best = np.where(take, dc, best)
            best_t = np.where(take, tc, best_t)

    sep = np.where(hit, 0.0, best)
    t = np.where(hit, 0.5 * (t0 + t1), best_t)
    return sep, t


def _obstruction_test(p, q, zp, zq, cand: VehicleArrays | None, idx, wavelength):
    """Vectorised inclusion test for links P->Q against candidate vehicles.

    ``p``, ``q``, ``zp``, ``zq`` have shape (M, 1) (or broadcastable); ``idx``
    selects candidate rows of ``cand`` with shape (K,) or (M, K). Returns
    ``(include, d1, clearance, ground_length)``.
    """
    px, py = p
    qx, qy = q
    sep, t = _segment_box_approach(
        px, py, qx, qy,
        cand.x[idx], cand.y[idx], cand.hx[idx], cand.hy[idx],
        cand.half_length[idx], cand.half_width[idx],
    )
    ground = np.hypot(qx - px, qy - py)
    d1 = t * ground
    r = FRESNEL_FRACTION * fresnel_radius(d1, ground - d1, wavelength)
    line_z = zp + (zq - zp) * t
    clearance = cand.height[idx] - line_z
    include = (t > 0) & (t < 1) & (sep <= r) & (clearance > -r)
    return include, d1, clearance, ground


def link_profile(tx: Vehicle, rx: Vehicle, scenario, wavelength: float) -> LinkProfile:
    """Obstruction profile of the link between the roof antennas of ``tx`` and ``rx``."""
    if tx.id == rx.id:
        raise ValueError("link_profile needs two distinct vehicles")
    arr = scenario.arrays
    tx_pos = scenario.index_of(tx.id)
    rx_pos = scenario.index_of(rx.id)
    others = np.flatnonzero((arr.ids != tx.id) & (arr.ids != rx.id))

    ta, ra = tx.antenna, rx.antenna
    distance = math.dist(ta, ra)
    if others.size == 0:
        return LinkProfile(ta, ra, distance, ())

    include, d1, clearance, _ = _obstruction_test(
        (arr.x[tx_pos], arr.y[tx_pos]), (arr.x[rx_pos], arr.y[rx_pos]),
        ta[2], ra[2], arr, others, wavelength,
    )
    sel = np.flatnonzero(include)
    sel = sel[np.argsort(d1[sel], kind="stable")]
    obstacles = tuple(
        ObstacleSample(
            vehicle_id=int(arr.ids[others[k]]),
            d1=float(d1[k]),
            clearance=float(clearance[k]),
            height=float(arr.height[others[k]]),
        )
        for k in sel
    )
    return LinkProfile(ta, ra, distance, obstacles)


def is_los(profile: LinkProfile) -> bool:
    return not profile.obstacles


class LinkBlock(NamedTuple):
    """Obstacle data for a batch of links sharing a transmitter.

    Obstacle columns are sorted by ``obs_d``; only the first ``n_obst[m]``
    columns of row ``m`` are meaningful.
    """

    tx: np.ndarray
    rx: np.ndarray
    ground: np.ndarray
    distance: np.ndarray
    tx_z: np.ndarray
    rx_z: np.ndarray
    n_obst: np.ndarray
    obs_d: np.ndarray
    obs_z: np.ndarray
    obs_idx: np.ndarray


def iter_link_blocks(scenario, wavelength: float, max_distance: float) -> Iterator[LinkBlock]:
    """Yield obstruction data for every unordered pair within ``max_distance``.

    Pairs are reported once with ``tx < rx`` in scenario index space. The
    antenna-to-antenna distance is used for the range cut.
    """
    arr = scenario.arrays
    n = arr.x.size
    if n < 2:
        return
    order = np.argsort(arr.x, kind="stable")
    xs = arr.x[order]
    reach = float(np.max(np.hypot(arr.half_length, arr.half_width)))
    corridor = FRESNEL_FRACTION * 0.5 * math.sqrt(wavelength * max_distance)
    margin = reach + corridor

    for a in range(n):
        i = order[a]
        hi = np.searchsorted(xs, xs[a] + max_distance, side="right")
        lo = np.searchsorted(xs, xs[a] - max_distance, side="left")
        partners = order[lo:hi]
        partners = partners[partners > i]
        if partners.size == 0:
            continue
        dist = np.sqrt(
            (arr.x[partners] - arr.x[i]) ** 2
            + (arr.y[partners] - arr.y[i]) ** 2
            + (arr.antenna_z[partners] - arr.antenna_z[i]) ** 2
        )
        partners = partners[dist <= max_distance]
        dist = dist[dist <= max_distance]
        if partners.size == 0:
            continue

        x_lo = min(arr.x[i], arr.x[partners].min()) - margin
        x_hi = max(arr.x[i], arr.x[partners].max()) + margin
        cand = order[np.searchsorted(xs, x_lo, "left"):np.searchsorted(xs, x_hi, "right")]
        cand = cand[cand != i]

        p = (arr.x[i], arr.y[i])
        q = (arr.x[partners][:, None], arr.y[partners][:, None])
        zq = arr.antenna_z[partners][:, None]
        include, d1, _, ground = _obstruction_test(
            p, q, arr.antenna_z[i], zq, arr, cand[None, :], wavelength
        )
        include &= cand[None, :] != partners[:, None]

        n_obst = include.sum(axis=1)
        kmax = int(n_obst.max()) if n_obst.size else 0
        if kmax:
            key = np.where(include, d1, np.inf)
            cols = np.argsort(key, axis=1, kind="stable")[:, :kmax]
            obs_d = np.take_along_axis(d1, cols, axis=1)
            obs_idx = cand[cols]
            obs_z = arr.height[obs_idx]
        else:
            obs_d = np.zeros((partners.size, 0))
            obs_idx = np.zeros((partners.size, 0), dtype=np.int64)
            obs_z = obs_d
        yield LinkBlock(
            tx=np.full(partners.size, i, dtype=np.int64),
            rx=partners,
            ground=ground[:, 0],
            distance=dist,
            tx_z=np.full(partners.size, arr.antenna_z[i]),
            rx_z=arr.antenna_z[partners],
            n_obst=n_obst,
            obs_d=obs_d,
            obs_z=obs_z,
            obs_idx=obs_idx,
        )


def obstacle_count_matrix(scenario, wavelength: float, max_distance: float) -> np.ndarray:
    """Symmetric matrix of obstacle counts; -1 marks pairs beyond range."""
    n = len(scenario.vehicles)
    counts = np.full((n, n), -1, dtype=np.int64)
    for blk in iter_link_blocks(scenario, wavelength, max_distance):
        counts[blk.tx, blk.rx] = blk.n_obst
        counts[blk.rx, blk.tx] = blk.n_obst
    return counts


def per_vehicle_los_ratio(scenario, range_m: float, wavelength: float | None = None) -> dict[int, float]:
    """Fraction of in-range vehicles each vehicle sees in line of sight.

    Vehicles with nobody within ``range_m`` are left out.
    """
    if not range_m > 0:
        raise ValueError("range must be positive")
    if wavelength is None:
        wavelength = SPEED_OF_LIGHT / 5.9e9
    counts = obstacle_count_matrix(scenario, wavelength, range_m)
    in_range = counts >= 0
    los = counts == 0
    total = in_range.sum(axis=1)
    clear = los.sum(axis=1)
    ids = scenario.arrays.ids
    return {int(ids[k]): clear[k] / total[k] for k in np.flatnonzero(total)}
