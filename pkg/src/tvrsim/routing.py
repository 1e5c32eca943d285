"""Neighbor tables and greedy geographic routing under three relay rules.

Routing works on a static snapshot. Each hop hands the packet to a neighbor
strictly closer to the destination, so routes are loop free by
construction. When the destination is itself a neighbor the packet goes
there directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .channel import ChannelParams, LinkBudget, LinkMatrix, link_matrix
from .geometry import VehicleClass

__all__ = [
    "DEFAULT_HOP_CAP",
    "DEFAULT_XMAX",
    "NeighborEntry",
    "NeighborTable",
    "Route",
    "RoutingFailure",
    "LocalMaximum",
    "HopCapExceeded",
    "AllStrategiesFailed",
    "FarthestNeighbor",
    "MostNewNeighbors",
    "TVR",
    "parse_strategy",
    "build_neighbor_table",
    "forward_set",
    "select_farthest",
    "select_most_new",
    "select_tvr",
    "build_route",
    "BestRoutes",
    "best_route_hops",
]

DEFAULT_HOP_CAP = 100
DEFAULT_XMAX = 50.0


class RoutingFailure(Exception):
    """Greedy forwarding gave up; ``path`` holds the vehicle ids reached."""

    def __init__(self, message, path=()):
        super().__init__(message)
        self.path = tuple(path)


class LocalMaximum(RoutingFailure):
    pass


class HopCapExceeded(RoutingFailure):
    pass


class AllStrategiesFailed(RoutingFailure):
    pass


class NeighborEntry(NamedTuple):
    neighbor_id: int
    distance: float
    received_power: float
    los: bool
    vclass: VehicleClass


class NeighborTable:
    """Who hears whom above the sensitivity threshold, without shadowing.

    Stored as dense index-space matrices aligned with ``scenario.vehicles``.
    """

    def __init__(self, links: LinkMatrix, params: ChannelParams):
        needed = params.link_budget
        if links.max_distance * (1 + 1e-9) < _free_space_reach(params):
            raise ValueError(
                f"link matrix covers {links.max_distance:.0f} m but a {needed:.1f} dB "
                "budget needs more"
            )
        self.links = links
        self.params = params
        self.scenario = links.scenario
        arr = self.scenario.arrays
        self.ids = arr.ids
        self.xy = np.column_stack([arr.x, arr.y])
        self.tall = arr.tall
        self.received_power = links.received_power(params)
        self.adjacency = self.received_power >= params.sensitivity
        np.fill_diagonal(self.adjacency, False)
        self._order_key = np.argsort(np.argsort(self.ids, kind="stable"), kind="stable")

    def __len__(self):
        return self.ids.size

    def index(self, vehicle_id: int) -> int:
        return self.scenario.index_of(vehicle_id)

    def neighbors(self, vehicle_id: int) -> list[NeighborEntry]:
        i = self.index(vehicle_id)
        out = []
        for j in np.flatnonzero(self.adjacency[i]):
            out.append(NeighborEntry(
                neighbor_id=int(self.ids[j]),
                distance=float(self.links.distance[i, j]),
                received_power=float(self.received_power[i, j]),
                los=bool(self.links.n_obstacles[i, j] == 0),
                vclass=VehicleClass.TALL if self.tall[j] else VehicleClass.SHORT,
            ))
        return out

    def are_neighbors(self, a: int, b: int) -> bool:
        return bool(self.adjacency[self.index(a), self.index(b)])

    def distances_to(self, idx: int) -> np.ndarray:
        return np.hypot(self.xy[:, 0] - self.xy[idx, 0], self.xy[:, 1] - self.xy[idx, 1])

    def budget(self, i: int, j: int) -> LinkBudget:
        return self.links.budget(i, j, self.params)

    # index-space helpers used by the selectors

    def forward_mask(self, tx: int, dist_to_dest: np.ndarray) -> np.ndarray:
        return self.adjacency[tx] & (dist_to_dest < dist_to_dest[tx])

    def closest_to(self, candidates: np.ndarray, dist_to_dest: np.ndarray) -> int:
        """Candidate nearest the destination; lower vehicle id on ties."""
        pick = np.lexsort((self._order_key[candidates], dist_to_dest[candidates]))[0]
        return int(candidates[pick])


def _free_space_reach(params: ChannelParams) -> float:
    from .channel import free_space_range

    return free_space_range(params.link_budget, params.frequency)


def build_neighbor_table(scenario, params: ChannelParams, links: LinkMatrix | None = None) -> NeighborTable:
    """Neighbor relation under the deterministic channel.

    ``links`` may be a LinkMatrix computed for an equal or larger power, so
    one geometric pass can serve a power sweep.
    """
    if links is None:
        links = link_matrix(scenario, params)
    elif links.scenario is not scenario:
        raise ValueError("link matrix belongs to a different scenario")
    return NeighborTable(links, params)


# --- relay rules -----------------------------------------------------------
#
# Each rule maps (table, tx index, destination distances) to the chosen
# index, or None when tx has no neighbor closer to the destination.


@dataclass(frozen=True)
class FarthestNeighbor:
    name = "farthest"

    def select(self, table: NeighborTable, tx: int, dd: np.ndarray):
        cands = np.flatnonzero(table.forward_mask(tx, dd))
        if cands.size == 0:
            return None
        return table.closest_to(cands, dd)


@dataclass(frozen=True)
class MostNewNeighbors:
    name = "most_new"

    def select(self, table: NeighborTable, tx: int, dd: np.ndarray):
        fwd_tx = table.forward_mask(tx, dd)
        cands = np.flatnonzero(fwd_tx)
        if cands.size == 0:
            return None
        fwd_c = table.adjacency[cands] & (dd[None, :] < dd[cands, None])
        new = (fwd_c & ~fwd_tx[None, :]).sum(axis=1)
        pick = np.lexsort((table._order_key[cands], dd[cands], -new))[0]
        return int(cands[pick])


@dataclass(frozen=True)
class TVR:
    """Prefer the farthest tall forward neighbor unless the farthest short
    one lies more than ``x_max`` meters further from the transmitter."""

    x_max: float = DEFAULT_XMAX
    name = "tvr"

    def __post_init__(self):
        if not self.x_max >= 0:
            raise ValueError(f"x_max must be non-negative, got {self.x_max!r}")

    def farthest_by_class(self, table: NeighborTable, tx: int, dd: np.ndarray):
        fwd = table.forward_mask(tx, dd)
        tall = np.flatnonzero(fwd & table.tall)
        short = np.flatnonzero(fwd & ~table.tall)
        far_tall = table.closest_to(tall, dd) if tall.size else None
        far_short = table.closest_to(short, dd) if short.size else None
        return far_tall, far_short

    def select(self, table: NeighborTable, tx: int, dd: np.ndarray):
        far_tall, far_short = self.farthest_by_class(table, tx, dd)
        if far_tall is None or far_short is None:
            return far_short if far_tall is None else far_tall
        to_tall = math.dist(table.xy[tx], table.xy[far_tall])
        to_short = math.dist(table.xy[tx], table.xy[far_short])
        return far_tall if to_short - to_tall <= self.x_max else far_short


def parse_strategy(text: str, x_max: float = DEFAULT_XMAX):
    key = text.strip().lower().replace("-", "_")
    if key in ("farthest", "farthest_neighbor"):
        return FarthestNeighbor()
    if key in ("most_new", "mostnew", "most_new_neighbors"):
        return MostNewNeighbors()
    if key == "tvr":
        return TVR(x_max)
    raise ValueError(f"unknown strategy {text!r}")


# --- id-level selector API ---------------------------------------------------


def forward_set(tx: int, destination: int, table: NeighborTable) -> set[int]:
    """Neighbors of ``tx`` strictly closer to ``destination`` than ``tx``."""
    dd = table.distances_to(table.index(destination))
    return {int(table.ids[j]) for j in np.flatnonzero(table.forward_mask(table.index(tx), dd))}


def _select_ids(rule, tx, destination, table):
    dd = table.distances_to(table.index(destination))
    pick = rule.select(table, table.index(tx), dd)
    return None if pick is None else int(table.ids[pick])


def select_farthest(tx: int, destination: int, table: NeighborTable):
    return _select_ids(FarthestNeighbor(), tx, destination, table)


def select_most_new(tx: int, destination: int, table: NeighborTable):
    return _select_ids(MostNewNeighbors(), tx, destination, table)


def select_tvr(tx: int, destination: int, table: NeighborTable, x_max: float = DEFAULT_XMAX):
    return _select_ids(TVR(x_max), tx, destination, table)


# --- routes ------------------------------------------------------------------


@dataclass(frozen=True)
class Route:
    source_id: int
    destination_id: int
    hops: tuple[int, ...]
    links: tuple[LinkBudget, ...]
    strategy: str

    @property
    def n_hops(self) -> int:
        return len(self.hops) - 1

    @property
    def relays(self) -> tuple[int, ...]:
        return self.hops[1:-1]


def route_indices(table: NeighborTable, src: int, dst: int, rule, hop_cap=DEFAULT_HOP_CAP,
                  first_hop: int | None = None, dd: np.ndarray | None = None) -> list[int]:
    """Index-space core of :func:`build_route`."""
    if dd is None:
        dd = table.distances_to(dst)
    path = [src]
    cur = src
    while True:
        if len(path) - 1 >= hop_cap:
            raise HopCapExceeded(f"more than {hop_cap} hops", table.ids[path])
        if table.adjacency[cur, dst]:
            path.append(dst)
            break
        if first_hop is not None and cur == src:
            if not (table.adjacency[src, first_hop] and dd[first_hop] < dd[src]):
                raise ValueError("forced first hop is not a forward neighbor of the source")
            nxt = first_hop
        else:
            nxt = rule.select(table, cur, dd)
        if nxt is None:
            raise LocalMaximum(f"no forward neighbor at vehicle {table.ids[cur]}", table.ids[path])
        path.append(nxt)
        cur = nxt
    return path


def build_route(source: int, destination: int, table: NeighborTable, strategy,
                hop_cap: int = DEFAULT_HOP_CAP, first_hop: int | None = None) -> Route:
    """Greedy route from ``source`` to ``destination`` (vehicle ids).

    Raises LocalMaximum when no neighbor makes progress and HopCapExceeded
    when the route would exceed ``hop_cap`` hops. ``first_hop`` forces the
    initial relay, after which ``strategy`` takes over.
    """
    if source == destination:
        raise ValueError("source and destination must differ")
    src, dst = table.index(source), table.index(destination)
    forced = None if first_hop is None else table.index(first_hop)
    path = route_indices(table, src, dst, strategy, hop_cap, forced)
    return Route(
        source_id=source,
        destination_id=destination,
        hops=tuple(int(table.ids[k]) for k in path),
        links=tuple(table.budget(a, b) for a, b in zip(path, path[1:])),
        strategy=strategy.name,
    )


@dataclass(frozen=True)
class BestRoutes:
    hops: dict[str, int | None]
    minimum: int
    best: frozenset[str]


def best_route_hops(source: int, destination: int, table: NeighborTable, strategies,
                    hop_cap: int = DEFAULT_HOP_CAP) -> BestRoutes:
    """Hop count per strategy on one pair and which strategies attain the minimum."""
    src, dst = table.index(source), table.index(destination)
    return _best_route_indices(table, src, dst, strategies, hop_cap)


def _best_route_indices(table, src, dst, strategies, hop_cap=DEFAULT_HOP_CAP, paths=None):
    dd = table.distances_to(dst)
    hops = {}
    for rule in strategies:
        try:
            path = route_indices(table, src, dst, rule, hop_cap, dd=dd)
        except RoutingFailure:
            hops[rule.name] = None
            continue
        hops[rule.name] = len(path) - 1
        if paths is not None:
            paths[rule.name] = path
    ok = [h for h in hops.values() if h is not None]
    if not ok:
        raise AllStrategiesFailed(
            f"no strategy reached {table.ids[dst]} from {table.ids[src]}", (int(table.ids[src]),)
        )
    minimum = min(ok)
    return BestRoutes(hops, minimum, frozenset(k for k, h in hops.items() if h == minimum))
