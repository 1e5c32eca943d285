"""System-level metrics over snapshots: relay availability, PDR curves,
strategy comparison, obstruction histograms and relay usage."""

from __future__ import annotations

import csv
import enum
import io
import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelParams, link_matrix, link_pdr
from .calibration import sample_pairs
from .routing import (
    DEFAULT_HOP_CAP,
    AllStrategiesFailed,
    Route,
    _best_route_indices,
    build_neighbor_table,
)

__all__ = [
    "REPORTING_FLOOR",
    "Pairing",
    "PdrCurve",
    "ComparisonRow",
    "ComparisonReport",
    "ObstructionHistogram",
    "tall_relay_prob_analytic",
    "tall_relay_counts",
    "tall_relay_prob_empirical",
    "pdr_vs_distance",
    "effective_range",
    "compare_strategies",
    "chosen_link_obstructions",
    "relay_usage",
]

REPORTING_FLOOR = 40


def _csv(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


# --- tall relay availability ----------------------------------------------------


def tall_relay_prob_analytic(gamma: float, lambda_s: float, x_max: float) -> float:
    """Chance of at least one tall vehicle in a window of length ``x_max``
    when vehicles form a Poisson stream of rate ``lambda_s`` per meter and
    each is tall with probability ``gamma``."""
    if min(gamma, lambda_s, x_max) < 0:
        raise ValueError("arguments must be non-negative")
    return -math.expm1(-gamma * lambda_s * x_max)


def tall_relay_counts(scenario, R: float, x_max: float) -> tuple[int, int]:
    """(vehicles with a tall vehicle ahead in [R - x_max, R], vehicles tested).

    Only vehicles whose whole window lies on the road are tested, so the
    road end does not bias the count.
    """
    if not 0 <= x_max <= R:
        raise ValueError("need 0 <= x_max <= R")
    arr = scenario.arrays
    if arr.x.size == 0:
        return 0, 0
    start = 0.0 if scenario.road is not None else float(arr.x.min())
    end = start + scenario.road_length
    tested = arr.x + R <= end
    tall_x = np.sort(arr.x[arr.tall])
    lo = np.searchsorted(tall_x, arr.x + R - x_max, side="left")
    hi = np.searchsorted(tall_x, arr.x + R, side="right")
    hit = (hi > lo) & tested
    return int(hit.sum()), int(tested.sum())


def tall_relay_prob_empirical(scenarios, R: float, x_max: float) -> float:
    hits = total = 0
    for s in scenarios:
        h, t = tall_relay_counts(s, R, x_max)
        hits += h
        total += t
    return hits / total if total else 0.0


# --- PDR versus distance --------------------------------------------------------


class Pairing(enum.Enum):
    CAR_CAR = "car_car"
    VAN_X = "van_x"


@dataclass(frozen=True)
class PdrCurve:
    bin_width: float
    centers: np.ndarray
    pdr: np.ndarray
    n_samples: np.ndarray
    floor: int = REPORTING_FLOOR

    @property
    def flagged(self) -> np.ndarray:
        """Bins with fewer samples than the reporting floor."""
        return self.n_samples < self.floor

    @property
    def bins(self):
        return list(zip(self.centers.tolist(), self.pdr.tolist(), self.n_samples.tolist()))

    def to_csv(self) -> str:
        return _csv(
            ["bin_center_m", "pdr", "n_samples", "flagged"],
            [[repr(float(c)), repr(float(p)), int(n), int(f)]
             for c, p, n, f in zip(self.centers, self.pdr, self.n_samples, self.flagged)],
        )


def pdr_vs_distance(scenarios, params: ChannelParams, pairing: Pairing, bin_width: float = 20.0,
                    nlos_only: bool = False, floor: int = REPORTING_FLOOR, links=None) -> PdrCurve:
    """Mean link delivery probability per distance bin over all vehicle pairs.

    Van-X pairs have at least one tall end, car-car pairs none. With zero
    shadowing each link contributes 0 or 1.
    """
    pairing = Pairing(pairing)
    # links more than 3 sigma below the threshold deliver < 0.14% and are skipped
    margin = 3.0 * params.shadowing_sigma
    sums = Counter()
    counts = Counter()
    for k, scenario in enumerate(scenarios):
        lm = links[k] if links is not None else link_matrix(scenario, params, margin_db=margin)
        tall = scenario.arrays.tall
        iu, ju = np.triu_indices(len(scenario), k=1)
        keep = lm.evaluated[iu, ju]
        any_tall = tall[iu] | tall[ju]
        keep &= any_tall if pairing is Pairing.VAN_X else ~any_tall
        if nlos_only:
            keep &= lm.n_obstacles[iu, ju] > 0
        iu, ju = iu[keep], ju[keep]
        power = lm.received_power(params)[iu, ju]
        pdr = np.atleast_1d(link_pdr(power, params))
        bins = np.floor(lm.distance[iu, ju] / bin_width).astype(np.int64)
        for b, total, n in zip(*_group_sum(bins, pdr)):
            sums[b] += total
            counts[b] += n
    keys = sorted(counts)
    centers = np.array([(b + 0.5) * bin_width for b in keys])
    n = np.array([counts[b] for b in keys], dtype=np.int64)
    pdr = np.array([sums[b] / counts[b] for b in keys])
    return PdrCurve(bin_width, centers, pdr, n, floor)


def _group_sum(keys, values):
    if keys.size == 0:
        return [], [], []
    uniq, inv = np.unique(keys, return_inverse=True)
    return uniq.tolist(), np.bincount(inv, weights=values).tolist(), np.bincount(inv).tolist()


def effective_range(curve: PdrCurve, target_pdr: float, include_flagged: bool = False):
    """Largest distance at which the piecewise-linear curve still meets
    ``target_pdr``; None if it never does."""
    if not 0 < target_pdr <= 1:
        raise ValueError("target_pdr must lie in (0, 1]")
    keep = np.ones(curve.centers.size, dtype=bool) if include_flagged else ~curve.flagged
    x, y = curve.centers[keep], curve.pdr[keep]
    meets = np.flatnonzero(y >= target_pdr)
    if meets.size == 0:
        return None
    k = meets[-1]
    if k == x.size - 1:
        return float(x[k])
    # y[k] >= target > y[k + 1]
    frac = (y[k] - target_pdr) / (y[k] - y[k + 1])
    return float(x[k] + frac * (x[k + 1] - x[k]))


# --- strategy comparison --------------------------------------------------------


@dataclass(frozen=True)
class ComparisonRow:
    group: str
    power: float
    strategy: str
    n_pairs: int
    n_compared: int
    n_best: int
    n_failed: int
    mean_hops: float

    @property
    def best_pct(self) -> float:
        return 100.0 * self.n_best / self.n_compared if self.n_compared else 0.0

    @property
    def failure_rate(self) -> float:
        return self.n_failed / self.n_pairs if self.n_pairs else 0.0


@dataclass
class ComparisonReport:
    rows: list[ComparisonRow] = field(default_factory=list)
    routes: dict = field(default_factory=dict)
    n_all_failed: int = 0

    def strategies(self):
        return list(dict.fromkeys(r.strategy for r in self.rows))

    def groups(self):
        return list(dict.fromkeys(r.group for r in self.rows))

    def summary(self, group: str | None = None) -> dict[str, dict[str, float]]:
        """Per strategy: mean and across-power std of the best-route %, mean
        hops and failure rate."""
        out = {}
        for name in self.strategies():
            rows = [r for r in self.rows if r.strategy == name and (group is None or r.group == group)]
            if not rows:
                continue
            pct = np.array([r.best_pct for r in rows])
            out[name] = {
                "best_pct": float(pct.mean()),
                "best_pct_std": float(pct.std()),
                "mean_hops": float(np.nanmean([r.mean_hops for r in rows])),
                "failure_rate": float(np.mean([r.failure_rate for r in rows])),
            }
        return out

    def extend(self, other: "ComparisonReport") -> "ComparisonReport":
        self.rows.extend(other.rows)
        for key, routes in other.routes.items():
            self.routes.setdefault(key, []).extend(routes)
        self.n_all_failed += other.n_all_failed
        return self

    def to_csv(self) -> str:
        header = ["group", "power_dbm", "strategy", "pairs", "compared", "best_routes", "best_pct",
                  "mean_hops", "failures", "failure_rate"]
        rows = [[r.group, repr(float(r.power)), r.strategy, r.n_pairs, r.n_compared, r.n_best,
                 f"{r.best_pct:.4f}", f"{r.mean_hops:.4f}", r.n_failed, f"{r.failure_rate:.6f}"]
                for r in self.rows]
        return _csv(header, rows)


def compare_strategies(scenarios, n_pairs: int, powers, strategies, params: ChannelParams | None = None,
                       seed: int = 0, group: str = "", keep_routes: bool = False,
                       hop_cap: int = DEFAULT_HOP_CAP) -> ComparisonReport:
    """Run every strategy on the same ``n_pairs`` non-neighbor pairs per
    scenario and power.

    A strategy's route is best when no other strategy needs fewer hops on
    that pair; percentages are over pairs where at least one strategy got
    through. With ``keep_routes`` the Route objects are kept in
    ``report.routes[(power, strategy, scenario_index)]``.
    """
    strategies = list(strategies)
    if not strategies:
        raise ValueError("need at least one strategy")
    params = params or ChannelParams()
    powers = list(powers)
    links = [link_matrix(s, params.with_power(max(powers))) for s in scenarios]
    report = ComparisonReport()
    for pk, power in enumerate(powers):
        p = params.with_power(power)
        best = Counter()
        failed = Counter()
        hop_sum = Counter()
        compared = total = 0
        for k, scenario in enumerate(scenarios):
            table = build_neighbor_table(scenario, p, links[k])
            rng = np.random.default_rng([seed, pk, k])
            for src, dst in sample_pairs(table, n_pairs, rng):
                total += 1
                paths = {} if keep_routes else None
                try:
                    res = _best_route_indices(table, src, dst, strategies, hop_cap, paths)
                except AllStrategiesFailed:
                    report.n_all_failed += 1
                    for rule in strategies:
                        failed[rule.name] += 1
                    continue
                compared += 1
                for name, hops in res.hops.items():
                    if hops is None:
                        failed[name] += 1
                    else:
                        hop_sum[name] += hops
                for name in res.best:
                    best[name] += 1
                if keep_routes:
                    for name, path in paths.items():
                        report.routes.setdefault((power, name, k), []).append(_route(table, path, name))
        for rule in strategies:
            ok = total - failed[rule.name]
            report.rows.append(ComparisonRow(
                group=group, power=float(power), strategy=rule.name, n_pairs=total,
                n_compared=compared, n_best=best[rule.name], n_failed=failed[rule.name],
                mean_hops=hop_sum[rule.name] / ok if ok else math.nan,
            ))
    return report


def _route(table, path, name) -> Route:
    return Route(
        source_id=int(table.ids[path[0]]),
        destination_id=int(table.ids[path[-1]]),
        hops=tuple(int(table.ids[k]) for k in path),
        links=tuple(table.budget(a, b) for a, b in zip(path, path[1:])),
        strategy=name,
    )


# --- link properties of chosen routes -------------------------------------------


@dataclass(frozen=True)
class ObstructionHistogram:
    selected: np.ndarray
    all_links: np.ndarray

    @staticmethod
    def _share(hist):
        return float(hist[0] / hist.sum()) if hist.sum() else math.nan

    @property
    def selected_los_share(self) -> float:
        return self._share(self.selected)

    @property
    def all_links_los_share(self) -> float:
        return self._share(self.all_links)

    def to_csv(self) -> str:
        width = max(self.selected.size, self.all_links.size)
        sel = np.pad(self.selected, (0, width - self.selected.size))
        alls = np.pad(self.all_links, (0, width - self.all_links.size))
        return _csv(["n_obstacles", "selected_links", "all_links"],
                    [[k, int(a), int(b)] for k, (a, b) in enumerate(zip(sel, alls))])


def chosen_link_obstructions(routes, table) -> ObstructionHistogram:
    """Obstacle counts on every hop of ``routes`` and on every link of ``table``
    above the sensitivity threshold (each unordered link once)."""
    selected = Counter(b.n_obstacles for r in routes for b in r.links)
    iu, ju = np.triu_indices(len(table), k=1)
    up = table.adjacency[iu, ju]
    all_counts = table.links.n_obstacles[iu[up], ju[up]]
    size = max([0, *selected]) + 1
    sel = np.zeros(size, dtype=np.int64)
    for k, v in selected.items():
        sel[k] = v
    alls = np.bincount(all_counts, minlength=1).astype(np.int64) if all_counts.size else np.zeros(1, np.int64)
    return ObstructionHistogram(sel, alls)


def relay_usage(routes, scenario) -> float:
    """Percentage of the scenario's vehicles that relay for at least one route."""
    routes = list(routes)
    if not routes:
        raise ValueError("need at least one route")
    if len(scenario) == 0:
        return 0.0
    relays = set()
    for r in routes:
        relays.update(r.relays)
    return 100.0 * len(relays) / len(scenario)
