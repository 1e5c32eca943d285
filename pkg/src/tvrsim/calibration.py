"""Calibration of the TVR distance threshold ``x_max``.

For source/destination pairs whose source has both a farthest tall and a
farthest short forward neighbor, the route through each is completed with
farthest-neighbor forwarding. Whichever first hop gives strictly fewer hops
labels the distance difference ``dist(Tx, far_short) - dist(Tx, far_tall)``.
"""

from __future__ import annotations

import csv
import enum
import io
import logging
import math
from dataclasses import dataclass

import numpy as np

from .channel import ChannelParams, link_matrix
from .routing import (
    DEFAULT_HOP_CAP,
    TVR,
    FarthestNeighbor,
    RoutingFailure,
    build_neighbor_table,
    route_indices,
)
from .stats import bisect, norm_cdf, q_function

__all__ = [
    "Label",
    "NormalFit",
    "LabeledDifferenceSample",
    "InsufficientSamples",
    "collect_samples",
    "sample_pairs",
    "fit_normal",
    "xmax_gap",
    "tall_preferred",
    "solve_xmax",
    "XmaxResult",
    "average_xmax",
    "samples_to_csv",
]

log = logging.getLogger(__name__)


class Label(enum.Enum):
    TALL_BEST = "tall_best"
    SHORT_BEST = "short_best"


class InsufficientSamples(ValueError):
    pass


@dataclass(frozen=True)
class NormalFit:
    mu: float
    sigma: float
    n_samples: int

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("NormalFit needs a positive sigma")
        if self.n_samples < 2:
            raise ValueError("NormalFit needs at least two samples")


@dataclass(frozen=True)
class LabeledDifferenceSample:
    value: float
    label: Label
    power: float


def sample_pairs(table, n_pairs: int, rng) -> list[tuple[int, int]]:
    """Uniform ordered index pairs that are not direct neighbors.

    Returns fewer than ``n_pairs`` only if no such pair exists.
    """
    n = len(table)
    candidates = ~table.adjacency
    np.fill_diagonal(candidates, False)
    flat = np.flatnonzero(candidates)
    if flat.size == 0:
        return []
    picks = rng.choice(flat, size=n_pairs, replace=True)
    return [(int(k // n), int(k % n)) for k in picks]


def _label_pair(table, src, dst, rule, hop_cap):
    dd = table.distances_to(dst)
    far_tall, far_short = TVR().farthest_by_class(table, src, dd)
    if far_tall is None or far_short is None:
        return None
    hops = []
    for first in (far_tall, far_short):
        try:
            hops.append(len(route_indices(table, src, dst, rule, hop_cap, first_hop=first, dd=dd)) - 1)
        except RoutingFailure:
            hops.append(math.inf)
    tall_hops, short_hops = hops
    if tall_hops == short_hops:
        return None
    value = math.dist(table.xy[src], table.xy[far_short]) - math.dist(table.xy[src], table.xy[far_tall])
    return value, Label.TALL_BEST if tall_hops < short_hops else Label.SHORT_BEST


def collect_samples(scenarios, params: ChannelParams, n_pairs: int, seed: int,
                    links=None, hop_cap: int = DEFAULT_HOP_CAP) -> list[LabeledDifferenceSample]:
    """Labeled distance differences from ``n_pairs`` sampled pairs per scenario.

    Ties in hop count and pairs where both completions fail are dropped.
    ``links`` optionally supplies one precomputed LinkMatrix per scenario.
    """
    if not scenarios:
        raise ValueError("need at least one scenario")
    rule = FarthestNeighbor()
    out = []
    for k, scenario in enumerate(scenarios):
        lm = links[k] if links is not None else None
        table = build_neighbor_table(scenario, params, lm)
        rng = np.random.default_rng([seed, k])
        for src, dst in sample_pairs(table, n_pairs, rng):
            labeled = _label_pair(table, src, dst, rule, hop_cap)
            if labeled is not None:
                out.append(LabeledDifferenceSample(labeled[0], labeled[1], params.tx_power))
    return out


def fit_normal(samples) -> NormalFit:
    """Sample mean and unbiased standard deviation."""
    values = np.array([s.value if isinstance(s, LabeledDifferenceSample) else s for s in samples],
                      dtype=float)
    if values.size < 2:
        raise InsufficientSamples(f"need at least two samples, got {values.size}")
    sigma = float(values.std(ddof=1))
    if not sigma > 0:
        raise InsufficientSamples("samples are constant; a normal fit needs spread")
    return NormalFit(float(values.mean()), sigma, int(values.size))


def xmax_gap(x: float, fit_t: NormalFit, fit_s: NormalFit) -> float:
    """``Phi((x - mu_s) / sigma_s) - Q((x - mu_t) / sigma_t)``; zero at x_max."""
    zs = (x - fit_s.mu) / fit_s.sigma
    zt = (x - fit_t.mu) / fit_t.sigma
    # same value as Phi(zt) - Q(zs); pick the form whose terms sit in the
    # lower tail so nothing cancels near 1
    if zs > zt:
        return norm_cdf(zt) - q_function(zs)
    return norm_cdf(zs) - q_function(zt)


def tall_preferred(x: float, fit_t: NormalFit, fit_s: NormalFit) -> bool:
    """Indicator that the gap function is still negative at ``x``."""
    return xmax_gap(x, fit_t, fit_s) < 0


def solve_xmax(fit_t: NormalFit, fit_s: NormalFit) -> float:
    """Root of the normal-fit threshold equation by bisection.

    The gap function is increasing, so the root is unique. It equals the
    sigma-weighted mean ``(mu_s sigma_t + mu_t sigma_s) / (sigma_s + sigma_t)``,
    which the tests use as a cross-check. Raises
    NoRootError if the bracket ``[min mu - 10 max sigma, max mu + 10 max
    sigma]`` shows no sign change.
    """
    spread = 10.0 * max(fit_t.sigma, fit_s.sigma)
    lo = min(fit_t.mu, fit_s.mu) - spread
    hi = max(fit_t.mu, fit_s.mu) + spread
    # The gap is Phi(zs) - Phi(-zt), so its sign is the sign of zs + zt.
    # Bisecting on that sign avoids the tails, where both probabilities
    # round to 0 or 1 and the gap itself reads as exactly zero.
    def gap_sign(x):
        return (x - fit_s.mu) / fit_s.sigma + (x - fit_t.mu) / fit_t.sigma

    # x resolution scaled to the steepest fit keeps |gap| under 1e-12
    xtol = 1e-13 * min(fit_t.sigma, fit_s.sigma)
    root = bisect(gap_sign, lo, hi, xtol=xtol)
    residual = (1.0 - q_function((root - fit_s.mu) / fit_s.sigma)) - q_function((root - fit_t.mu) / fit_t.sigma)
    if abs(residual) > 1e-9:
        raise ArithmeticError(f"x_max residual {residual:.3g} exceeds 1e-9")
    return root


@dataclass(frozen=True)
class XmaxResult:
    x_max: float
    per_power: dict[float, float]
    skipped: tuple[float, ...]
    samples: tuple[LabeledDifferenceSample, ...]


def average_xmax(scenarios, powers, params: ChannelParams | None = None, n_pairs: int = 500,
                 seed: int = 0) -> XmaxResult:
    """Average over transmit powers of the mean tall-best distance difference.

    Each power gets equal weight. Powers without any tall-best sample are
    skipped and listed in the result; if every power is skipped
    InsufficientSamples is raised.
    """
    powers = list(powers)
    if not powers:
        raise ValueError("need at least one transmit power")
    params = params or ChannelParams()
    top = params.with_power(max(powers))
    links = [link_matrix(s, top) for s in scenarios]

    per_power, skipped, everything = {}, [], []
    for k, power in enumerate(powers):
        samples = collect_samples(scenarios, params.with_power(power), n_pairs, seed=seed * 1000 + k,
                                  links=links)
        everything.extend(samples)
        tall = [s.value for s in samples if s.label is Label.TALL_BEST]
        if not tall:
            log.warning("no tall-best samples at %s dBm; power skipped", power)
            skipped.append(power)
            continue
        per_power[power] = float(np.mean(tall))
    if not per_power:
        raise InsufficientSamples("no power produced a tall-best sample")
    x_max = float(np.mean(list(per_power.values())))
    return XmaxResult(x_max, per_power, tuple(skipped), tuple(everything))


def samples_to_csv(samples) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["power_dbm", "value_m", "label"])
    for s in samples:
        writer.writerow([repr(float(s.power)), repr(float(s.value)), s.label.value])
    return buf.getvalue()
