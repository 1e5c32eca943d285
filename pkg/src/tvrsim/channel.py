"""Link budget: free space plus multiple knife-edge loss from vehicles."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import ndtr

from .geometry import SPEED_OF_LIGHT, LinkProfile, iter_link_blocks, link_profile
from .stats import q_function

__all__ = [
    "ChannelParams",
    "LinkBudget",
    "LinkMatrix",
    "free_space_path_loss",
    "knife_edge_loss",
    "obstruction_loss",
    "received_power",
    "link_pdr",
    "route_pdr",
    "link_matrix",
    "free_space_range",
]

# spacing floor between adjacent knife edges, keeps coincident edges finite
_MIN_EDGE_SPACING = 1e-3


@dataclass(frozen=True)
class ChannelParams:
    frequency: float = 5.9e9
    tx_power: float = 10.0
    antenna_gain_tx: float = 6.0
    antenna_gain_rx: float = 6.0
    sensitivity: float = -90.0
    shadowing_sigma: float = 0.0

    def __post_init__(self):
        if not self.frequency > 0:
            raise ValueError("frequency must be positive")
        if self.shadowing_sigma < 0:
            raise ValueError("shadowing_sigma must be non-negative")

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.frequency

    @property
    def link_budget(self) -> float:
        """Largest total path loss (dB) that still reaches the sensitivity."""
        return self.tx_power + self.antenna_gain_tx + self.antenna_gain_rx - self.sensitivity

    def with_power(self, tx_power: float) -> "ChannelParams":
        return replace(self, tx_power=float(tx_power))


@dataclass(frozen=True)
class LinkBudget:
    distance: float
    free_space_loss: float
    obstruction_loss: float
    received_power: float
    los: bool
    n_obstacles: int = 0


def free_space_path_loss(distance, frequency: float):
    d = np.asarray(distance, dtype=float)
    if np.any(d <= 0):
        raise ValueError(f"distance must be positive, got {distance!r}")
    loss = 20.0 * np.log10(4.0 * math.pi * d * frequency / SPEED_OF_LIGHT)
    return float(loss) if d.ndim == 0 else loss


def free_space_range(loss_db: float, frequency: float) -> float:
    """Distance at which free-space loss reaches ``loss_db``."""
    wavelength = SPEED_OF_LIGHT / frequency
    return wavelength / (4.0 * math.pi) * 10.0 ** (loss_db / 20.0)


def knife_edge_loss(nu):
    """Single knife-edge diffraction loss (dB), ITU-R P.526 approximation."""
    nu_arr = np.asarray(nu, dtype=float)
    with np.errstate(invalid="ignore"):
        j = 6.9 + 20.0 * np.log10(np.sqrt((nu_arr - 0.1) ** 2 + 1.0) + nu_arr - 0.1)
    j = np.where(nu_arr > -0.78, np.maximum(j, 0.0), 0.0)
    return float(j) if np.ndim(nu) == 0 else j


def _epstein_peterson(ground, tx_z, rx_z, obs_d, obs_z, n_obst, wavelength):
    """Summed knife-edge loss per row of padded, d-sorted obstacle arrays.

    Each edge is judged against the line joining its neighbours: the previous
    edge (or the transmit antenna) and the next edge (or the receive antenna).
    """
    m, k = obs_d.shape
    if k == 0:
        return np.zeros(m)
    ground = ground[:, None]
    cols = np.arange(k)[None, :]
    valid = cols < n_obst[:, None]
    first = cols == 0
    last = cols == (n_obst[:, None] - 1)

    prev_d = np.where(first, 0.0, np.roll(obs_d, 1, axis=1))
    prev_z = np.where(first, tx_z[:, None], np.roll(obs_z, 1, axis=1))
    next_d = np.where(last, ground, np.roll(obs_d, -1, axis=1))
    next_z = np.where(last, rx_z[:, None], np.roll(obs_z, -1, axis=1))

    da = np.maximum(obs_d - prev_d, _MIN_EDGE_SPACING)
    db = np.maximum(next_d - obs_d, _MIN_EDGE_SPACING)
    h = obs_z - (prev_z + (next_z - prev_z) * da / (da + db))
    nu = h * np.sqrt(2.0 * (da + db) / (wavelength * da * db))
    loss = np.where(valid, knife_edge_loss(np.where(valid, nu, -10.0)), 0.0)
    return loss.sum(axis=1)


def obstruction_loss(profile: LinkProfile, wavelength: float) -> float:
    """Epstein-Peterson loss over the knife edges in ``profile``; 0 when clear."""
    if not profile.obstacles:
        return 0.0
    obs_d = np.array([[o.d1 for o in profile.obstacles]])
    obs_z = np.array([[o.height for o in profile.obstacles]])
    loss = _epstein_peterson(
        np.array([profile.ground_distance]),
        np.array([profile.tx_antenna[2]]),
        np.array([profile.rx_antenna[2]]),
        obs_d, obs_z, np.array([len(profile.obstacles)]), wavelength,
    )
    return float(loss[0])


def received_power(tx, rx, scenario, params: ChannelParams, rng=None) -> LinkBudget:
    """Link budget between two vehicles of ``scenario``.

    A log-normal shadowing term is added only when ``rng`` is given and
    ``params.shadowing_sigma`` is positive.
    """
    profile = link_profile(tx, rx, scenario, params.wavelength)
    fspl = free_space_path_loss(profile.distance, params.frequency)
    obs = obstruction_loss(profile, params.wavelength)
    power = params.tx_power + params.antenna_gain_tx + params.antenna_gain_rx - fspl - obs
    if rng is not None and params.shadowing_sigma > 0:
        power += rng.normal(0.0, params.shadowing_sigma)
    return LinkBudget(
        distance=profile.distance,
        free_space_loss=fspl,
        obstruction_loss=obs,
        received_power=power,
        los=not profile.obstacles,
        n_obstacles=len(profile.obstacles),
    )


def link_pdr(budget, params: ChannelParams):
    """Delivery probability of one link.

    Without shadowing this is a hard threshold at the sensitivity; with
    shadowing it is the Gaussian probability of landing above it. ``budget``
    may be a LinkBudget or a received power (scalar or array) in dBm.
    """
    power = budget.received_power if isinstance(budget, LinkBudget) else budget
    sigma = params.shadowing_sigma
    if np.ndim(power):
        power = np.asarray(power, dtype=float)
        if sigma == 0:
            return (power >= params.sensitivity).astype(float)
        return ndtr((power - params.sensitivity) / sigma)
    if sigma == 0:
        return 1.0 if power >= params.sensitivity else 0.0
    return q_function((params.sensitivity - power) / sigma)


def route_pdr(route, params: ChannelParams) -> float:
    """End-to-end delivery ratio as the product of per-hop ratios."""
    budgets = route.links if hasattr(route, "links") else route
    if not budgets:
        raise ValueError("route has no hops")
    out = 1.0
    for b in budgets:
        out *= link_pdr(b, params) if isinstance(b, LinkBudget) else float(b)
    return out


class LinkMatrix:
    """Distance and obstruction loss for every pair of a scenario within range.

    Everything here is independent of transmit power, so one matrix serves a
    whole power sweep. Pairs never evaluated carry ``inf`` distance and
    ``-1`` obstacles.
    """

    def __init__(self, scenario, wavelength: float, max_distance: float):
        n = len(scenario)
        self.scenario = scenario
        self.wavelength = wavelength
        self.max_distance = max_distance
        self.distance = np.full((n, n), np.inf)
        self.obstruction_loss = np.zeros((n, n))
        self.n_obstacles = np.full((n, n), -1, dtype=np.int64)
        for blk in iter_link_blocks(scenario, wavelength, max_distance):
            loss = _epstein_peterson(
                blk.ground, blk.tx_z, blk.rx_z, blk.obs_d, blk.obs_z, blk.n_obst, wavelength
            )
            for a, b in ((blk.tx, blk.rx), (blk.rx, blk.tx)):
                self.distance[a, b] = blk.distance
                self.obstruction_loss[a, b] = loss
                self.n_obstacles[a, b] = blk.n_obst
        self.evaluated = self.n_obstacles >= 0
        safe = np.where(self.evaluated, self.distance, 1.0)
        self.free_space_loss = np.where(
            self.evaluated, 20.0 * np.log10(4.0 * math.pi * safe / wavelength), np.inf
        )

    @property
    def los(self) -> np.ndarray:
        return self.n_obstacles == 0

    def received_power(self, params: ChannelParams) -> np.ndarray:
        """Deterministic received power (dBm); ``-inf`` for pairs out of range."""
        gains = params.tx_power + params.antenna_gain_tx + params.antenna_gain_rx
        return np.where(self.evaluated, gains - self.free_space_loss - self.obstruction_loss, -np.inf)

    def budget(self, i: int, j: int, params: ChannelParams) -> LinkBudget:
        """LinkBudget of pair (i, j) in scenario index space."""
        if not self.evaluated[i, j]:
            raise KeyError(f"pair ({i}, {j}) lies beyond {self.max_distance:.0f} m")
        fspl = float(self.free_space_loss[i, j])
        obs = float(self.obstruction_loss[i, j])
        gains = params.tx_power + params.antenna_gain_tx + params.antenna_gain_rx
        return LinkBudget(
            distance=float(self.distance[i, j]),
            free_space_loss=fspl,
            obstruction_loss=obs,
            received_power=gains - fspl - obs,
            los=bool(self.n_obstacles[i, j] == 0),
            n_obstacles=int(self.n_obstacles[i, j]),
        )


def link_matrix(scenario, params: ChannelParams, max_tx_power: float | None = None,
                margin_db: float = 0.0) -> LinkMatrix:
    """Evaluate every pair that could clear the sensitivity at ``max_tx_power``.

    ``margin_db`` widens the range, e.g. to cover shadowing tails.
    """
    power = params.tx_power if max_tx_power is None else max_tx_power
    budget = params.with_power(power).link_budget + margin_db
    return LinkMatrix(scenario, params.wavelength, free_space_range(budget, params.frequency))
