"""Tall-vehicle relaying simulator for highway vehicular networks.

Static highway snapshots, a vehicle-obstruction channel (60% first Fresnel
zone test with knife-edge diffraction), greedy geographic routing with the
Farthest Neighbor, Most New Neighbors and TVR relay rules, calibration of
the TVR threshold and the system-level metrics used to compare them.
"""

from .channel import (
    ChannelParams,
    LinkBudget,
    LinkMatrix,
    free_space_path_loss,
    knife_edge_loss,
    link_matrix,
    link_pdr,
    obstruction_loss,
    received_power,
    route_pdr,
)
from .geometry import (
    LinkProfile,
    ObstacleSample,
    Vehicle,
    VehicleClass,
    fresnel_radius,
    is_los,
    link_profile,
    per_vehicle_los_ratio,
)
from .routing import (
    TVR,
    FarthestNeighbor,
    HopCapExceeded,
    LocalMaximum,
    MostNewNeighbors,
    NeighborTable,
    Route,
    RoutingFailure,
    best_route_hops,
    build_neighbor_table,
    build_route,
    forward_set,
    select_farthest,
    select_most_new,
    select_tvr,
)
from .scenario import DENSITY_PRESETS, RoadConfig, Scenario, generate, load_csv, save_csv, spacing_samples

__version__ = "0.1.0"
