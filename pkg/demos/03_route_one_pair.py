"""Follow one packet along a highway with each relay rule."""

import numpy as np

from tvrsim import (TVR, ChannelParams, FarthestNeighbor, MostNewNeighbors, RoadConfig,
                    build_neighbor_table, build_route, generate)
from tvrsim.routing import RoutingFailure

scene = generate(RoadConfig(length=4000.0, density=10.0), seed=7)
table = build_neighbor_table(scene, ChannelParams(tx_power=10.0))

x = scene.arrays.x
src = scene.vehicles[int(np.argmin(x))].id
dst = scene.vehicles[int(np.argmax(x))].id
print(f"source {src} at {x.min():.0f} m, destination {dst} at {x.max():.0f} m")

for rule in (FarthestNeighbor(), MostNewNeighbors(), TVR(50.0)):
    try:
        route = build_route(src, dst, table, rule)
    except RoutingFailure as exc:
        print(f"{type(rule).__name__:18s} failed: {exc}")
        continue
    tall = sum(scene.vehicle(v).is_tall for v in route.relays)
    print(f"{type(rule).__name__:18s} {route.n_hops:3d} hops, {tall}/{len(route.relays)} relays tall")
