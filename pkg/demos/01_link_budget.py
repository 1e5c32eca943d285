"""A car, a van and a truck between them: what the channel model does.

Builds three hand-placed layouts and prints the link budget for each,
so the effect of one blocking vehicle on received power is visible.
"""

from tvrsim import ChannelParams, Vehicle, VehicleClass, received_power
from tvrsim.scenario import Scenario


def car(vid, x, y=1.75):
    return Vehicle(vid, (x, y), 4.2, 1.8, 1.5, VehicleClass.SHORT)


def van(vid, x, y=1.75):
    return Vehicle(vid, (x, y), 6.3, 2.0, 3.35, VehicleClass.TALL)


params = ChannelParams()
layouts = {
    "car to car, open road": Scenario([car(0, 0.0), car(1, 200.0)]),
    "car to car, car in between": Scenario([car(0, 0.0), car(2, 100.0), car(1, 200.0)]),
    "van to van, car in between": Scenario([van(0, 0.0), car(2, 100.0), van(1, 200.0)]),
    "car to car, van in between": Scenario([car(0, 0.0), van(2, 100.0), car(1, 200.0)]),
}

print(f"{'layout':32s} {'FSPL':>7s} {'extra':>7s} {'Prx':>8s}  LOS")
for name, scene in layouts.items():
    b = received_power(scene.vehicle(0), scene.vehicle(1), scene, params)
    print(f"{name:32s} {b.free_space_loss:7.2f} {b.obstruction_loss:7.2f} {b.received_power:8.2f}  {b.los}")

# The car blocks the car-car link but sits well under the van-van line.
# A van in the middle costs far more than a car does.
