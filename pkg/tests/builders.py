"""Small hand-placed scenarios shared by the unit tests."""

from tvrsim.geometry import Vehicle, VehicleClass
from tvrsim.scenario import Scenario

WAVELENGTH = 0.0508


def vehicle(vid, x, y=1.75, height=1.5, length=4.2, width=1.8, tall=None, heading=(1.0, 0.0)):
    if tall is None:
        tall = height > 2.0
    return Vehicle(
        id=vid, center=(float(x), float(y)), length=length, width=width, height=height,
        vclass=VehicleClass.TALL if tall else VehicleClass.SHORT, heading=heading,
    )


def van(vid, x, y=1.75, height=3.35):
    return vehicle(vid, x, y, height=height, length=6.3, width=2.0, tall=True)


def scene(*vehicles):
    return Scenario(tuple(vehicles))


def chain(n, spacing, height=1.5, y=1.75):
    """Same-lane column of identical cars, ids 0..n-1 front to back."""
    return scene(*(vehicle(k, k * spacing, y, height=height) for k in range(n)))
