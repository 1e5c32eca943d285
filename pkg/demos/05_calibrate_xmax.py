"""Where should TVR draw the line between a near tall and a far short relay?

Collects labeled distance differences at a few powers, fits normals and
prints both the averaged tall-best mean and the per-power crossing point.
"""

from tvrsim import ChannelParams, RoadConfig, generate
from tvrsim.calibration import Label, average_xmax, fit_normal, solve_xmax
from tvrsim.stats import NoRootError

scenes = [generate(RoadConfig(length=4000.0), seed=100 + k) for k in range(3)]
result = average_xmax(scenes, powers=[5.0, 10.0, 15.0], params=ChannelParams(), n_pairs=200, seed=3)

for power, mean in result.per_power.items():
    tall = [s.value for s in result.samples if s.power == power and s.label is Label.TALL_BEST]
    short = [s.value for s in result.samples if s.power == power and s.label is Label.SHORT_BEST]
    try:
        root = f"{solve_xmax(fit_normal(tall), fit_normal(short)):8.2f}"
    except (ValueError, NoRootError):
        root = "     n/a"
    print(f"{power:5.1f} dBm  tall-best mean {mean:8.2f} m  crossing {root} m  "
          f"({len(tall)} tall / {len(short)} short samples)")
print(f"averaged x_max = {result.x_max:.2f} m")
