"""How often does each vehicle class see its neighbors unobstructed?

Generates one medium-density highway and reports the mean LOS share
within 500 m for tall and short vehicles.
"""

import numpy as np

from tvrsim import RoadConfig, generate, per_vehicle_los_ratio

scene = generate(RoadConfig(length=3000.0), seed=42)
ratios = per_vehicle_los_ratio(scene, 500.0)

tall = [r for vid, r in ratios.items() if scene.vehicle(vid).is_tall and not np.isnan(r)]
short = [r for vid, r in ratios.items() if not scene.vehicle(vid).is_tall and not np.isnan(r)]
print(f"{len(scene)} vehicles, {scene.tall_fraction:.1%} tall")
print(f"tall  LOS share: {np.mean(tall):.1%} over {len(tall)} vehicles")
print(f"short LOS share: {np.mean(short):.1%} over {len(short)} vehicles")
