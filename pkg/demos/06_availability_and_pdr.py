"""Two system-level views: tall-relay availability and PDR against distance."""

from tvrsim import ChannelParams, RoadConfig, generate
from tvrsim.analysis import (Pairing, effective_range, pdr_vs_distance, tall_relay_prob_analytic,
                             tall_relay_prob_empirical)

config = RoadConfig(length=6000.0)
scenes = [generate(config, seed=200 + k) for k in range(3)]

lam_short = config.linear_density * (1 - config.tall_fraction)
for x in (25, 50, 100):
    analytic = tall_relay_prob_analytic(config.tall_fraction, lam_short, x)
    empirical = tall_relay_prob_empirical(scenes, 500.0, x)
    print(f"P(tall within {x:3d} m): analytic {analytic:.3f}  simulated {empirical:.3f}")

params = ChannelParams(shadowing_sigma=3.0)
for pairing in (Pairing.VAN_X, Pairing.CAR_CAR):
    curve = pdr_vs_distance(scenes, params, pairing)
    print(f"{pairing.name:8s} range at PDR 0.9: {effective_range(curve, 0.9):.1f} m")
