"""Which rule finds the minimum-hop route most often?

Runs the three rules on the same random source/destination pairs over a
few high-density snapshots and prints the summary table.
"""

from tvrsim import RoadConfig, generate
from tvrsim.analysis import compare_strategies
from tvrsim.routing import parse_strategy

scenes = [generate(RoadConfig(length=6000.0, density=10.0), seed=s) for s in range(3)]
strategies = [parse_strategy(s) for s in ("farthest", "most_new", "tvr")]
report = compare_strategies(scenes, n_pairs=300, powers=[10.0], strategies=strategies, seed=1)

for name, row in report.summary().items():
    print(f"{name:10s} best {row['best_pct']:5.1f}%  hops {row['mean_hops']:5.2f}  "
          f"failures {row['failure_rate']:.1%}")
