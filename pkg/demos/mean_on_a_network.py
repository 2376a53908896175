"""Test a mean and build a confidence interval for network-correlated data.

Draws one Erdos-Renyi graph, simulates Gaussian data whose correlation
decays with graph distance, then asks two questions of the sample: is the
mean zero, and which means are compatible with the data?

    python3 demos/mean_on_a_network.py
"""

import numpy as np

from randsub import CriticalValue, InferenceConfig, RngStream, confidence_set, mean_test
from randsub.dgp import network_factor
from randsub.graphgen import all_pairs_distances, erdos_renyi

n = 800
graph = erdos_renyi(n, 2.0, RngStream(1))
factor = network_factor(all_pairs_distances(graph), 1.5)
x = factor.draw(RngStream(2)).data[:, 0] + 0.1  # true mean 0.1

print(f"graph: {graph.n} nodes, {graph.num_edges} edges; "
      f"correlation repair changed the matrix by {factor.relative_perturbation:.1e}")
print(f"sample mean {x.mean():+.4f}")

for method in (CriticalValue.ASYMPTOTIC_NORMAL, CriticalValue.PERMUTATION):
    cfg = InferenceConfig(alpha=0.05, critical_value=method, seed=3)
    res = mean_test(x, 0.0, cfg, RngStream(3))
    print(f"H0: mean = 0 with {method.value:>11} critical value: "
          f"T = {res.statistic:+.3f}, c = {res.critical_value:.3f}, reject = {res.reject}")

# a point stays in the set only if 95% of S randomized tests keep it, so the
# set can be tighter than what one test suggests
cfg = InferenceConfig(alpha=0.05, seed=4)
curve = confidence_set(x, np.linspace(-0.2, 0.4, 121), cfg, RngStream(4))
hull = curve.interval()
if hull is None:
    print("95% confidence set is empty on this grid")
else:
    print(f"95% confidence set on the grid: [{hull[0]:+.3f}, {hull[1]:+.3f}]"
          f"{'' if curve.is_contiguous() else ' (not an interval)'}")
