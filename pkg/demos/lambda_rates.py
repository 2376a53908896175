"""How fast does the dependence coefficient vanish as the sample grows?

For Gaussian data mixed along a sparse Erdos-Renyi graph only neighbours
are correlated, so lambda(2) should shrink like 1/n and lambda(3) like
1/n^2.  Rescaled columns that stay roughly flat confirm the rate.

    python3 demos/lambda_rates.py
"""

from randsub.harness import ExperimentSpec, design_covariance
from randsub.lambda_oracle import LambdaMethod, lambda_k
from randsub.permute import Purpose, RngStream

spec = ExperimentSpec.parse("design = DepGraphER\nlambda_graph = 3\nc = 0.6\nseed = 7\n")
print(f"{'n':>5} {'n*lambda(2)':>12} {'n^2*lambda(3)':>14}")
for n in (50, 100, 200, 400):
    cov = design_covariance(spec, n)
    rng = RngStream.for_replication(spec.seed, 0, Purpose.LAMBDA).substream(n)
    l2 = lambda_k(cov, 2, LambdaMethod.MONTE_CARLO, rng.substream(2), num_draws=50_000)
    l3 = lambda_k(cov, 3, LambdaMethod.MONTE_CARLO, rng.substream(3), num_draws=50_000)
    print(f"{n:>5} {n * l2.lambda_value:>12.4f} {n * n * l3.lambda_value:>14.4f}")
