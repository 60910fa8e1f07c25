"""
One confidence-weighted update, by hand
=======================================

Builds a small Gaussian state, applies an SCW-I and SCW-II step to one
example, and checks the closed-form coefficients against the brute-force
dual search in ``scwlearn.numeric``.
"""

import numpy as np

from scwlearn import (CovarianceMode, Example, GaussianState, HyperParams, apply_second_order_update,
                      margin_stats, scw1_coefficients, scw2_coefficients)
from scwlearn.numeric import kkt_residuals, oracle_minimize_scw

# a 3-d state with correlated covariance
rng = np.random.default_rng(0)
A = rng.normal(size=(3, 3))
state = GaussianState(np.array([0.2, -0.1, 0.4]), A @ A.T + 0.1 * np.eye(3), CovarianceMode.FULL)
x = Example.from_dict({0: 1.0, 2: -0.5}, +1)
params = HyperParams(c=0.5, eta=0.9)

# margin m, variance v and the two losses the update rules look at
stats = margin_stats(state, x, x.label, params)
print(f"m={stats.m:.4f}  v={stats.v:.4f}  hinge={stats.loss_hinge:.4f}  phi-loss={stats.loss_phi:.4f}")

for kind, rule in (("scw1", scw1_coefficients), ("scw2", scw2_coefficients)):
    co = rule(stats, params)
    oracle = oracle_minimize_scw(kind, state, x, x.label, params)
    new, _ = apply_second_order_update(state.copy(), x, x.label, co)
    kkt = kkt_residuals(kind, state, new.mean, new.cov, co.alpha, x, x.label, params)
    print(f"{kind}: alpha={co.alpha:.6f} (oracle {oracle.tau:.6f})  beta={co.beta:.6f}  "
          f"max KKT residual {max(kkt.values()):.1e}")

# alpha = C above, so SCW-I was clamped. With a larger C the step is
# unclamped and the confidence constraint ends up tight: y mu.x == phi sqrt(x' Sigma x)
loose = HyperParams(c=16.0, eta=0.9)
co = scw1_coefficients(margin_stats(state, x, x.label, loose), loose)
new, _ = apply_second_order_update(state.copy(), x, x.label, co)
xd = x.to_dense(3)
print(f"alpha={co.alpha:.4f}  post margin {new.mean @ xd:.10f}  "
      f"phi*sqrt(u) {loose.phi * np.sqrt(xd @ new.cov @ xd):.10f}")
