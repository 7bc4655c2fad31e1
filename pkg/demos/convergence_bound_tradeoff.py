#!/usr/bin/env python3
"""Evaluate the convergence bound and its privacy/utility trade-off.

The optimality-gap bound decays like 1/t; its constant grows as the
per-round privacy scale eps shrinks (stronger privacy, slower
convergence).  The bridge eps = 4C / (N - K) ties the bound to the
protocol's sequence surplus.
"""

import numpy as np

from floras import bound as bnd

BASE = dict(mu=0.1, l_smooth=1.0, hetero_gap=0.1, grad_bound=1.0,
            local_steps=1, k_clients=20, m_clients=40, clip_norm=1.0,
            trunc_bound=10.0, init_dist=1.0, lr_shift=0.0)

print("bound value vs t (eps = 0.8)")
params = bnd.BoundParams(eps=0.8, **BASE)
for t in (1, 10, 100, 1000, 10_000):
    print(f"  t = {t:>6}: {bnd.convergence_bound(t, params):.6f}")

ratio = (bnd.convergence_bound(2_000_000, params)
         / bnd.convergence_bound(1_000_000, params))
print(f"  bound(2t)/bound(t) at t = 1e6: {ratio:.6f}  (1/t decay -> 0.5)")

print("\nprivacy/convergence trade-off at t = 500 "
      "(gap = N - K, eps = 4C/gap)")
for gap in (1, 2, 5, 10, 20):
    eps = bnd.gap_to_eps(1.0, gap)
    value = bnd.convergence_bound(500, bnd.BoundParams(eps=eps, **BASE))
    d_term = bnd.d_epsilon(eps, 1.0, BASE["trunc_bound"], 20, 1, 1.0)
    print(f"  gap = {gap:>2} (eps = {eps:5.2f}): bound = {value:9.5f}, "
          f"privacy noise term D = {d_term:9.5f}")
