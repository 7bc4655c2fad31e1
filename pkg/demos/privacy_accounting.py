#!/usr/bin/env python3
"""Privacy accounting for the sequence-surplus mechanism.

Prints the composed (eps, delta) guarantee under the three composition
rules for the standard configurations, shows the item vs client level
difference, and inverts the accountant to size the sequence bank for a
target budget.
"""

from floras import privacy

DELTA = 1e-5
CLIP = 1.0

print("composed epsilon after T rounds (delta = 1e-5, C = 1)")
print(f"{'config':>22} {'T':>6} {'sequential':>12} {'advanced':>12} {'renyi':>12}")
for q, gap in ((0.05, 5.0), (0.01, 5.0), (0.05, 10.0)):
    eps0 = privacy.per_round_pure_epsilon(q, CLIP, gap)
    for rounds in (100, 1000):
        row = (privacy.compose_sequential(rounds, eps0),
               privacy.compose_advanced(rounds, DELTA, eps0),
               privacy.compose_renyi(rounds, DELTA, eps0))
        print(f"  q={q:<5} gap={gap:<5g} {rounds:>6} "
              f"{row[0]:>12.5f} {row[1]:>12.5f} {row[2]:>12.5f}")

print("\nitem vs client level (q = 0.1, gap = 5, T = 200)")
item = privacy.compose_renyi(200, DELTA,
                             privacy.per_round_log_term(0.1, CLIP, 5.0))
client = privacy.compose_client_level(200, DELTA, CLIP, 5.0)
print(f"  item-level  eps = {item:.4f}")
print(f"  client-level eps = {client:.4f}")

print("\nsizing the sequence bank: smallest N for a target budget "
      "(K = 20, q = 0.05, T = 1000)")
for target in (2.0, 1.0, 0.5, 0.25):
    res = privacy.solve_set_size(target, 1000, DELTA, 0.05, CLIP, 20)
    print(f"  eps <= {target:<5} -> N = {res.set_size:<4} "
          f"(bandwidth overhead {res.bandwidth_overhead:.0%})")
