#!/usr/bin/env python3
"""The dominating drift chain and its closed-form absorption time.

The residual-elimination argument bounds the awareness potential by a lazy
birth-death chain that steps down with probability 1/n and up with
probability eta/n.  Its expected hitting time of zero from x0 is exactly
x0 * n / (1 - eta); the Monte-Carlo harness should land on that number.

Run:  python demos/02_drift_chain.py
"""

from swarmphase import DriftChainSpec, RngStream
from swarmphase.metrics import drift_absorption_trials

print(f"{'n':>4} {'eta':>5} {'x0':>4} {'exact':>10} {'empirical':>10} {'rel err':>8}")
rng = RngStream(99)
for (n, eta, x0) in [(1, 0.0, 1), (10, 0.5, 5), (20, 0.9, 3), (50, 0.25, 8)]:
    spec = DriftChainSpec(eta=eta, n=n, x0=x0)
    exact = spec.exact_mean_absorption()
    got = drift_absorption_trials(spec, trials=40_000, rng=rng)
    print(f"{n:>4} {eta:>5.2f} {x0:>4} {exact:>10.1f} {got:>10.1f} {abs(got - exact) / exact:>8.2%}")
