#!/usr/bin/env python3
"""From a sparse text file to a running network.

Writes a small regression dataset in the usual sparse ``label index:value``
format, parses it back, partitions the rows evenly across agents, and runs
the protocol on the result.  This is the same path the CLI takes for
file-backed experiments.
"""

import tempfile
from pathlib import Path

import numpy as np

from hippo import (
    ActivationScheme,
    HyperParams,
    LocalObjective,
    Regularizer,
    RunConfig,
    estimate_constants,
    generate_connected_gnp,
    parse_libsvm,
    partition_even,
    run,
    serialize_libsvm,
    solve_centralized,
)

# Synthesize a file: 120 rows, 5 features, sparse encoding.
rng = np.random.default_rng(12)
x_true = rng.standard_normal(5)
lines = []
for _ in range(120):
    dense = rng.standard_normal(5)
    dense[rng.random(5) < 0.4] = 0.0  # sparsify
    label = float(dense @ x_true + 0.1 * rng.standard_normal())
    toks = [repr(label)] + [f"{j + 1}:{float(dense[j])!r}" for j in range(5) if dense[j] != 0.0]
    lines.append(" ".join(toks))
path = Path(tempfile.gettempdir()) / "demo_regression.txt"
path.write_text("\n".join(lines) + "\n")
print(f"wrote {path} ({len(lines)} rows)")

dataset = parse_libsvm(path.read_text(), declared_d=5)
print(f"parsed {len(dataset)} rows, d = {dataset.d}")
assert parse_libsvm(serialize_libsvm(dataset), declared_d=5) == dataset  # round trip

m = 6
parts = partition_even(dataset, m, seed=4)
print("rows per agent:", [len(b) for _, b in parts])

objectives = [LocalObjective(A, b, ridge=0.05) for A, b in parts]
consts = estimate_constants(objectives)
topo = generate_connected_gnp(m, p=0.5, seed=8)
reg = Regularizer("l1", gamma=0.5)
oracle = solve_centralized(objectives, reg)

hp = HyperParams(mu_z=2.0, mu_theta=1.0, epsilon=consts.M_f, certified_mode=True)
config = RunConfig(
    hyperparams=hp,
    scheme=ActivationScheme(kind="bernoulli", m=m, probs=(0.7,) * m, seed=21),
    iterations=4000,
    newton_fraction=0.5,
    tolerance=1e-9,
    seed=2,
)
trace = run(topo, objectives, reg, config, l_star=oracle.value)
print(f"asynchronous run: relative loss {trace.rel_loss[-1]:.2e} at iteration {trace.t[-1]}")
print("oracle x*:", np.round(oracle.x, 4))
