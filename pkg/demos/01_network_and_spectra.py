#!/usr/bin/env python3
"""Build network topologies and inspect the incidence algebra.

Walks through the objects every other demo builds on: a connected random
graph, its signed/unsigned incidence matrices, and the two eigenvalue
constants that enter the certified contraction rate.
"""

import numpy as np

from hippo import build_incidence, generate_connected_gnp, path_topology, spectral_constants

# A path graph is small enough to print everything.
topo = path_topology(3)
inc = build_incidence(topo)
print("path graph on 3 agents:", topo.edges)
print("signed incidence E_s:\n", inc.E_s)
print("unsigned incidence E_u:\n", inc.E_u)
print("signed Laplacian L_s:\n", inc.L_s)
print("unsigned Laplacian L_u:\n", inc.L_u)

# The degree identity ties the two Laplacians together.
print("2D - L_s - L_u =\n", 2 * inc.D - inc.L_s - inc.L_u)

# Consensus lives in the nullspace of E_s: differences vanish iff all equal.
x_consensus = np.ones(3) * 0.7
x_split = np.array([0.7, 0.7, 1.4])
print("E_s @ consensus:", inc.E_s @ x_consensus)
print("E_s @ non-consensus:", inc.E_s @ x_split)

# Random connected graphs are drawn by resampling until connected.
topo = generate_connected_gnp(m=50, p=0.1, seed=7)
print(f"\nrandom graph: m={topo.m}, n={topo.n} edges, "
      f"{topo.redraws} redraws, degrees {topo.degrees.min()}..{topo.degrees.max()}")

# The rate certificate needs the largest eigenvalue of L_u and the smallest
# positive eigenvalue of the incidence stack augmented with the selector row.
inc = build_incidence(topo)
sc = spectral_constants(inc, l=0)
print(f"sigma_max(L_u) = {sc.sigma_max_Lu:.4f} "
      f"(Gershgorin bound {2 * topo.degrees.max()})")
print(f"sigma_min_plus = {sc.sigma_min_plus:.6f}")
