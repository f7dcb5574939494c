"""
Extracting critical agents
==========================

Run the randomized subgraph heuristic on an ECE snapshot and compare it with
the exhaustive search.
"""

from daoctrl import OperationParams, brute_force, operate, paper_scenario, validate

topo = paper_scenario().topology
r = [2.1, -0.4, 1.3, 0.2, 3.5, -1.1, 0.7, 1.8, -0.9, 2.6]
params = OperationParams(phi=4, psi=2.0, rng_seed=1)

result = operate(topo, r, params)
print("heuristic:", result.to_dict())
print("constraints:", validate(topo, result.subgraph, r, params).to_dict())

best = brute_force(topo, r, params.phi, params.psi)
print("oracle:", best.to_dict())
print("extra edges kept by the heuristic:",
      len(result.subgraph.retained_edges) - len(best.retained_edges))

# a tighter tolerance quickly makes the problem infeasible
tight = OperationParams(phi=4, psi=0.0, rng_seed=1, max_outer_iterations=50)
print("psi=0:", operate(topo, r, tight).found, brute_force(topo, r, 4, 0.0) is not None)
