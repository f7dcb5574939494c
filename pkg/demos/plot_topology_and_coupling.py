"""
Agent graph and coupled inputs
==============================

Load the shipped 10-agent scenario, look at who talks to whom, and see how
one agent's control leaks into the others through the adjacency matrix.
"""

import numpy as np

from daoctrl import paper_scenario

scenario = paper_scenario()
topo = scenario.topology
print(topo)

# out-neighbours are 0-based internally; print them 1-based
for i in range(topo.n):
    print(f"v{i + 1}:", [(j + 1, a) for j, a in topo.neighbors(i)])

# the effective input of agent i is u_i + sum_j a_ji u_j (a column of A)
u = np.ones(topo.n)
coupled = [topo.coupled_input(i, list(u)) for i in range(topo.n)]
print("coupled input for u = 1:", np.round(coupled, 3))
