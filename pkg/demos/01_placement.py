# %% [markdown]
# Where do PMUs go on the IEEE 14-bus case?
#
# Two notions of "neighbour": physical branches, or the K electrically
# closest bus pairs by resistance distance. Both feed the same exact
# set-cover solver.

# %%
import numpy as np

from pmusched import load_case, resistance_distance, solve_placement, topological_connectivity
from pmusched.electrical import electrical_connectivity
from pmusched.network import dc_laplacian, nominal_susceptance

net = load_case("case14")
print(net.bus_count, "buses,", net.branch_count, "branches")

# %%
C_topo = topological_connectivity(net)
sol = solve_placement(C_topo)
print("topology:", sol.count, "PMUs at", sol.pmu_buses)

# %% [markdown]
# Resistance distance from the grounded Laplacian inverse. A distance
# matrix is symmetric with a zero diagonal; the nearest pairs are usually,
# but not always, physical branches.

# %%
L = dc_laplacian(net, nominal_susceptance(net))
E = resistance_distance(L).entries
np.set_printoptions(precision=3, suppress=True, linewidth=120)
print(E[:5, :5])

adj = electrical_connectivity(E, net.branch_count, resolve_ties=True)
print("lambda =", round(adj.lam, 5))
pairs = {(int(i) + 1, int(j) + 1) for i, j in zip(*np.nonzero(np.triu(adj.matrix, 1)))}
branches = {(b.to_bus, b.from_bus) for b in net.branches}
print("electrical pairs that are not branches:", sorted(pairs - branches))

# %%
sol_e = solve_placement(adj.matrix)
print("electrical:", sol_e.count, "PMUs at", sol_e.pmu_buses)
