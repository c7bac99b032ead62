# %% [markdown]
# Transmission order from the SVD of the scheduling submatrix.
#
# Slot n goes to the bus with the largest sigma_n |u_n| among buses not yet
# scheduled.

# %%
import numpy as np

from pmusched import load_case, plan, svd_ordering
from pmusched.scheduler import scheduling_submatrix

net = load_case("case14")

for method in ("topology", "electrical"):
    p = plan(net, method, T=20)
    sub = scheduling_submatrix(p.scheduling_matrix, p.placement.pmu_buses)
    o = svd_ordering(sub)
    print(method, "placement", p.placement.pmu_buses)
    print("  singular values", np.round(o.singular_values, 3))
    print("  order", p.schedule.order, "slot ends", p.schedule.slot_boundaries)

# %% [markdown]
# The topology submatrix on {2, 6, 7, 9} is block diagonal: buses 2 and 6
# share no branch with the others, so the largest singular value belongs
# to whichever block dominates.

# %%
p = plan(net, "topology")
print(scheduling_submatrix(p.scheduling_matrix, p.placement.pmu_buses).round(2))
