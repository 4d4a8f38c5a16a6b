"""Splitting extended sums into parts, and reading atom weights off gapped generators."""
# %%
import numpy as np

from mmpyramids import (
    PyramidApprox, atoms_limit_of_scaling, cycle_space, decompose_extended, direct_sum,
    direct_sum_pyramids, rho_upper, two_point,
)

# %% a sum with infinite distances between parts comes apart again
Z = direct_sum([two_point(1), cycle_space(3), two_point(2)], [0.2, 0.5, 0.3])
D = decompose_extended(Z)
print(D.weights.entries, [X.n for X in D.parts])

# %% gaps 8 and 16 between two bounded parts; scaling down leaves two atoms
P = direct_sum_pyramids([PyramidApprox.of_space(cycle_space(4)), PyramidApprox.of_space(two_point(0.5))],
                        [0.6, 0.4], gaps=(8, 16))
print(atoms_limit_of_scaling(P))

# %% upper bounds on the pyramid distance
A = PyramidApprox.from_atoms((0.6, 0.4))
print(rho_upper(A, PyramidApprox.from_atoms((0.5, 0.5))))
print(rho_upper(PyramidApprox.of_space(two_point(1)), PyramidApprox.of_space(cycle_space(3))))
print(np.round(rho_upper(P, A).value, 6))
