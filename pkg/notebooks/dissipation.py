"""Dissipating spaces: Sep grows with n while ObsDiam of a concentrating family stays put."""
# %%
import numpy as np

from mmpyramids import (
    PyramidApprox, cov_of_pyramid, covering_number, dissipation_space, lp_power, obs_diameter,
    separation_distance, sep_of_pyramid, two_point,
)

# %% n uniform points at mutual distance n
for n in (4, 8, 16):
    D = dissipation_space(n)
    print(n, separation_distance(D, [0.25, 0.25]), covering_number(D, 0.5, 0.25))

# %% the same numbers as pyramid invariants, flagged LOWER and with a growth trend
P = PyramidApprox.from_generators([dissipation_space(n) for n in (4, 8, 16)])
print(sep_of_pyramid(P, [0.25, 0.25]))
c = cov_of_pyramid(P, 0.5, 0.25)
print(c.per_generator, "diverging" if c.diverging else "bounded")

# %% l_inf powers of a two-point space do not spread out at radius 1.5
cube = [lp_power(two_point(1), np.inf, k) for k in (1, 2, 3)]
print([covering_number(X, 1.5, 0.2) for X in cube])
print([(I.lower, I.upper) for I in (obs_diameter(X, 0.3) for X in cube)])
