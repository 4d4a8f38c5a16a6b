"""Ball masses in l2 powers, and a wedge of two cycle powers pulling apart."""
# %%
from mmpyramids import harness, lp_power, two_point

# %% the largest open 0.4-ball in {0,1}^n with the l2 metric holds one point
for n in (1, 2, 4):
    print(n, harness.sup_open_ball_mass(lp_power(two_point(1), 2, n), 0.4))

rep = harness.experiment_product_ball_decay()
print(rep.summary())

# %% far parts of each copy gain mass and move apart as n grows
rep = harness.experiment_wedge_convergence(6, (1, 2), 0.5)
print(rep.summary())
for t in rep.trends:
    print(t["name"], t["instance"], t["value"])
