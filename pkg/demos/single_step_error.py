# %% [markdown]
# # Error of a single step
#
# For a linear problem both implicit methods are exact after one step. With
# a weak nonlinearity `alpha C(v)` the one-step error should grow linearly
# in `alpha`, with a constant that depends on how each method linearizes
# `C`.

# %%
import numpy as np

from nepv import ScalarSineProblem, SelectionStrategy, single_step_study

alphas = [1e-3, 3e-3, 1e-2, 3e-2, 1e-1]
rep = single_step_study(ScalarSineProblem(), np.ones(4) / 2, alphas,
                        SelectionStrategy("nearest_target", "rayleigh"))

# %%
print("alpha     err_A     err_J     err_J/err_A")
for a, ea, ej in zip(rep.alphas, rep.err_A, rep.err_J):
    print(f"{a:7.0e}  {ea:8.2e}  {ej:8.2e}  {ej / ea:.3f}")
print(f"log-log slopes: A {rep.slope_A:.3f}, J {rep.slope_J:.3f}")
print(f"predicted ratio coeff_J/coeff_A = {rep.coeff_J / rep.coeff_A:.3f}")
