# %% [markdown]
# # Ground state of a trapped condensate
#
# The Gross-Pitaevskii operator on a 20 x 20 grid, written for the real
# vector `(Re psi, Im psi)`. The linear ground state is doubly degenerate
# in this real form, so eigenvectors are picked by a least-squares fit to
# the previous iterate within a cluster around the smallest eigenvalue.

# %%
from nepv import GpeProblem, SelectionStrategy, SolverConfig, solve
from nepv.config import initial_guess

selection = SelectionStrategy("cluster_lstsq", "smallest", 0.5)
cfg = SolverConfig("j_version", tol=1e-8, max_iter=50, selection=selection)

# %%
prob = GpeProblem(N=20, L=10.0, Omega=0.0, b=0.0)
trace = solve(prob, cfg, initial_guess(prob, "random", seed=0))
print(f"b=0: {trace.status} after {trace.iterations} step, energy {trace.final.S[0, 0]:.8f}")

# %% [markdown]
# Increase the interaction strength step by step, each time starting from
# the previous ground state.

# %%
V = trace.final.V
for b in (10.0, 25.0, 50.0):
    trace = solve(prob.with_alpha(b), cfg, V)
    V = trace.final.V
    print(f"b={b:4.0f}: {trace.status} after {trace.iterations} steps, eigenvalue {trace.final.S[0, 0]:.6f}")
