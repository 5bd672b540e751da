# %% [markdown]
# # Convergence on a small scalar problem
#
# The matrix is `A(v) = A0 + alpha sin(v^T A2 v / v^T v) A1` with fixed
# symmetric 4x4 matrices. We start every method from the normalized
# all-ones vector and watch the error against a polished reference.

# %%
import numpy as np

from nepv import ScalarSineProblem, SelectionStrategy, SolverConfig, estimate_order, reference_solution, solve

prob = ScalarSineProblem(alpha=0.5)
v0 = np.ones((4, 1)) / 2
# follow the eigenvalue closest to the current Rayleigh quotient
selection = SelectionStrategy("nearest_target", "rayleigh")

# %%
for method in ("a_version", "j_version", "newton", "j_inverse"):
    trace = solve(prob, SolverConfig(method, selection=selection), v0)
    trace.set_reference(reference_solution(prob, trace.final.V))
    order = estimate_order(trace).order
    errors = " ".join(f"{e:.1e}" for e in trace.errors)
    print(f"{method:10s} {trace.status:9s} order {order:4.2f} | {errors}")

# %% [markdown]
# The eigenvector iteration on `A(v_k)` converges linearly, while the
# eigenvector iteration on the Jacobian `J(v_k)` matches Newton's
# quadratic rate. Inverse iteration with `J` is linear and, lacking a
# shift, converges to the solution whose eigenvalue is closest to zero.

# %%
for alpha in (0.5, 1.0, 5.0):
    trace = solve(prob.with_alpha(alpha), SolverConfig("a_version", selection=selection), v0)
    print(f"alpha={alpha}: a_version needs {trace.iterations_to(1e-10)} iterations")
