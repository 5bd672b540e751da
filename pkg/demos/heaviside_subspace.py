# %% [markdown]
# # A subspace problem (p = 3)
#
# `A(V) = A0 + alpha diag(A0^{-1} diag(P))` where `P` is the orthogonal
# projector onto `range(V)` and `A0` the 1-D Laplacian. The J-version step
# is a coupled equation for `(V, S)` that we only solve approximately with
# a Nelder-Mead search, so its fast phase eventually levels off.

# %%
import time

from nepv import HeavisideTraceProblem, SolverConfig, solve
from nepv.config import initial_guess

# %%
for alpha in (0.25, 0.5):
    prob = HeavisideTraceProblem(10, 3, alpha)
    V0 = initial_guess(prob, "random", seed=0)
    for method in ("a_version", "j_version"):
        t0 = time.perf_counter()
        trace = solve(prob, SolverConfig(method, tol=1e-8), V0)
        res = " ".join(f"{r:.0e}" for r in trace.residuals)
        print(f"alpha={alpha} {method:9s} {trace.iterations:3d} it {time.perf_counter() - t0:5.1f}s | {res}")
