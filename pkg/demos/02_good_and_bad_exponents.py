"""Linear phases along S converge, squared ones do not; the same dichotomy in two systems."""

# %%
from ergolab.averaging import cauchy_defect, dyadic, sequence_exp_trace
from ergolab.sequences import ExponentSchedule, default_beta_grid, enumerate_S
from ergolab.systems import CharacterFn, RotationSystem, golden_skew_system, lflw_characters, lflw_reduction_check, multi_average
from ergolab.torus import make_constant

alpha = make_constant("golden_mean", 256)
S = enumerate_S(ExponentSchedule.constant(2), alpha, 1 << 21)[: 1 << 18]

# %%
grid = default_beta_grid()
for g in (1, 2):
    worst = max(cauchy_defect(sequence_exp_trace(S, b, g, dyadic(len(S))), 2) for b in grid[:8])
    print(f"g={g}: Cauchy defect at 2^18 (first 8 grid points) = {worst:.4f}")

# %% [markdown]
# On the circle rotation by alpha, averages of e(x) along s_n are exactly the
# exponential averages above, so the dichotomy carries over to L^2.

# %%
rot = RotationSystem(alpha)
f = [CharacterFn((1,))]
cps = dyadic(1 << 16)
for name, seq in (("s_n", S[: 1 << 16]), ("s_n^2", S[: 1 << 16] ** 2)):
    res = multi_average(rot, seq, 1, f, n_points=16, checkpoints=cps)
    print(name, {k: round(v, 4) for k, v in res.defects.items() if k >= 1 << 12})

# %% [markdown]
# On the skew product of T^3 the double average with f1 = e(-2 t2 + t3) and
# f2 = e(t2) reduces to a one-dimensional quadratic exponential average.

# %%
skew = golden_skew_system()
rep = lflw_reduction_check(skew, 1, S, 10 ** 4, skew.random_points(20, seed=1))
print(f"max discrepancy over 20 points: {rep['max_discrepancy']:.2e}")
res = multi_average(skew, range(1, (1 << 15) + 1), 2, list(lflw_characters(1)), n_points=32)
print("L2 defects, s_n = n:", {k: round(v, 4) for k, v in res.defects.items() if k >= 1 << 10})
