"""Build the set S for B = {2} and watch the selected quadratic averages fail to settle."""

# %%
import numpy as np

from ergolab.averaging import GAP_EXACT_LIMIT, GAP_LIMIT, divergence_gap
from ergolab.sequences import ExponentSchedule, enumerate_S, member
from ergolab.torus import PhaseTerm, eval_phase, make_constant

alpha = make_constant("golden_mean", 256)
sched = ExponentSchedule.constant(2)

# %% [markdown]
# n joins S when frac(n^2 alpha) lands in [0,1/8] u [7/8,1) on the first half of
# its block [2^(2j-1), 2^(2j)) and in [3/8,5/8] on the second half.

# %%
for n in (2, 3, 5, 9):
    t = eval_phase([PhaseTerm(1, 2, alpha)], n)
    print(n, f"phase={float(t):.4f}", "in S" if member(n, sched, alpha) else "not in S")

# %%
S = enumerate_S(sched, alpha, 1 << 18)
print("first terms:", S[:12].tolist())
print(f"density up to 2^18: {len(S) / 2**18:.4f}")

# %% [markdown]
# The averages of cos(2 pi n^2 alpha) over S jump between the end of a first
# half-block and the end of the following second half.

# %%
for r in divergence_gap(sched, alpha, 2, range(5, 11)):
    print(f"j={r.j:2d}  N={r.N_lo:>8d}..{r.N_hi:<8d} gap={r.gap:.4f}")
print(f"lower bound {GAP_LIMIT:.4f}, equidistribution limit {GAP_EXACT_LIMIT:.4f}")

# %%
# control: the constant weight 1/4 instead of the indicator of S
ctrl = divergence_gap(sched, alpha, 2, range(5, 11), weights=0.25)
print("control gaps:", np.round([r.gap for r in ctrl], 5).tolist())
