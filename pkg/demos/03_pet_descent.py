"""PET descent on polynomial families and where random families blow up."""

# %%
import random

from ergolab.pet import HPoly, HPolyFamily, PETGuardError, delta_iter, pet_run, random_family

print(pet_run(HPolyFamily.parse("{n; 2n}")).format())

# %%
tr = pet_run(HPolyFamily.parse("{n^2; 2n^2}"))
print(tr.format())
print("strictly descending:", tr.strictly_descending())

# %% [markdown]
# Differencing n^(l d) + n^d exactly l d - 1 times leaves a polynomial linear in n.

# %%
for l, d in ((2, 1), (2, 2), (3, 1)):
    p = HPoly.n() ** (l * d) + HPoly.n() ** d
    q = delta_iter(p, l * d - 1)
    print(f"l={l} d={d}: degree {q.n_degree()}  {q}")

# %% [markdown]
# Families with a cubic member grow quickly.  The number of distinct linear
# leading coefficients is a lower bound on the steps still needed.

# %%
rng = random.Random(0)
for _ in range(8):
    fam = random_family(rng)
    try:
        steps = len(pet_run(fam, max_steps=50, max_members=500).steps)
        print(f"{str(fam):60s} {steps} steps")
    except PETGuardError as exc:
        print(f"{str(fam):60s} stopped after {exc.steps}, needs >= {exc.min_total_steps}")
