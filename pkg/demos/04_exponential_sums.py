"""Golden-mean Weyl sums against explicit bounds, plus van der Corput on random data."""

# %%
import numpy as np

from ergolab.expsums import (
    bad_approximation_check,
    check_bsg,
    check_gsb,
    gsb_base_case,
    gsb_constant,
    pkey_threshold_scan,
    vdc_check,
)

print("C(b):", [round(gsb_constant(b), 3) for b in range(1, 9)])
print("strict C(b):", [round(gsb_constant(b, strict=True), 3) for b in range(1, 9)])

# %%
print("bad approximation:", bad_approximation_check()["holds"])
rep = gsb_base_case(50, 20000)
print(f"|sum e(m n alpha)| / 1.5m <= {rep['max_ratio']:.3f}")

# %%
for b in (2, 3):
    rep = check_gsb(1, 1 << 14, b)
    print(f"b={b}: max |sum| = {rep['max_abs']:.1f}, bound = {rep['bound']:.1f}")

# %%
rep = check_bsg(1, 1, 2, 1 << 14)
for row in rep["rows"][:6]:
    print(f"{row['beta']:>12s} case {row['case']}  s={row['s']:<10d} exponent {row['exponent']:.3f}")
print("threshold", round(rep["threshold"], 4))

# %%
scan = pkey_threshold_scan(2, 1, 1, [1 << k for k in range(6, 15)])
print("N0 for b=2, g=1:", scan["N0"])

# %%
rng = np.random.default_rng(0)
v = np.exp(2j * np.pi * rng.random(500))
print("van der Corput (lhs, rhs, holds):", vdc_check(v, 22))
