"""Reference values for the core integration tests.

Run with numpy and scipy installed; the printed values are frozen in the
Rust tests. The ANOVA sums of squares are computed from explicit cell and
marginal means rather than a library routine.
"""
import numpy as np
from scipy import stats

rng = np.random.default_rng(20240611)

# 12 participants x orientation(V,H) x configuration(Flat,Curved)
subj = rng.normal(0.0, 0.4, size=12)
y = np.empty((12, 2, 2))
for i in range(12):
    for a in range(2):
        for b in range(2):
            y[i, a, b] = 2.0 + subj[i] + 0.35 * a + 0.1 * b + 0.15 * a * b + rng.normal(0, 0.3)
y = np.round(y, 4)

with open("anova_12x2x2.csv", "w") as f:
    f.write("participant,vertical_flat,vertical_curved,horizontal_flat,horizontal_curved\n")
    for i in range(12):
        f.write(f"P{i+1:03d},{y[i,0,0]},{y[i,0,1]},{y[i,1,0]},{y[i,1,1]}\n")

p = 12
g = y.mean()
s = y.mean(axis=(1, 2))
a = y.mean(axis=(0, 2))
b = y.mean(axis=(0, 1))
ab = y.mean(axis=0)
sa = y.mean(axis=2)
sb = y.mean(axis=1)
ss_s = 4 * ((s - g) ** 2).sum()
ss_a = 2 * p * ((a - g) ** 2).sum()
ss_b = 2 * p * ((b - g) ** 2).sum()
ss_ab = p * ((ab - a[:, None] - b[None, :] + g) ** 2).sum()
ss_as = 2 * ((sa - s[:, None] - a[None, :] + g) ** 2).sum()
ss_bs = 2 * ((sb - s[:, None] - b[None, :] + g) ** 2).sum()
res = y - sa[:, :, None] - sb[:, None, :] - ab[None] + s[:, None, None] + a[None, :, None] + b[None, None, :] - g
ss_abs = (res ** 2).sum()
err = ss_s + ss_as + ss_bs + ss_abs
for name, eff, e in [("A", ss_a, ss_as), ("B", ss_b, ss_bs), ("AB", ss_ab, ss_abs)]:
    F = eff / (e / (p - 1))
    print(name, repr(F), repr(stats.f.sf(F, 1, p - 1)), repr(eff / (eff + err)))
print("SS", repr(ss_s), repr(ss_a), repr(ss_b), repr(ss_ab), repr(ss_as), repr(ss_bs), repr(ss_abs))

sw = np.round(rng.gamma(2.0, 1.5, size=20), 3)
r = stats.shapiro(sw)
print("SW_DATA", list(sw))
print("SW", repr(float(r.statistic)), repr(float(r.pvalue)))
sw2 = np.round(rng.normal(5, 2, size=11), 3)
r = stats.shapiro(sw2)
print("SW2_DATA", list(sw2))
print("SW2", repr(float(r.statistic)), repr(float(r.pvalue)))

x = np.round(rng.normal(10, 2, size=12), 3)
z = np.round(x + rng.normal(0.8, 1.0, size=12), 3)
r = stats.ttest_rel(x, z)
print("T_X", list(x))
print("T_Y", list(z))
print("T", repr(float(r.statistic)), repr(float(r.pvalue)))

lam_f = 0.403
for n in (9, 10):
    lam = lam_f ** 2 * n * 4 / 0.5
    crit = stats.f.isf(0.05, 3, 3 * (n - 1))
    print("POWER", n, repr(float(stats.ncf.sf(crit, 3, 3 * (n - 1), lam))))
print("NCF", repr(float(stats.ncf.sf(2.5, 3.0, 17.0, 6.3))), repr(float(stats.ncf.sf(1.2, 1.5, 40.0, 0.7))))
