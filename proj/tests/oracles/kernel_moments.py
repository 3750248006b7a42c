"""Discrete kernel sums for the steerable bank at sigma=2, radius=8 (mpmath)."""
from mpmath import mp, mpf, exp, quad, inf
mp.dps = 30
s = mpf(2); R = 8
g = lambda x: exp(-x * x / s**2)
d2 = lambda x: (4 * x * x / s**4 - 2 / s**2) * g(x)
d4c = lambda x: (16 * x**4 / s**8 - 48 * x * x / s**6 + 12 / s**4) * g(x)
d4p = lambda x: (16 * x**4 / s**8 - 48 * x * x / s**6 - 12 / s**4) * g(x)
d1 = lambda x: (2 * x / s**2) * g(x)
for name, f in (("g", g), ("d1", d1), ("d2", d2), ("d4c", d4c), ("d4p", d4p)):
    disc = sum(f(mpf(i)) for i in range(-R, R + 1))
    mx = max(abs(f(mpf(i))) for i in range(-R, R + 1))
    print(name, mp.nstr(disc, 12), "max", mp.nstr(mx, 12), "integral", mp.nstr(quad(f, [-inf, inf]), 12))
# full 2-D sums: G2x = d2(x) g(y), G4x = d4(x) g(y)
G = sum(g(mpf(i)) for i in range(-R, R + 1))
print("2d ratio G2x", mp.nstr(sum(d2(mpf(i)) for i in range(-R, R+1)) * G / (abs(d2(0)) * 1), 12))
print("2d ratio G4x corrected", mp.nstr(sum(d4c(mpf(i)) for i in range(-R, R+1)) * G / abs(d4c(0)), 12))
print("2d ratio G4x printed", mp.nstr(sum(d4p(mpf(i)) for i in range(-R, R+1)) * G / abs(d4p(0)), 12))
