"""Independent reference values for the geometry and color tests.

Run with python3; the printed numbers are frozen into tests/*.cpp.
"""
import math
from mpmath import mp, mpf, atan, tan, sqrt, sin, cos, findroot, radians

mp.dps = 40

# sRGB -> Lab (D65) through skimage as an independent converter.
import numpy as np
from skimage.color import rgb2lab
for v in (119,):  # a, b are not exactly zero for the D65 white point
    lab = rgb2lab(np.array([[[v, v, v]]], dtype=np.uint8))[0, 0]
    print("lab gray", v, repr(float(lab[0])), repr(float(lab[1])), repr(float(lab[2])))

m, n, alpha = 375, 1242, radians(60)
diag = sqrt(mpf(m - 1) ** 2 + mpf(n - 1) ** 2)
delta = atan((m - 1) / diag * tan(alpha))
omega = atan((n - 1) / diag * tan(alpha))
print("delta", mp.nstr(delta, 20), "omega", mp.nstr(omega, 20))

theta = radians(3)
def denom(ix):
    u = 1 - 2 * (ix - 1) / mpf(m - 1)
    return tan(theta) - u * tan(delta)
hz = findroot(denom, mpf(150))
print("hz", mp.nstr(hz, 20))

h = mpf("1.55")
ix, iy = mpf(m), mpf(1)
u = 1 - 2 * (ix - 1) / mpf(m - 1)
v = 1 - 2 * (iy - 1) / mpf(n - 1)
x = h * (1 + u * tan(delta) * tan(theta)) / (tan(theta) - u * tan(delta))
y = h * v * tan(omega) / (sin(theta) - u * tan(delta) * cos(theta))
print("ground", mp.nstr(x, 20), mp.nstr(y, 20))
