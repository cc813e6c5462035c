"""Independent evaluation of the small hand-sized cases frozen into the unit tests.

Pure Python (no project code); run with `python3 derived_values.py`.
"""
import math


def profile_from_slopes(u, length):
    n = len(u)
    dx = length / n
    h = [0.0]
    for s in u[:-1]:
        h.append(h[-1] + s * dx)
    m = sum(h) / n
    return [v - m for v in h]


def curvature(u, dx):
    n = len(u)
    w = [math.log(s) for s in u]
    return [(w[i] - w[i - 1]) / dx for i in range(n)]


u = [0.5, 1.5, 0.5, 1.5]
L, N = 1.0, 4
dx = L / N
h = profile_from_slopes(u, L)
lin = profile_from_slopes([1.0] * 4, L)
q = curvature(u, dx)
print("profile(u)      =", [repr(v) for v in h])
print("linear profile  =", [repr(v) for v in lin])
print("q               =", [repr(v) for v in q])
E = sum(s * math.log(s) * dx for s in u)
print("E               =", repr(E))
print("E(L=2,N=8,lin)  =", repr(sum(0.5 * math.log(0.5) * 0.25 for _ in range(8))))
phi = sum(dx * math.exp(-qi) for qi in q)
print("phi             =", repr(phi))
tv_slope = sum(abs(u[i] - u[i - 1]) for i in range(N))
print("TV slope        =", repr(tv_slope))
d2 = sum((a - b) ** 2 * dx for a, b in zip(h, lin))
print("||dh||^2        =", repr(d2))
print("moreau(tau=1)   =", repr(phi + 0.5 * d2))
print("tv_logslope     =", repr(sum(abs(v) * dx for v in q)))
print("pos mass        =", repr(sum(max(v, 0) * dx for v in q)))

# inverse-gap step forces, N=3, L=3
x = [0.0, 1.2, 2.0]
Ls = 3.0
n = 3
g = [x[1] - x[0], x[2] - x[1], x[0] + Ls - x[2]]  # g[i] = x_{i+1} - x_i
f = [-(1.0 / g[i] - 1.0 / g[i - 1]) for i in range(n)]
print("f               =", [repr(v) for v in f])
d2f = [f[(i + 1) % n] - 2 * f[i] + f[i - 1] for i in range(n)]
print("second diff f   =", [repr(v) for v in d2f])
print("bcf rhs (-N^2)  =", [repr(-n * n * v) for v in d2f])

print("bounds linear L=1:", repr(math.exp(-2)), repr(math.exp(2)), repr(2 * math.exp(2) + 1))
print("bounds linear L=2:", repr(math.exp(-4) / 2), repr(math.exp(4) / 2))
