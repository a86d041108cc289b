"""Symbolic reference values frozen into the C++ unit tests.

Run with `python3 derive_values.py`; every printed number appears verbatim in
tests/*.cpp. The derivations use sympy only and share no code with the
library.
"""
import sympy as sp

x, y, z = sp.symbols("x y z", real=True)
X = sp.Matrix([x, y, z])


def curl(w):
    return sp.Matrix([
        sp.diff(w[2], y) - sp.diff(w[1], z),
        sp.diff(w[0], z) - sp.diff(w[2], x),
        sp.diff(w[1], x) - sp.diff(w[0], y),
    ])


def div(v):
    return sum(sp.diff(v[i], X[i]) for i in range(3))


def report(name, w, pts):
    c = curl(w)
    h = sp.simplify(w.dot(c))
    b = w.cross(c)
    charge = 4 * div(b)
    print(f"[{name}] h = {h}")
    for p in pts:
        sub = dict(zip((x, y, z), p))
        print(f"  at {p}: h = {sp.N(h.subs(sub), 17)}, "
              f"b = {[sp.N(bi.subs(sub), 17) for bi in b]}, "
              f"charge = {sp.N(charge.subs(sub), 17)}")
    return h, b, charge


beltrami = sp.Matrix([sp.cos(z) + sp.sin(z), sp.cos(z) - sp.sin(z), 0])
spiral = sp.Matrix([sp.cos(z) - sp.sin(y), -sp.sin(z), sp.cos(y)])
antisym = sp.Matrix([1, sp.sin(x) + sp.cos(y), sp.cos(x)])
unit_norm = sp.Matrix([sp.cos(y), sp.cos(x), sp.sin(y)]) / sp.sqrt(1 + sp.cos(x) ** 2)
lam = sp.sqrt(1 + sp.cos(x) ** 2)
C = z - sp.cos(x) - sp.cos(y)
grad_c = sp.Matrix([sp.diff(C, v) for v in (x, y, z)])
lambda_grad = lam * grad_c

gamma, sigma, c = 1, sp.Rational(1, 2), sp.Rational(1, 2)
r2 = x**2 + y**2 + z**2
ll = sp.Matrix([c + sigma * z * y / r2, sigma * z * (c - x) / r2, z - sigma * c * y / r2])

report("beltrami", beltrami, [(0, 0, 0), (0.3, -1.1, 0.9)])
hs, _, _ = report("spiral", spiral, [(0, 0, 0), (0.4, 1.3, -0.8)])
print("  spiral curl - w =", sp.simplify(curl(spiral) - spiral).T)
report("antisym", antisym, [(sp.pi / 2, 0, 0), (0, 0, 0)])
report("unit_norm", unit_norm, [(0.7, 0.3, 0), (1.2, -0.4, 0.5)])
report("landau_lifshitz", ll, [(0.3, 0.4, 1.5), (-0.7, 0.2, 0.9)])

# cocurrent of lambda_grad_casimir on g = 1: c = curl(w)
cc = curl(lambda_grad)
print("[lambda_grad_casimir] cocurrent(g=1) at (0.7,0.3,0.2) =",
      [sp.N(v.subs({x: 0.7, y: 0.3, z: 0.2}), 17) for v in cc])
print("  cocurrent(g=1/lambda) =", sp.simplify(curl(lambda_grad / lam)).T)

# 2D closure oracle: J^{12} = 1 + x1, omega = J^{-1}, expression (BI2)
x1, x2 = sp.symbols("x1 x2", real=True)
Jm = sp.Matrix([[0, 1 + x1], [-(1 + x1), 0]])
om = Jm.inv()
coords = [x1, x2]
a = [sum(sp.diff(Jm[l, m], coords[l]) for l in range(2)) for m in range(2)]
expr = []
for k in range(2):
    for n in range(2):
        e = 0
        for m in range(2):
            e += (sp.diff(om[k, m], coords[n]) - sp.diff(om[n, m], coords[k])) * a[m]
            e += om[k, m] * sp.diff(a[m], coords[n]) - om[n, m] * sp.diff(a[m], coords[k])
        expr.append(sp.simplify(e))
print("[closure 2D] omega12 =", om[0, 1], " expression =", expr)

# 4D closure: J^{12} = exp(x1*x3), J^{34} = 1 gives A = -x3 dx1, dA = -dx3^dx1
y1, y2, y3, y4 = q = sp.symbols("y1:5", real=True)
J4 = sp.zeros(4)
J4[0, 1], J4[1, 0] = sp.exp(y1 * y3), -sp.exp(y1 * y3)
J4[2, 3], J4[3, 2] = 1, -1
om4 = J4.inv()
a4 = [sum(sp.diff(J4[l, m], q[l]) for l in range(4)) for m in range(4)]
A4 = [sp.simplify(sum(om4[k, m] * a4[m] for m in range(4))) for k in range(4)]
print("[closure 4D exp(x1 x3)] A =", A4,
      " max |dA| =", max(abs(sp.simplify(sp.diff(A4[k], q[n]) - sp.diff(A4[n], q[k])))
                         for k in range(4) for n in range(4)))
J4b = sp.zeros(4)
J4b[0, 1], J4b[1, 0] = sp.exp(y2), -sp.exp(y2)
J4b[2, 3], J4b[3, 2] = 1, -1
om4b = J4b.inv()
a4b = [sum(sp.diff(J4b[l, m], q[l]) for l in range(4)) for m in range(4)]
A4b = [sp.simplify(sum(om4b[k, m] * a4b[m] for m in range(4))) for k in range(4)]
print("[closure 4D exp(x2)] A =", A4b)

# Euler rigid body operator apply: x cross theta
print("[euler] (1,2,3) x (1,1,1) =", sp.Matrix([1, 2, 3]).cross(sp.Matrix([1, 1, 1])).T)
