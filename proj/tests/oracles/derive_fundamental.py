"""Symbolic oracle for u = N^-2 on the first Heisenberg group.

Regenerates heisenberg_fundamental.hpp: exact Euclidean gradient and Hessian of
u = ((x^2 + y^2)^2 + 16 t^2)^(-1/2), a spot value, and a check that the
sub-Laplacian X1^2 u + X2^2 u vanishes identically.

    python3 tests/oracles/derive_fundamental.py > tests/oracles/heisenberg_fundamental.hpp
"""
import sympy as sp

x, y, t = sp.symbols("x y t", real=True)
Q = (x**2 + y**2) ** 2 + 16 * t**2
u = Q ** sp.Rational(-1, 2)

X1 = lambda f: sp.diff(f, x) - y / 2 * sp.diff(f, t)
X2 = lambda f: sp.diff(f, y) + x / 2 * sp.diff(f, t)
assert sp.simplify(X1(X1(u)) + X2(X2(u))) == 0

v = (x, y, t)
grad = [sp.factor(sp.diff(u, a)) for a in v]
hess = [[sp.factor(sp.diff(u, a, b)) for b in v] for a in v]


def c(expr):
    return sp.ccode(expr).replace("pow(", "std::pow(").replace("sqrt(", "std::sqrt(")


spot = {x: sp.Rational(3, 10), y: sp.Rational(-7, 10), t: sp.Rational(2, 5)}
print("#pragma once")
print("// Generated by derive_fundamental.py; do not edit by hand.")
print()
print("#include <cmath>")
print()
print("namespace oracle {")
print()
print("inline double fundamental_u(double x, double y, double t) { return " + c(u) + "; }")
print()
print("inline void fundamental_gradient(double x, double y, double t, double* g) {")
for i, e in enumerate(grad):
    print(f"  g[{i}] = {c(e)};")
print("}")
print()
print("// Row-major 3x3.")
print("inline void fundamental_hessian(double x, double y, double t, double* h) {")
for i in range(3):
    for j in range(3):
        print(f"  h[{3 * i + j}] = {c(hess[i][j])};")
print("}")
print()
print("// Gradient at (0.3, -0.7, 0.4).")
print("inline constexpr double kSpotGradient[3] = {" +
      ", ".join(sp.N(e.subs(spot), 17).__str__() for e in grad) + "};")
print()
print("}  // namespace oracle")
