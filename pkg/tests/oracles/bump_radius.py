"""Zero radius of g(r) = 1 - 2 (1 - 4 r^2)^2 on r < 1/2."""
import sympy as sp

r = sp.symbols("r", positive=True)
sol = [s for s in sp.solve(sp.Eq(1 - 2 * (1 - 4 * r ** 2) ** 2, 0), r) if s < sp.Rational(1, 2)]
print(sol, [sp.N(s, 20) for s in sol])
