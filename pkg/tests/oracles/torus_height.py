"""Critical points of z on the torus of revolution about the y axis (R=2, r=1).

Parametrize (x, y, z) = ((R + r cos v) cos u, r sin v, (R + r cos v) sin u); the
height z has critical points where both partials vanish.
"""
import sympy as sp

u, v = sp.symbols("u v", real=True)
R, r = 2, 1
z = (R + r * sp.cos(v)) * sp.sin(u)
sols = sp.solve([sp.diff(z, u), sp.diff(z, v)], [u, v], dict=True)
pts = sorted({float(z.subs(s)) for s in sols})
print(pts)
