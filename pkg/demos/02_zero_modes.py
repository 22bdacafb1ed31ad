"""Analytic zero modes f(z) exp(-lambda) in a uniform field.

Only one pseudospin branch decays; the other grows like exp(+|B0| r^2/4).
"""

import math

from graphene_zeromodes.field import FieldProfile, Grid, gauge_from_lambda, solve_lambda
from graphene_zeromodes.modes import (
    build_mode,
    count_modes_constant_asymptotics,
    dirac_residual,
    gram_matrix,
    mode_certificates,
    norm_squared,
    overlap,
    valley_pair_state,
)

grid = Grid(10.0, 192)
lam = solve_lambda(FieldProfile("uniform", 1.0), grid)
A = gauge_from_lambda(lam)

print(" j   residual     norm (grid)   2pi 2^j j!")
for j in range(5):
    m = build_mode(j, lam, gamma=-1)
    print(f"{j:2d}   {dirac_residual(m, A):.2e}    {norm_squared(m, 9.5):.8f}   {2 * math.pi * 2**j * math.factorial(j):.8f}")

# The other sign: norm keeps growing with the disk.
bad = build_mode(0, lam, gamma=+1)
print("gamma=+1, norm(6)/norm(3) =", norm_squared(bad, 6.0) / norm_squared(bad, 3.0))

# Every degree is certified, so the count grows with jmax.
for jmax in (3, 10, 30):
    print(f"jmax={jmax:2d}: {count_modes_constant_asymptotics(1.0, jmax)} certified modes")
print("largest certificate ratio error:", max(abs(c["ratio"] - 1) for c in mode_certificates(1.0, 30)))

# Valley-pair superpositions for opposite field signs share no slot.
print("<pair(+)|pair(-)> =", overlap(valley_pair_state(1, lam), valley_pair_state(-1, lam)))
G = gram_matrix([build_mode(j, lam, -1) for j in range(4)], 9.5)
print("Gram diagonal:", [round(G[i, i].real, 6) for i in range(4)])
