"""Which injected negative-sequence currents reveal a fault?

Line and load impedance 30 + j35, fault path 26 + j x_f.  Each node of a
41 x 41 grid over the complex plane is checked for separability.  The
closer the fault path is to the healthy line, the larger the hole of
useless signals around the origin.
"""

from auxsignal import feasibility_grid, case_study_spec
from auxsignal.distance import FEASIBLE

for x_f in (25.0, 35.0):
    g = feasibility_grid(case_study_spec(x_f))
    print(f"x_f = {x_f}: {g.n_feasible} of {g.states.size} signals separable")
    # coarse picture: '#' separable, '.' not
    for i in range(0, 41, 4):
        print("   " + "".join("#" if g.states[i, j] == FEASIBLE else "." for j in range(0, 41, 2)))

    spec = case_study_spec(x_f)
    gap = abs(complex(spec.z_minus) - complex(spec.z_fault))
    print(f"   smallest separable |theta| is 2/|z_- - z_f| = {2 / gap:.4f}\n")

