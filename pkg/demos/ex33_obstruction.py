"""Show why the implicit non-CMC construction in PSL(2,R) is not integrable.

The generator produces data with Q = 1 exactly and the node-local identities
satisfied, yet the compatibility residuals stay at O(1e-2) however fine the
grid. A coefficient that would have to vanish for a t-independent solution
is printed as well.
"""

import numpy as np

from homsurf import ConformalGrid, check_all
from homsurf.differentials import abresch_rosenberg
from homsurf.families import Example33Params, characteristic_obstruction, gen_example33

params = Example33Params()
print(f"kappa = {params.kappa}, tau = {params.tau}")
for h in (2e-3, 1e-3, 5e-4):
    data = gen_example33(params, ConformalGrid.from_extent((-0.05, 0.05), (0.0, 0.1), h))
    rep = check_all(data)
    q = abs(abresch_rosenberg(data).coeff.values - 1).max()
    worst = ", ".join(f"{eq} {rep.norms[eq]['max']:.2e}" for eq in ("C0", "C1", "C2", "C3", "Gauss"))
    print(f"h = {h:.0e}: |Q - 1| = {q:.1e}; {worst}")

H = np.linspace(-0.45, -0.05, 5)
print("obstruction coefficient on H =", np.round(H, 2), ":")
print(np.round(characteristic_obstruction(H, params.kappa, params.tau), 4))
