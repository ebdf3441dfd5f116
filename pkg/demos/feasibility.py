"""Print the feasibility verdict for a sweep of homogeneous spaces.

For each (kappa, tau) the audit says whether a non-CMC surface with
holomorphic Abresch-Rosenberg differential can exist, and if so in which
range H must lie.
"""

from homsurf import SpaceParams
from homsurf.differentials import feasibility_audit
from homsurf.space import classify

spaces = [(-1, 0), (-1, -0.3), (-4, 0.5), (0, 1), (1, 1), (6, 1), (8, 1), (9, 1), (1, 0)]
for kappa, tau in spaces:
    verdict = feasibility_audit(SpaceParams(kappa, tau))
    interval = verdict.allowed_H_interval
    extra = f"  |H| < {interval[1]:.4f}" if interval else ""
    print(f"({kappa:>3}, {tau:>4}) {classify(SpaceParams(kappa, tau)).value:<18} {verdict.tag.value:<13}{extra}")
    print(f"             {verdict.citation}")
