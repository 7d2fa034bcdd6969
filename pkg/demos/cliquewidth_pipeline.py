"""Set systems on random bounded-cliquewidth graphs, computed on the parse
tree by a compiled automaton and compared with direct model checking."""

import random
import time

from msovc.corpus import graph_formulas, random_kexpression
from msovc.logic.semantics import define_set_system
from msovc.width import check_on_cliquewidth

rng = random.Random(0)
for pf in graph_formulas()[:4]:
    for _ in range(3):
        e = random_kexpression(rng.randint(3, 12), rng.randint(1, 3), rng)
        t0 = time.perf_counter()
        F = check_on_cliquewidth(pf, e)
        elapsed = time.perf_counter() - t0
        same = F == define_set_system(e.eval().structure(), pf, reach="direct")
        print(f"{str(pf.formula):38.38s} k={e.k} |V|={e.leaves():2d} sets={len(F):3d} "
              f"vc={F.vc_dimension()} agrees={same} ({elapsed:.2f}s)")
