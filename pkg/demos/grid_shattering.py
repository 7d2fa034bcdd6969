"""Shattered sets on n x n grids, plus the same shattering pulled back to a
coloured grid graph and to a host containing the grid as a minor."""

from msovc.gridlab import colored_grid_graph, minor_grid_demo, pullback_demo, verify_shattering
from msovc.transduce import grid_recovery

for n, mode in ((2, "brute"), (4, "brute"), (4, "direct"), (8, "direct"), (16, "direct")):
    rep = verify_shattering(n, mode)
    print(f"grid {n:2d} ({mode:6s}): shattered {rep.size} objects, verdict {rep.verdict}, maximal {rep.maximal}")

rep = pullback_demo(grid_recovery().det, colored_grid_graph(4), "brute", 4)
print("pulled back to the coloured 4x4 grid graph:", rep.summary())

rep = minor_grid_demo(3)
print("host with a 3x3 grid minor:", rep.summary())
