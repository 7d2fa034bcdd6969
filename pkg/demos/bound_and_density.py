"""Observed trace counts against the compressed count and the explicit bound
on random trees, and the density fit for x = y1 or x = y2."""

import itertools
import math
import random

from msovc.compiler import Compiler
from msovc.compression import sci, verify_bound
from msovc.corpus import bound_formulas
from msovc.logic.parser import parse_formula
from msovc.logic.semantics import Evaluator, define_set_system
from msovc.logic.syntax import PartitionedFormula
from msovc.setsys import fit_density, growth_function
from msovc.structures import Graph, random_tree

rng = random.Random(1)
comp = Compiler(["a", "b"])
for pf in bound_formulas():
    order = list(pf.x + pf.y)
    A = comp.compile(pf.formula, order)
    t = random_tree(9, ["a", "b"], rng)
    table = Evaluator(t).table(pf.formula, order)
    worst = max((verify_bound(A, t, S, x=pf.x, y=pf.y, table=table)
                 for S in itertools.combinations(t.domain, 2)), key=lambda r: r.observed)
    print(f"{str(pf.formula)[:40]:40s} |A|=2 observed={worst.observed} compressed={worst.compressed} "
          f"bound={sci(worst.bound)}")

alpha = PartitionedFormula(parse_formula("(or (= x y1) (= x y2))"), ("x",), ("y1", "y2"))
pts = [(N, growth_function(define_set_system(Graph.from_edges(range(N), []).structure(), alpha), N).value)
       for N in range(4, 10)]
assert all(p == N + math.comb(N, 2) for N, p in pts)
print("growth", pts, "fitted exponent", round(fit_density(pts).exponent, 3))
