"""Convergence study with a manufactured solution.

The trig recipe is not a solution of the equations, so the evolution is
forced with the source d_t X - F(X) computed from the closed form. Halving
the grid spacing (and the time step with it) should reduce the error by
about 2^4.

    python demos/mms_convergence.py
"""

import numpy as np

from geoadm.evolution import evolve
from geoadm.scenarios import mms
from geoadm.state import Grid

errors = []
for n in (8, 16, 32):
    grid = Grid((n, n, n), (1 / n,) * 3)
    problem = mms(grid, "trig", t0=0.0, amplitude=0.05)
    run = evolve(problem.initial, 0.2, 0.25, source=problem.source)
    err = np.abs(run.final.data - problem.exact(run.final.t).data).max()
    errors.append(err)
    print(f"n = {n:3d}: max error {err:.3e}")
print("observed orders:", np.round(np.log2(np.array(errors[:-1]) / errors[1:]), 2))
