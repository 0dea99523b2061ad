"""Principal symbol, characteristic speeds and the boundary flux.

Prints the speeds of the linearized system along a few directions, the
split into variables that do or do not carry normal derivatives, and the
spectrum of the boundary flux form. The flux form is never positive, and
its cross term vanishes identically once the six boundary components are
set to zero.

    python demos/symbol_and_flux.py
"""

import numpy as np

from geoadm import boundary as bd
from geoadm import hyperbolicity as hy

sym = hy.assemble_symbol()
print("largest |M - M^T| entry:", sym.asymmetry()[0])
for xi in ([0, 0, 1], [1, 0, 0], np.array([1, 2, 2]) / 3):
    speeds = hy.characteristic_speeds(xi, sym)
    print(f"xi = {np.round(xi, 3)}: speeds", np.round(speeds, 4) + 0.0)

gb = hy.classify_good_bad(sym)
print("\nalong e_3 the good combinations pair up as")
for name, ((partner, coef),) in gb["partners"].items():
    print(f"  e_0 {name:10s} ~ {coef:+.2f} e_3 {partner}")
print("no normal derivative acts on:", ", ".join(gb["bad"]))

M = bd.flux_form_matrix()
lam = np.linalg.eigvalsh(M)
print("\nflux form eigenvalues:", np.round(lam, 3) + 0.0)
rng = np.random.default_rng(1)
q = [bd.boundary_flux_integrand(*bd.vector_to_tensors(bd.random_bdcond_vector(rng))) for _ in range(5)]
print("cross term on admissible boundary states:", [float(v) for v in q])
print("symbol vs right-hand side Jacobian mismatch:", hy.symbol_jacobian_mismatch())
