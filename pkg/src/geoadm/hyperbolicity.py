"""
Principal symbol of the system linearized about the zero state.

The 15 variables of the linearized system are ordered as::

    K11 K12 K22 K13 K23 K33 G113 G223 G123 G213 G313 G323 G312 G112 G212

The principal part is ``d_t u = A^a e_a u``. Rows are weighted by the
multiplicities of the components in ``|K|^2 + |G|^2 / 2``; with that diagonal
symmetrizer ``H`` every ``H A^a`` is an integer symmetric matrix, which is what
:func:`assemble_symbol` returns.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import scipy.linalg

from .evolution import rhs_kernel
from .state import ANTI_PAIRS, SYM_PAIRS

VARIABLES = ("K11", "K12", "K22", "K13", "K23", "K33",
             "G113", "G223", "G123", "G213", "G313", "G323", "G312", "G112", "G212")
INDEX = {name: k for k, name in enumerate(VARIABLES)}
WEIGHTS = np.array([1, 2, 1, 2, 2, 1] + [1] * 9, dtype=float)

# (row, frame direction, column, coefficient) of the linearized equations
_RAW = [
    ("K11", 3, "G223", 1), ("K11", 2, "G323", -1),
    ("K12", 3, "G123", Fraction(-1, 2)), ("K12", 3, "G213", Fraction(-1, 2)),
    ("K12", 1, "G323", Fraction(1, 2)), ("K12", 2, "G313", Fraction(1, 2)),
    ("K22", 3, "G113", 1), ("K22", 1, "G313", -1),
    ("K13", 3, "G212", Fraction(1, 2)), ("K13", 2, "G123", Fraction(1, 2)),
    ("K13", 1, "G223", Fraction(-1, 2)), ("K13", 2, "G312", Fraction(-1, 2)),
    ("K33", 2, "G112", 1), ("K33", 1, "G212", -1),
    ("K23", 3, "G112", Fraction(-1, 2)), ("K23", 1, "G213", Fraction(1, 2)),
    ("K23", 2, "G113", Fraction(-1, 2)), ("K23", 1, "G312", Fraction(1, 2)),
    ("G113", 3, "K22", 1), ("G113", 2, "K23", -1),
    ("G223", 3, "K11", 1), ("G223", 1, "K13", -1),
    ("G123", 3, "K12", -1), ("G123", 2, "K13", 1),
    ("G213", 3, "K12", -1), ("G213", 1, "K23", 1),
    ("G313", 2, "K12", 1), ("G313", 1, "K22", -1),
    ("G323", 1, "K12", 1), ("G323", 2, "K11", -1),
    ("G312", 1, "K23", 1), ("G312", 2, "K13", -1),
    ("G112", 3, "K23", -1), ("G112", 2, "K33", 1),
    ("G212", 3, "K13", 1), ("G212", 1, "K33", -1),
]


class SymmetryError(ValueError):
    pass


@dataclass
class SymbolMatrix:
    """Symmetrized principal symbol ``M[a] = H A^a`` for frame directions ``a = 1, 2, 3``."""

    M: np.ndarray  # (3, 15, 15)
    H: np.ndarray = None

    def __post_init__(self):
        if self.H is None:
            self.H = WEIGHTS.copy()

    @property
    def A(self) -> np.ndarray:
        """Unsymmetrized principal part ``A^a = H^{-1} M[a]``."""
        return self.M / self.H[None, :, None]

    def contract(self, xi) -> np.ndarray:
        return np.einsum("a,akl->kl", np.asarray(xi, dtype=float), self.M)

    def asymmetry(self) -> tuple[float, tuple[int, int, int] | None]:
        """Largest ``|M - M^T|`` entry and its location ``(direction, row, col)``."""
        d = np.abs(self.M - np.swapaxes(self.M, 1, 2))
        if d.max() == 0:
            return 0.0, None
        a, k, l = np.unravel_index(int(np.argmax(d)), d.shape)
        return float(d.max()), (int(a) + 1, int(k), int(l))


def assemble_symbol(exact: bool = False):
    """Build the symmetrized symbol from the coefficient table.

    With ``exact=True`` the entries are returned as nested lists of
    :class:`fractions.Fraction`.
    """
    M = [[[Fraction(0)] * 15 for _ in range(15)] for _ in range(3)]
    for row, a, col, c in _RAW:
        r = INDEX[row]
        M[a - 1][r][INDEX[col]] += Fraction(c) * int(WEIGHTS[r])
    if exact:
        return M
    return SymbolMatrix(np.array([[[float(v) for v in r] for r in Ma] for Ma in M]))


def characteristic_speeds(xi, symbol: SymbolMatrix | None = None) -> np.ndarray:
    """Eigenvalues of ``A(xi)``, sorted, for a unit covector ``xi``.

    Raises :class:`SymmetryError` if the symmetrized symbol is not symmetric.
    """
    symbol = symbol or assemble_symbol()
    xi = np.asarray(xi, dtype=float)
    if abs(np.linalg.norm(xi) - 1.0) > 1e-12:
        raise ValueError("covector must have unit length")
    err, where = symbol.asymmetry()
    if err > 0:
        raise SymmetryError(f"symbol not symmetric at direction/row/col {where}")
    return np.sort(scipy.linalg.eigh(symbol.contract(xi), np.diag(symbol.H), eigvals_only=True))


# ---------------------------------------------------- good / bad structure

GOOD = ("K11", "K12", "K22", "K13", "K23", "G112", "G212", "G113", "G223", "G123+G213")
BAD = ("K33", "G313", "G323", "G312", "G123-G213")


def _combo_basis() -> np.ndarray:
    """Rows are the good then bad combinations in terms of the 15 variables."""
    rows = []
    for name in GOOD + BAD:
        v = np.zeros(15)
        if "+" in name or "-" in name[1:]:
            a, b = ("G123", "G213")
            v[INDEX[a]] = 1.0
            v[INDEX[b]] = 1.0 if "+" in name else -1.0
        else:
            v[INDEX[name]] = 1.0
        rows.append(v)
    return np.array(rows)


def classify_good_bad(symbol: SymbolMatrix | None = None, normal: int = 3) -> dict:
    """Check the split into variables with and without normal derivatives.

    In the combination variables, the normal-direction part of the symbol
    must not act on or produce the bad combinations, and every good equation
    must carry exactly one normal derivative of another good combination.
    """
    symbol = symbol or assemble_symbol()
    P = _combo_basis()
    A = symbol.A[normal - 1]
    # equations for combinations: P A P^{-1}
    An = P @ A @ np.linalg.inv(P)
    ng = len(GOOD)
    bad_rows = np.abs(An[ng:]).max()
    bad_cols = np.abs(An[:, ng:]).max()
    partners = {}
    for r in range(ng):
        nz = [c for c in range(ng) if abs(An[r, c]) > 1e-14]
        partners[GOOD[r]] = [(GOOD[c], float(An[r, c])) for c in nz]
    ok = bad_rows == 0 and bad_cols == 0 and all(len(v) == 1 for v in partners.values())
    return {"good": GOOD, "bad": BAD, "ok": bool(ok), "bad_rows_max": float(bad_rows),
            "bad_cols_max": float(bad_cols), "partners": partners, "normal_block": An}


# ---------------------------------------------------- symbol vs implementation

def _pack(u15: np.ndarray):
    K = np.zeros((3, 3))
    for k, (i, j) in enumerate(SYM_PAIRS):
        K[i, j] = K[j, i] = u15[k]
    G = np.zeros((3, 3, 3))
    for name in VARIABLES[6:]:
        i, j, b = (int(c) - 1 for c in name[1:])
        G[i, j, b] = u15[INDEX[name]]
        G[i, b, j] = -u15[INDEX[name]]
    return K, G


def _unpack(out33: np.ndarray) -> np.ndarray:
    u = np.zeros(15)
    u[:6] = out33[18:24]
    G9 = out33[24:33].reshape(3, 3)
    for name in VARIABLES[6:]:
        i, j, b = (int(c) - 1 for c in name[1:])
        u[INDEX[name]] = G9[i, ANTI_PAIRS.index((j, b))]
    return u


def implementation_principal_part(eps: float = 1e-5) -> np.ndarray:
    """``A^a`` obtained by differentiating the production right-hand side.

    The state is the zero state with identity frame; each frame derivative
    ``e_a u_col`` is perturbed by ``+-eps`` and the response of the
    right-hand side is differenced.
    """
    f = np.eye(3).reshape(3, 3, 1)
    Z2, Z3 = _pack(np.zeros(15))
    A = np.zeros((3, 15, 15))
    for a in range(3):
        for col in range(15):
            res = []
            for s in (eps, -eps):
                u = np.zeros(15)
                u[col] = s
                dK, dG = _pack(u)
                eK = np.zeros((3, 3, 3, 1))
                eG = np.zeros((3, 3, 3, 3, 1))
                eK[a, ..., 0] = dK
                eG[a, ..., 0] = dG
                out = rhs_kernel(f, f, Z2[..., None], Z3[..., None], eK, eG)[:, 0]
                res.append(_unpack(out))
            A[a, :, col] = (res[0] - res[1]) / (2 * eps)
    return A


def symbol_jacobian_mismatch(eps: float = 1e-5, symbol: SymbolMatrix | None = None) -> float:
    symbol = symbol or assemble_symbol()
    return float(np.abs(implementation_principal_part(eps) - symbol.A).max())


# ---------------------------------------------------- normal derivative recovery

def _to15(data33: np.ndarray) -> np.ndarray:
    """Map the K and G blocks of a 33-component array onto the 15 symbol variables."""
    out = np.empty((15,) + data33.shape[1:])
    out[:6] = data33[18:24]
    G9 = data33[24:33].reshape((3, 3) + data33.shape[1:])
    for name in VARIABLES[6:]:
        i, j, b = (int(c) - 1 for c in name[1:])
        out[INDEX[name]] = G9[i, ANTI_PAIRS.index((j, b))]
    return out


def normal_recovery(state, time_derivative: np.ndarray | None = None, normal: int = 3):
    """Recover normal derivatives of the good variables from time and tangential data.

    Every good equation contains exactly one normal derivative, of another
    good combination. Given ``e_0`` of the state (by default one evaluation of
    the right-hand side), that derivative is solved for from the equation
    with all normal derivatives removed.

    Returns ``(recovered, direct)``: dicts keyed by good combination with the
    recovered ``e_3`` derivative and the one computed by the grid stencils.
    """
    from .geometry import frame_derivatives

    d = frame_derivatives(state, with_frame=False)
    K, G = state.K(), state.G()
    full = rhs_kernel(state.f, state.finv, K, G, d.eK, d.eG)
    eK_t, eG_t = d.eK.copy(), d.eG.copy()
    eK_t[normal - 1] = 0.0
    eG_t[normal - 1] = 0.0
    tangential = rhs_kernel(state.f, state.finv, K, G, eK_t, eG_t)
    e0 = full if time_derivative is None else time_derivative

    P = _combo_basis()
    ng = len(GOOD)
    combo = lambda a: np.tensordot(P, _to15(a), axes=1)
    lhs = combo(e0) - combo(tangential)
    # direct normal derivatives of the combinations, from the stencils
    e3 = np.concatenate([np.stack([d.eK[normal - 1][i, j] for i, j in SYM_PAIRS]),
                         np.zeros((9,) + state.grid.shape)])
    for name in VARIABLES[6:]:
        i, j, b = (int(c) - 1 for c in name[1:])
        e3[INDEX[name]] = d.eG[normal - 1][i, j, b]
    e3_combo = np.tensordot(P, e3, axes=1)

    partners = classify_good_bad(normal=normal)["partners"]
    recovered, direct = {}, {}
    for r, name in enumerate(GOOD):
        (partner, coef), = partners[name]
        c = GOOD.index(partner)
        recovered[partner] = lhs[r] / coef
        direct[partner] = e3_combo[c]
    return recovered, direct
