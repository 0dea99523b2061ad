"""
Boundary conditions at the faces of the third coordinate.

At a boundary face ``e_3`` is the unit normal and ``e_1, e_2`` are tangent
to it. The imposed conditions are

    K_A3 = 0,   G_A3B = G_AB3 = 0      (A, B in {1, 2})

which is six stored components: ``K13, K23, G113, G123, G213, G223``. The
conditions make the boundary term of the energy estimate non-positive.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import product

import numpy as np

from .geometry import frame_derivatives, momentum_kernel
from .hyperbolicity import VARIABLES, WEIGHTS, _pack
from .state import StateField

# stored slots set to zero on the faces: K6 indices and (i, pair) of G9
K_SLOTS = (3, 4)
G_SLOTS = ((0, 1), (0, 2), (1, 1), (1, 2))
BDCOND_VARIABLES = ("K13", "K23", "G113", "G123", "G213", "G223")
FACES = ("lower", "upper")


def _face_index(state: StateField, face: str) -> int:
    return 0 if face == "lower" else state.grid.n[2] - 1


def impose_bdcond(state: StateField, faces=FACES) -> StateField:
    """Zero the boundary components on the requested faces, in place."""
    if state.grid.periodic[2]:
        raise ValueError("boundary conditions need a bounded third axis")
    for face in faces:
        k = _face_index(state, face)
        for s in K_SLOTS:
            state.K6[s, :, :, k] = 0.0
        for i, p in G_SLOTS:
            state.G9[i, p, :, :, k] = 0.0
    return state


def bdcond_violation(state: StateField, faces=FACES) -> float:
    out = 0.0
    for face in faces:
        k = _face_index(state, face)
        vals = [state.K6[s, :, :, k] for s in K_SLOTS] + [state.G9[i, p, :, :, k] for i, p in G_SLOTS]
        out = max(out, float(np.abs(np.array(vals)).max()))
    return out


# ------------------------------------------------------------ boundary flux

def boundary_flux_integrand(K: np.ndarray, G: np.ndarray):
    """Cross term ``Q`` of the boundary flux with normal ``e_3``.

    ``Q = K_3j G_bjb - trK G_b3b - G_ij3 K_ij`` for full tensors ``K[i, j]``,
    ``G[i, j, b]`` (trailing axes allowed).
    """
    trK = np.einsum("ii...->...", K)
    q = np.einsum("j...,bjb...->...", K[2], G)
    q = q - trK * np.einsum("bb...->...", G[:, 2])
    q = q - np.einsum("ij...,ij...->...", G[:, :, 2], K)
    return q


def flux_form_value(K: np.ndarray, G: np.ndarray):
    """Full boundary flux ``-|K|^2/2 - |G|^2/4 + Q``."""
    kk = np.einsum("ij...,ij...->...", K, K)
    gg = np.einsum("ijb...,ijb...->...", G, G)
    return -0.5 * kk - 0.25 * gg + boundary_flux_integrand(K, G)


def _flux_exact(u, energy: bool) -> Fraction:
    # brute-force index sums in exact arithmetic
    K = [[Fraction(0)] * 3 for _ in range(3)]
    G = [[[Fraction(0)] * 3 for _ in range(3)] for _ in range(3)]
    for k, name in enumerate(VARIABLES):
        idx = [int(c) - 1 for c in name[1:]]
        if name[0] == "K":
            i, j = idx
            K[i][j] = K[j][i] = u[k]
        else:
            i, j, b = idx
            G[i][j][b] = u[k]
            G[i][b][j] = -u[k]
    r3 = range(3)
    trK = sum(K[i][i] for i in r3)
    q = sum(K[2][j] * G[b][j][b] for j in r3 for b in r3)
    q -= trK * sum(G[b][2][b] for b in r3)
    q -= sum(G[i][j][2] * K[i][j] for i in r3 for j in r3)
    if energy:
        q -= Fraction(1, 2) * sum(K[i][j] ** 2 for i, j in product(r3, r3))
        q -= Fraction(1, 4) * sum(G[i][j][b] ** 2 for i, j, b in product(r3, r3, r3))
    return q


def flux_form_matrix(energy: bool = True, exact: bool = False):
    """Symmetric matrix of the boundary flux as a quadratic form in the 15 variables.

    Entries are rationals built by polarization of the exact quadratic form.
    With ``energy=False`` only the cross term ``Q`` is represented.
    """
    n = len(VARIABLES)
    e = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    diag = [_flux_exact(e[k], energy) for k in range(n)]
    M = [[Fraction(0)] * n for _ in range(n)]
    for k in range(n):
        M[k][k] = diag[k]
        for l in range(k + 1, n):
            both = _flux_exact([a + b for a, b in zip(e[k], e[l])], energy)
            M[k][l] = M[l][k] = (both - diag[k] - diag[l]) / 2
    if exact:
        return M
    return np.array([[float(v) for v in row] for row in M])


def random_bdcond_vector(rng: np.random.Generator) -> np.ndarray:
    """A random 15-vector satisfying the boundary conditions."""
    u = rng.standard_normal(len(VARIABLES))
    for name in BDCOND_VARIABLES:
        u[VARIABLES.index(name)] = 0.0
    return u


def vector_to_tensors(u: np.ndarray):
    return _pack(np.asarray(u, dtype=float))


ENERGY_WEIGHTS = WEIGHTS  # |K|^2 + |G|^2/2 multiplicities, shared with the symmetrizer


# ------------------------------------------------------------ corner checks

CORNER_NAMES = ("conn_1", "conn_2", "K22", "K11", "K12")


def corner_residuals_from_tensors(K, G, eK, eG) -> np.ndarray:
    """The five corner compatibility residuals, pointwise.

    Tangential sums run over ``{1, 2}``; ``e_3`` derivatives come from the
    caller.
    """
    T = slice(0, 2)
    out = []
    for A in range(2):
        r = np.einsum("BB...->...", eG[2, T, A, T])
        r = r - np.einsum("BB...->...", eG[T, 2, A, T])
        r = r + np.einsum("bbC...,C...->...", G[:, :, T], G[2, A, T])
        out.append(r)
    out.append(eK[2, 1, 1] + 2.0 * np.einsum("C...,C...->...", G[2, 0, T], K[0, T]))
    out.append(eK[2, 0, 0] + 2.0 * np.einsum("C...,C...->...", G[2, 1, T], K[1, T]))
    out.append(eK[2, 0, 1] - np.einsum("C...,C...->...", G[2, 0, T], K[1, T])
               - np.einsum("C...,C...->...", G[2, 1, T], K[0, T]))
    return np.array(out)


def corner_residuals(state: StateField, faces=FACES) -> dict[str, np.ndarray]:
    """Corner residuals at the face nodes of the given (initial) state.

    Returns, per face, an array of shape ``(5, n1, n2)`` ordered as
    :data:`CORNER_NAMES`.
    """
    d = frame_derivatives(state, with_frame=False)
    K, G = state.K(), state.G()
    out = {}
    for face in faces:
        k = _face_index(state, face)
        out[face] = corner_residuals_from_tensors(K[..., k], G[..., k], d.eK[..., k], d.eG[..., k])
    return out


def corner_residuals_angle(k_tan, hess_normal, omega, k_normal, domega) -> tuple[np.ndarray, np.ndarray]:
    """Corner residuals when the boundary meets the slice at hyperbolic angle ``omega``.

    ``k_tan[X, Y]`` and ``hess_normal[X, Y]`` are the tangential components of
    the second fundamental form and of ``h(nabla_X N, Y)``; ``k_normal[X]`` is
    ``k(X, N)`` and ``domega[X]`` the tangential derivative of the angle.
    Returns the two residual arrays, which vanish for compatible data.
    """
    k_tan = np.asarray(k_tan, dtype=float)
    hess_normal = np.asarray(hess_normal, dtype=float)
    r1 = k_tan * np.sinh(omega) - hess_normal * np.cosh(omega)
    r2 = np.asarray(k_normal, dtype=float) - np.asarray(domega, dtype=float)
    return r1, r2


def ricci_boundary_check(state: StateField, faces=FACES) -> float:
    """Largest ``|Ric(e_3, e_0)|`` over the face nodes."""
    d = frame_derivatives(state, with_frame=False)
    M3 = momentum_kernel(state.K(), state.G(), d.eK)[2]
    return max(float(np.abs(M3[..., _face_index(state, f)]).max()) for f in faces)
