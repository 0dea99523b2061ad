"""
Initial data: Kasner, perturbed Kasner slabs, data from a metric and second
fundamental form, and manufactured solutions.

Manufactured solutions are described symbolically (a *recipe*) and compiled
to numpy with :mod:`sympy`. The forcing term added to the discrete equations
is ``d_t X - F(X)`` evaluated on the recipe with exact derivatives.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import sympy as sp

from .evolution import rhs_kernel
from .state import (ANTI_PAIRS, SYM_PAIRS, Grid, StateField, compress_anti, compress_sym,
                    connection_from_frame, expand_anti, expand_sym)


class ScenarioError(ValueError):
    pass


def check_kasner_exponents(p, tol: float = 1e-12) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.shape != (3,):
        raise ScenarioError("Kasner exponents need three values")
    if abs(p.sum() - 1.0) > tol or abs((p * p).sum() - 1.0) > tol:
        raise ScenarioError(f"Kasner exponents {p.tolist()} violate sum p = sum p^2 = 1")
    return p


def minkowski(grid: Grid, t0: float = 0.0) -> StateField:
    return StateField.from_parts(grid, np.eye(3)[..., None, None, None],
                                 np.eye(3)[..., None, None, None], 0.0, 0.0, t0)


def kasner(grid: Grid, p, t0: float = 1.0) -> StateField:
    """Kasner slice at time ``t0`` in its diagonal frame."""
    p = check_kasner_exponents(p)
    if t0 <= 0:
        raise ScenarioError("Kasner data need t0 > 0")
    f = np.diag(t0 ** -p)[..., None, None, None]
    finv = np.diag(t0 ** p)[..., None, None, None]
    K6 = compress_sym(np.diag(p / t0))[:, None, None, None]
    return StateField.from_parts(grid, f, finv, K6, 0.0, t0)


def kasner_exact_K(p, t: float) -> np.ndarray:
    return np.diag(np.asarray(p, dtype=float) / t)


PROFILES: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    # s in [0, 1]; all vanish with their first derivatives at both ends
    "sin8": lambda s: np.sin(np.pi * s) ** 8,
    "sin6": lambda s: np.sin(np.pi * s) ** 6,
    "bump": lambda s: np.where(np.abs(2 * s - 1) < 1,
                               np.exp(1 - 1 / np.maximum(1 - (2 * s - 1) ** 2, 1e-300)), 0.0),
}


def perturbed_kasner(grid: Grid, p, t0: float = 1.0, amplitude: float = 0.01,
                     profile: str | Callable = "sin8") -> StateField:
    """Kasner data with ``K11 += a b(x3)`` and ``K22 -= a b(x3)``.

    ``b`` vanishes with its first derivatives on the faces of the third
    axis, so the boundary conditions and the corner conditions hold.
    """
    if grid.periodic[2]:
        raise ScenarioError("perturbed Kasner slab needs a bounded third axis")
    s = kasner(grid, p, t0)
    prof = PROFILES[profile] if isinstance(profile, str) else profile
    x3 = grid.coords()[2]
    b = prof((x3 - grid.origin[2]) / grid.lengths[2])
    s.K6[0] += amplitude * b
    s.K6[2] -= amplitude * b
    return s


def from_geometric_data(h: np.ndarray, k: np.ndarray, grid: Grid, t0: float = 0.0) -> StateField:
    """Frame data from a coordinate metric ``h[a, b]`` and second fundamental form ``k[a, b]``.

    The frame is Gram-Schmidt of ``(d_1, d_2, d_3)``: ``e_1, e_2`` span the
    coordinate planes of the first two axes, so ``e_3`` is the unit normal of
    every ``x3 = const`` surface.
    """
    shape = grid.shape
    h = np.broadcast_to(h, (3, 3) + shape)
    k = np.broadcast_to(k, (3, 3) + shape)
    hm = np.moveaxis(h, (0, 1), (-2, -1))
    try:
        L = np.linalg.cholesky(hm)
    except np.linalg.LinAlgError:
        lam = np.linalg.eigvalsh(hm)
        loc = tuple(int(v) for v in np.argwhere(lam.min(axis=-1) <= 0)[0])
        raise ScenarioError(f"metric is not positive definite at point {loc}") from None
    # h = finv^T finv with finv upper triangular, so the frame f = finv^-T is lower triangular
    finv = np.swapaxes(L, -1, -2)
    f = np.linalg.inv(L)
    f = np.moveaxis(f, (-2, -1), (0, 1))
    finv = np.moveaxis(finv, (-2, -1), (0, 1))
    K = np.einsum("ia...,jb...,ab...->ij...", f, f, k)
    s = StateField.from_parts(grid, f, finv, compress_sym(K), 0.0, t0)
    s.G9[...] = connection_from_frame(s)
    return s


def random_frame(grid: Grid, rng: np.random.Generator, amplitude: float = 0.1,
                 modes: int = 1, t0: float = 0.0) -> StateField:
    """Random smooth periodic frame with its Levi-Civita connection and a random ``K``.

    Each frame entry is the identity plus a sum of Fourier modes with wave
    numbers up to ``modes``; the amplitude keeps the frame well conditioned.
    """
    if not all(grid.periodic):
        raise ScenarioError("random frames are set up on periodic grids")
    x = grid.coords()
    L = grid.lengths

    def smooth():
        out = np.zeros(grid.shape)
        for _ in range(2):
            k = rng.integers(-modes, modes + 1, size=3)
            phase = 2 * np.pi * sum(k[a] * x[a] / L[a] for a in range(3))
            out += rng.uniform(-1, 1) * np.cos(phase + rng.uniform(0, 2 * np.pi))
        return out

    f = np.eye(3)[..., None, None, None] + amplitude * np.array([[smooth() for _ in range(3)]
                                                                 for _ in range(3)])
    fm = np.moveaxis(f, (0, 1), (-2, -1))
    finv = np.moveaxis(np.swapaxes(np.linalg.inv(fm), -1, -2), (-2, -1), (0, 1))
    K6 = amplitude * np.array([smooth() for _ in range(6)])
    s = StateField.from_parts(grid, f, finv, K6, 0.0, t0)
    s.G9[...] = connection_from_frame(s)
    return s


# ---------------------------------------------------------------- recipes

T, X1, X2, X3 = sp.symbols("t x1 x2 x3", real=True)
COORDS = (X1, X2, X3)


@dataclass
class Recipe:
    """Closed-form fields ``f``, ``K``, ``G`` as sympy expressions in ``t, x1, x2, x3``."""

    name: str
    f: sp.Matrix
    K: sp.Matrix
    G: list  # G[i][j][b], antisymmetric in j, b
    exact: bool = False
    _compiled: Callable | None = field(default=None, repr=False)

    def _exprs(self):
        vals = list(self.f) + [self.K[i, j] for i, j in SYM_PAIRS]
        vals += [self.G[i][j][b] for i in range(3) for j, b in ANTI_PAIRS]
        dt = [sp.diff(e, T) for e in vals]
        dx = [sp.diff(e, x) for x in COORDS for e in vals[9:]]
        return vals + dt + dx

    def compile(self):
        if self._compiled is None:
            self._compiled = sp.lambdify((T, X1, X2, X3), self._exprs(), modules="numpy", cse=True)
        return self._compiled

    def evaluate(self, t: float, grid: Grid) -> dict:
        """Values, time derivatives and coordinate gradients on the grid."""
        x1, x2, x3 = grid.coords()
        raw = self.compile()(t, x1, x2, x3)
        arr = np.array([np.broadcast_to(np.asarray(v, dtype=float), grid.shape) for v in raw])
        vals, dts, dxs = arr[:24], arr[24:48], arr[48:].reshape((3, 15) + grid.shape)
        f = vals[:9].reshape((3, 3) + grid.shape)
        fm = np.moveaxis(f, (0, 1), (-2, -1))
        # f[i, j] finv[b, j] = delta, so finv is the inverse transpose of f
        inv_m = np.linalg.inv(fm)
        df_m = np.moveaxis(dts[:9].reshape((3, 3) + grid.shape), (0, 1), (-2, -1))
        finv_m = np.swapaxes(inv_m, -1, -2)
        dfinv_m = -np.swapaxes(inv_m @ df_m @ inv_m, -1, -2)
        return {
            "f": f,
            "finv": np.moveaxis(finv_m, (-2, -1), (0, 1)),
            "K6": vals[9:15], "G9": vals[15:24].reshape((3, 3) + grid.shape),
            "dt_f": dts[:9].reshape((3, 3) + grid.shape),
            "dt_finv": np.moveaxis(dfinv_m, (-2, -1), (0, 1)),
            "dt_K6": dts[9:15], "dt_G9": dts[15:24].reshape((3, 3) + grid.shape),
            "dK6": dxs[:, :6], "dG9": dxs[:, 6:].reshape((3, 3, 3) + grid.shape),
        }

    def state(self, t: float, grid: Grid) -> StateField:
        ev = self.evaluate(t, grid)
        return StateField.from_parts(grid, ev["f"], ev["finv"], ev["K6"], ev["G9"], t)

    def source(self, t: float, grid: Grid) -> np.ndarray:
        """``d_t X - F(X)`` on the recipe, with exact spatial derivatives."""
        ev = self.evaluate(t, grid)
        f = ev["f"]
        K = expand_sym(ev["K6"])
        G = expand_anti(ev["G9"])
        eK6 = np.einsum("aj...,jc...->ac...", f, ev["dK6"])
        eG9 = np.einsum("aj...,jip...->aip...", f, ev["dG9"])
        eK = np.moveaxis(expand_sym(np.moveaxis(eK6, 0, 1)), 2, 0)
        eG = np.moveaxis(expand_anti(np.moveaxis(eG9, 0, 2)), 3, 0)
        F = rhs_kernel(f, ev["finv"], K, G, eK, eG)
        dt = np.concatenate([ev["dt_f"].reshape((9,) + grid.shape),
                             ev["dt_finv"].reshape((9,) + grid.shape),
                             ev["dt_K6"], ev["dt_G9"].reshape((9,) + grid.shape)])
        return dt - F


def _zeros3():
    return [[[sp.Integer(0)] * 3 for _ in range(3)] for _ in range(3)]


def _rotation(a1, a2, a3) -> sp.Matrix:
    c1, s1, c2, s2, c3, s3 = sp.cos(a1), sp.sin(a1), sp.cos(a2), sp.sin(a2), sp.cos(a3), sp.sin(a3)
    Rx = sp.Matrix([[1, 0, 0], [0, c1, -s1], [0, s1, c1]])
    Ry = sp.Matrix([[c2, 0, s2], [0, 1, 0], [-s2, 0, c2]])
    Rz = sp.Matrix([[c3, -s3, 0], [s3, c3, 0], [0, 0, 1]])
    return Rz * Ry * Rx


def recipe_minkowski(lengths=None, **_) -> Recipe:
    return Recipe("minkowski", sp.eye(3), sp.zeros(3), _zeros3(), exact=True)


def recipe_kasner(lengths=None, p=(2 / 3, 2 / 3, -1 / 3), **_) -> Recipe:
    p = check_kasner_exponents(p)
    ps = [sp.Float(v, 17) for v in p]
    f = sp.diag(*[T ** -q for q in ps])
    K = sp.diag(*[q / T for q in ps])
    return Recipe("kasner", f, K, _zeros3(), exact=True)


def recipe_rotated_kasner(lengths=(1.0, 1.0, 1.0), p=(2 / 3, 2 / 3, -1 / 3),
                          amplitudes=(0.3, 0.2, 0.25), **_) -> Recipe:
    """Kasner spacetime in a frame rotated by a smooth periodic rotation field.

    This is an exact vacuum solution with non-trivial spatial dependence in
    every component.
    """
    p = check_kasner_exponents(p)
    ps = [sp.Float(v, 17) for v in p]
    k = [2 * sp.pi / sp.Float(L, 17) for L in lengths]
    a1, a2, a3 = (sp.Float(a, 17) for a in amplitudes)
    R = _rotation(a1 * sp.sin(k[1] * X2 + k[2] * X3),
                  a2 * sp.cos(k[0] * X1 + sp.Rational(1, 3)),
                  a3 * sp.sin(k[0] * X1 + k[1] * X2 + k[2] * X3 + sp.Rational(1, 2)))
    D = sp.diag(*[T ** -q for q in ps])
    f = R * D
    K = R * sp.diag(*[q / T for q in ps]) * R.T
    G = _zeros3()
    for i in range(3):
        for j in range(3):
            for b in range(j + 1, 3):
                g = sum(sum(f[i, m] * sp.diff(R[j, c], COORDS[m]) for m in range(3)) * R[b, c]
                        for c in range(3))
                G[i][j][b], G[i][b][j] = g, -g
    return Recipe("rotated_kasner", f, K, G, exact=True)


def recipe_trig(lengths=(1.0, 1.0, 1.0), amplitude=0.05, **_) -> Recipe:
    """Smooth periodic fields that do not solve the equations; the source is non-zero."""
    k = [2 * sp.pi / sp.Float(L, 17) for L in lengths]
    a = sp.Float(amplitude, 17)
    ph = [k[0] * X1, k[1] * X2, k[2] * X3]
    f = sp.eye(3)
    K = sp.zeros(3)
    G = _zeros3()
    n = 0
    for i in range(3):
        for j in range(3):
            f[i, j] += a * sp.sin(ph[(i + j) % 3] + ph[j] + n + T)
            n += 1
    for i, j in SYM_PAIRS:
        K[i, j] = K[j, i] = a * sp.cos(ph[i] - ph[j] + ph[(i + 1) % 3] + n + 2 * T)
        n += 1
    for i in range(3):
        for j, b in ANTI_PAIRS:
            g = a * sp.sin(ph[i] + ph[b] + n - T)
            G[i][j][b], G[i][b][j] = g, -g
            n += 1
    return Recipe("trig", f, K, G, exact=False)


RECIPES: dict[str, Callable[..., Recipe]] = {
    "minkowski": recipe_minkowski,
    "kasner": recipe_kasner,
    "rotated_kasner": recipe_rotated_kasner,
    "trig": recipe_trig,
}


def get_recipe(name: str, grid: Grid, **params) -> Recipe:
    if name not in RECIPES:
        raise ScenarioError(f"unknown recipe '{name}', known: {sorted(RECIPES)}")
    return RECIPES[name](lengths=grid.lengths, **params)


@dataclass
class ManufacturedProblem:
    recipe: Recipe
    grid: Grid
    initial: StateField

    def source(self, t: float, state: StateField) -> np.ndarray:
        return self.recipe.source(t, self.grid)

    def exact(self, t: float) -> StateField:
        return self.recipe.state(t, self.grid)


def mms(grid: Grid, recipe: str | Recipe, t0: float = 1.0, **params) -> ManufacturedProblem:
    """Manufactured-solution problem: initial data, forcing and exact solution."""
    if not all(grid.periodic):
        raise ScenarioError("manufactured solutions are set up on periodic grids")
    r = get_recipe(recipe, grid, **params) if isinstance(recipe, str) else recipe
    return ManufacturedProblem(r, grid, r.state(t0, grid))
