"""
Grid, state storage and frame derivatives.

A state holds 33 scalar fields per grid point, stored as one array of shape
``(33, n1, n2, n3)`` in C order, so every component is contiguous and the
third coordinate varies fastest:

====================  =====  =================================================
block                 count  layout
====================  =====  =================================================
frame ``f[i, j]``     9      ``e_i = f[i, j] d_j``, row major in ``(i, j)``
coframe ``finv[b,j]`` 9      ``theta^b = finv[b, j] dx^j``, row major
``K``                 6      ``K11 K12 K22 K13 K23 K33``
``Gamma``             9      ``Gamma[i, pair]`` with pairs ``(1,2) (1,3) (2,3)``
====================  =====  =================================================

``K`` is symmetric and ``Gamma[i, j, b]`` is antisymmetric in ``(j, b)`` by
construction; the full tensors are expanded on demand.
"""

from __future__ import annotations

import os
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import stencils

NFIELDS = 33
SYM_PAIRS = ((0, 0), (0, 1), (1, 1), (0, 2), (1, 2), (2, 2))
ANTI_PAIRS = ((0, 1), (0, 2), (1, 2))
THREADS_ENV = "GEOADM_THREADS"
DET_FLOOR = 1e-8

# full (i, j) -> slot in the 6-vector, and (j, b) -> (pair, sign)
_SYM_INDEX = np.zeros((3, 3), dtype=int)
for _k, (_i, _j) in enumerate(SYM_PAIRS):
    _SYM_INDEX[_i, _j] = _SYM_INDEX[_j, _i] = _k
_ANTI_INDEX = np.zeros((3, 3), dtype=int)
_ANTI_SIGN = np.zeros((3, 3))
for _k, (_j, _b) in enumerate(ANTI_PAIRS):
    _ANTI_INDEX[_j, _b] = _ANTI_INDEX[_b, _j] = _k
    _ANTI_SIGN[_j, _b], _ANTI_SIGN[_b, _j] = 1.0, -1.0


def field_names() -> list[str]:
    """Names of the 33 stored components in storage order (1-based indices)."""
    names = [f"f{i + 1}{j + 1}" for i in range(3) for j in range(3)]
    names += [f"finv{b + 1}{j + 1}" for b in range(3) for j in range(3)]
    names += [f"K{i + 1}{j + 1}" for i, j in SYM_PAIRS]
    names += [f"G{i + 1}{j + 1}{b + 1}" for i in range(3) for j, b in ANTI_PAIRS]
    return names


class StateError(ValueError):
    """Raised for malformed or non-finite state data."""


@dataclass(frozen=True)
class Grid:
    """Uniform grid on a box, each axis periodic or bounded.

    On a periodic axis the points are ``origin + k*h`` for ``k < n`` and the
    period is ``n*h``. On a bounded axis the first and last points are the
    two faces and the length is ``(n - 1)*h``.
    """

    n: tuple[int, int, int]
    h: tuple[float, float, float]
    periodic: tuple[bool, bool, bool] = (True, True, True)
    origin: tuple[float, float, float] = (0.0, 0.0, 0.0)
    order: int = 4

    def __post_init__(self):
        if len(self.n) != 3 or len(self.h) != 3 or len(self.periodic) != 3:
            raise ValueError("grid needs three axes")
        if any(hh <= 0 for hh in self.h):
            raise ValueError("grid spacings must be positive")
        for a in range(3):
            need = self.order + 1 if self.periodic[a] else self.order + 2
            if self.n[a] < need:
                raise ValueError(f"axis {a + 1} needs at least {need} points for order {self.order}")

    @property
    def shape(self) -> tuple[int, int, int]:
        return tuple(self.n)

    @property
    def lengths(self) -> tuple[float, ...]:
        return tuple(nn * hh if p else (nn - 1) * hh
                     for nn, hh, p in zip(self.n, self.h, self.periodic))

    @property
    def has_boundary(self) -> bool:
        return not all(self.periodic)

    def coords(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        axes = [o + hh * np.arange(nn) for o, hh, nn in zip(self.origin, self.h, self.n)]
        return tuple(np.meshgrid(*axes, indexing="ij"))

    def cell_weights(self) -> np.ndarray:
        """Quadrature weights: rectangle rule on periodic axes, trapezoid on bounded ones."""
        w = np.ones(self.shape)
        for a in range(3):
            wa = np.full(self.n[a], self.h[a])
            if not self.periodic[a]:
                wa[0] = wa[-1] = 0.5 * self.h[a]
            sh = [1, 1, 1]
            sh[a] = -1
            w = w * wa.reshape(sh)
        return w

    def refined(self, factor: int = 2) -> "Grid":
        n = tuple(nn * factor if p else (nn - 1) * factor + 1 for nn, p in zip(self.n, self.periodic))
        return Grid(n, tuple(hh / factor for hh in self.h), self.periodic, self.origin, self.order)


@dataclass
class StateField:
    """Evolved variables on a grid, see the module docstring for the layout."""

    grid: Grid
    data: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        expected = (NFIELDS,) + self.grid.shape
        if self.data.shape != expected:
            raise StateError(f"state data has shape {self.data.shape}, expected {expected}")

    @classmethod
    def zeros(cls, grid: Grid, t: float = 0.0) -> "StateField":
        return cls(grid, np.zeros((NFIELDS,) + grid.shape), t)

    @classmethod
    def from_parts(cls, grid: Grid, f, finv, K6, G9, t: float = 0.0) -> "StateField":
        s = cls.zeros(grid, t)
        shape = grid.shape
        s.f[...] = np.broadcast_to(f, (3, 3) + shape)
        s.finv[...] = np.broadcast_to(finv, (3, 3) + shape)
        s.K6[...] = np.broadcast_to(K6, (6,) + shape)
        s.G9[...] = np.broadcast_to(G9, (3, 3) + shape)
        return s

    # views into data
    @property
    def f(self) -> np.ndarray:
        return self.data[0:9].reshape((3, 3) + self.grid.shape)

    @property
    def finv(self) -> np.ndarray:
        return self.data[9:18].reshape((3, 3) + self.grid.shape)

    @property
    def K6(self) -> np.ndarray:
        return self.data[18:24]

    @property
    def G9(self) -> np.ndarray:
        return self.data[24:33].reshape((3, 3) + self.grid.shape)

    def K(self) -> np.ndarray:
        """Full symmetric ``K[i, j]``."""
        return expand_sym(self.K6)

    def G(self) -> np.ndarray:
        """Full ``Gamma[i, j, b]``, antisymmetric in the last two indices."""
        return expand_anti(self.G9)

    def copy(self) -> "StateField":
        return StateField(self.grid, self.data.copy(), self.t)


def expand_sym(v6: np.ndarray) -> np.ndarray:
    return v6[_SYM_INDEX]


def compress_sym(full: np.ndarray) -> np.ndarray:
    return np.stack([full[i, j] for i, j in SYM_PAIRS])


def expand_anti(v9: np.ndarray) -> np.ndarray:
    """``(3, 3pairs, ...)`` to full ``(3, 3, 3, ...)`` antisymmetric in axes 1, 2."""
    sign = _ANTI_SIGN.reshape((1, 3, 3) + (1,) * (v9.ndim - 2))
    return v9[:, _ANTI_INDEX] * sign


def compress_anti(full: np.ndarray) -> np.ndarray:
    return np.stack([np.stack([full[i, j, b] for j, b in ANTI_PAIRS]) for i in range(3)])


# ---------------------------------------------------------------- derivatives

def thread_count() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def partials(u: np.ndarray, grid: Grid) -> np.ndarray:
    """Coordinate derivatives of a stack of fields.

    ``u`` has shape ``(..., n1, n2, n3)``; the result has shape
    ``(3, ..., n1, n2, n3)`` with the derivative direction first. Work is split
    over leading components and threads; each output element is produced by
    the same arithmetic whatever the thread count.
    """
    lead = u.shape[:-3]
    flat = u.reshape((-1,) + grid.shape)
    out = np.empty((3,) + flat.shape)

    def job(args):
        a, lo, hi = args
        out[a, lo:hi] = stencils.diff(flat[lo:hi], a - 3, grid.h[a], grid.order, grid.periodic[a])

    nthreads = thread_count()
    ncomp = flat.shape[0]
    chunks = max(1, min(ncomp, nthreads))
    bounds = np.linspace(0, ncomp, chunks + 1).astype(int)
    jobs = [(a, bounds[c], bounds[c + 1]) for a in range(3) for c in range(chunks)
            if bounds[c + 1] > bounds[c]]
    if nthreads == 1:
        for j in jobs:
            job(j)
    else:
        with ThreadPoolExecutor(nthreads) as ex:
            list(ex.map(job, jobs))
    return out.reshape((3,) + lead + grid.shape)


def frame_from_partials(f: np.ndarray, du: np.ndarray) -> np.ndarray:
    """``e_a u = f[a, j] d_j u`` given coordinate partials ``du`` (direction first)."""
    return np.einsum("aj...,j...->a...", f, du)


def frame_derivative(u: np.ndarray, i: int, state: StateField) -> np.ndarray:
    """Derivative of ``u`` along the frame vector ``e_i`` (0-based ``i``)."""
    du = partials(u, state.grid)
    f = state.f[i].reshape((3,) + (1,) * (u.ndim - 3) + state.grid.shape)
    return np.sum(f * du, axis=0)


def frame_gradient(u: np.ndarray, state: StateField) -> np.ndarray:
    """All three frame derivatives of ``u``, direction first."""
    return frame_from_partials(state.f, partials(u, state.grid))


# ---------------------------------------------------------------- checks

@dataclass
class Diagnostics:
    drift_max: float
    det_min: float
    nonfinite: tuple[int, ...] | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.nonfinite is None and self.det_min > DET_FLOOR


def inverse_drift(state: StateField) -> np.ndarray:
    """Pointwise ``max |f[i, j] finv[b, j] - delta_ib|``."""
    prod = np.einsum("ij...,bj...->ib...", state.f, state.finv)
    prod = prod - np.eye(3).reshape((3, 3) + (1,) * 3)
    return np.abs(prod).max(axis=(0, 1))


def frame_det(state: StateField) -> np.ndarray:
    return np.linalg.det(np.moveaxis(state.f, (0, 1), (-2, -1)))


def validate(state: StateField, tol: float = 1e-10) -> Diagnostics:
    """Check finiteness, frame/coframe consistency and frame degeneracy.

    Raises :class:`StateError` on non-finite data, naming the first offending
    component and grid point.
    """
    bad = ~np.isfinite(state.data)
    if bad.any():
        loc = tuple(int(x) for x in np.argwhere(bad)[0])
        raise StateError(f"non-finite value in component {field_names()[loc[0]]} at point {loc[1:]}")
    drift = float(inverse_drift(state).max())
    det = float(np.abs(frame_det(state)).min())
    d = Diagnostics(drift, det)
    if drift > tol:
        d.notes.append(f"frame/coframe drift {drift:.3e} exceeds {tol:.1e}")
    if det <= DET_FLOOR:
        d.notes.append(f"frame determinant {det:.3e} below floor {DET_FLOOR:.0e}")
    return d


# ---------------------------------------------------------------- connection

def commutator_coefficients(finv: np.ndarray, ef: np.ndarray) -> np.ndarray:
    """``c[i, j, b] = finv[b, l] (e_i f_j^l - e_j f_i^l)``, the frame brackets.

    ``ef[a, j, l]`` holds ``e_a f_j^l``.
    """
    c = np.einsum("bl...,ijl...->ijb...", finv, ef)
    return c - np.swapaxes(c, 0, 1)


def connection_from_frame(state: StateField, full: bool = False) -> np.ndarray:
    """Levi-Civita connection coefficients of the frame, from the Koszul formula.

    Returns the stored 9 components ``(3, 3pairs, ...)`` by default. With
    ``full=True`` all 27 entries are evaluated independently from the formula,
    which is useful for checking the antisymmetry numerically.
    """
    ef = frame_gradient(state.f, state)
    c = commutator_coefficients(state.finv, ef)
    # Gamma_ijb = (c_ijb - c_jbi + c_bij) / 2
    G = 0.5 * (c - np.transpose(c, (2, 0, 1) + tuple(range(3, c.ndim)))
               + np.transpose(c, (1, 2, 0) + tuple(range(3, c.ndim))))
    return G if full else compress_anti(G)


# ---------------------------------------------------------------- snapshots

MAGIC = b"GADM"
VERSION = 1
_HEADER = struct.Struct("<4sI3I3dd")


def write_snapshot(path: str | Path, state: StateField) -> None:
    """Binary little-endian snapshot: header then 33 contiguous float64 fields."""
    g = state.grid
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, *g.n, *g.h, state.t))
        fh.write(np.ascontiguousarray(state.data, dtype="<f8").tobytes())


def read_snapshot(path: str | Path, periodic=(True, True, True), order: int = 4) -> StateField:
    """Read a snapshot written by :func:`write_snapshot`.

    The file does not record axis topology; pass ``periodic`` if it differs
    from the fully periodic default.
    """
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise StateError(f"{path}: truncated header")
    magic, version, n1, n2, n3, h1, h2, h3, t = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise StateError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise StateError(f"{path}: unsupported version {version}")
    count = NFIELDS * n1 * n2 * n3
    body = raw[_HEADER.size:]
    if len(body) != 8 * count:
        raise StateError(f"{path}: expected {8 * count} data bytes, found {len(body)}")
    data = np.frombuffer(body, dtype="<f8").astype(np.float64).reshape((NFIELDS, n1, n2, n3))
    grid = Grid((n1, n2, n3), (h1, h2, h3), tuple(periodic), order=order)
    return StateField(grid, data, t)
