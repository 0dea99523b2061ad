"""
Energy, Sobolev-type norms and the torsion propagation check.

``hs_norm`` sums squared L2 norms of all frame-derivative words of length at
most ``s``. ``bs_norm`` is the boundary-adapted variant: derivatives along the
normal ``e_3`` count twice towards the order, and the tangential alphabet
includes ``e_0``, which is evaluated by differentiating along the flow of
the evolution equations (no stored time levels are needed).
"""

from __future__ import annotations

from itertools import product
from typing import Callable, Union

import numpy as np

from .evolution import Run, rhs
from .state import StateField, frame_gradient

Field = Union[np.ndarray, Callable[[StateField], np.ndarray]]

TIME = "t"


def volume_weights(state: StateField) -> np.ndarray:
    """Quadrature weights times the metric volume factor ``|det finv|``."""
    det = np.linalg.det(np.moveaxis(state.finv, (0, 1), (-2, -1)))
    return state.grid.cell_weights() * np.abs(det)


def _sq_integral(u: np.ndarray, w: np.ndarray) -> float:
    sq = u * u
    if sq.ndim > 3:
        sq = sq.reshape((-1,) + sq.shape[-3:]).sum(axis=0)
    return float(np.sum(sq * w))


def _spatial_words(u: np.ndarray, state: StateField, depth: int) -> dict[tuple, np.ndarray]:
    """All words ``e_{i1} ... e_{ik} u`` for ``k <= depth``, keyed by ``(i1, ..., ik)``."""
    out = {(): u}
    frontier = {(): u}
    for _ in range(depth):
        nxt = {}
        for word, val in frontier.items():
            grad = frame_gradient(val, state)
            for a in range(3):
                nxt[(a,) + word] = grad[a]
        out.update(nxt)
        frontier = nxt
    return out


def hs_norm(u: np.ndarray, s: int, state: StateField) -> float:
    """``sqrt(sum_{|I| <= s} int (e^I u)^2 dvol)`` with frame derivatives ``e_1, e_2, e_3``."""
    if s < 0:
        raise ValueError("order must be non-negative")
    w = volume_weights(state)
    words = _spatial_words(np.asarray(u, dtype=float), state, s)
    return float(np.sqrt(sum(_sq_integral(v, w) for v in words.values())))


def bs_words(s: int) -> list[tuple[tuple, int]]:
    """``(tangential letters, normal power)`` with ``len(letters) + 2 * power <= s``.

    Letters are ``"t"`` for ``e_0`` and ``0, 1`` for ``e_1, e_2``; the word is
    applied as ``letters`` (outermost first) after ``e_3**power``.
    """
    alphabet = (TIME, 0, 1)
    out = []
    for m in range(s // 2 + 1):
        for k in range(s - 2 * m + 1):
            for letters in product(alphabet, repeat=k):
                out.append((letters, m))
    return out


def _apply(letters: tuple, m: int, g: Callable[[StateField], np.ndarray],
           state: StateField, eps: float, dissipation: float) -> np.ndarray:
    """Evaluate ``e_{letters[0]} ... e_{letters[-1]} e_3^m g`` at ``state``."""
    if not letters:
        val = g(state)
        for _ in range(m):
            val = frame_gradient(val, state)[2]
        return val
    head, rest = letters[0], letters[1:]
    if head == TIME:
        R = rhs(state, dissipation=dissipation).data
        sp = StateField(state.grid, state.data + eps * R, state.t + eps)
        sm = StateField(state.grid, state.data - eps * R, state.t - eps)
        return (_apply(rest, m, g, sp, eps, dissipation)
                - _apply(rest, m, g, sm, eps, dissipation)) / (2 * eps)
    return frame_gradient(_apply(rest, m, g, state, eps, dissipation), state)[head]


def bs_norm(u: Field, s: int, state: StateField, eps: float = 1e-4,
            dissipation: float = 0.0) -> float:
    """Boundary-adapted norm of ``u``.

    ``u`` is either a fixed array or a function of the state (for example
    ``lambda st: st.K6``); ``e_0`` acts on it through the evolution
    equations. The contributions of all words are combined in the l2 sense.
    """
    if s < 0 or s > 4:
        raise ValueError("order must be between 0 and 4")
    g = u if callable(u) else (lambda st, _u=np.asarray(u, dtype=float): _u)
    w = volume_weights(state)
    total = 0.0
    for letters, m in bs_words(s):
        if not callable(u) and letters and letters[-1] == TIME and m == 0:
            continue  # time derivatives of a fixed array vanish
        total += _sq_integral(_apply(letters, m, g, state, eps, dissipation), w)
    return float(np.sqrt(total))


def energy(state: StateField) -> float:
    """``int (|K|^2 / 2 + |G|^2 / 4) dvol`` with full index sums."""
    w = volume_weights(state)
    K, G = state.K(), state.G()
    dens = 0.5 * np.einsum("ij...,ij...->...", K, K) + 0.25 * np.einsum("ijb...,ijb...->...", G, G)
    return float(np.sum(dens * w))


def energy_series(run: Run, s: int = 0) -> dict[str, np.ndarray]:
    """Energy (and optionally the ``H^s`` norm of ``(K, G)``) at every stored output."""
    t = np.array([st.t for st in run.states])
    e = np.array([energy(st) for st in run.states])
    out = {"t": t, "energy": e}
    if s > 0:
        out[f"hs{s}"] = np.array([hs_norm(np.concatenate([st.K6, st.data[24:33]]), s, st)
                                  for st in run.states])
    return out


class TorsionCheckError(ValueError):
    pass


def torsion_propagation_check(run: Run) -> float:
    """Largest mismatch between the centered time difference of the torsion and its predicted rate."""
    if not run.torsion_checks:
        raise TorsionCheckError("run holds no torsion checks; evolve with check_torsion=True "
                                "and at least two steps")
    return max(d for _, d in run.torsion_checks)
