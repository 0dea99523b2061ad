"""
Finite-difference stencils on uniform grids.

Periodic axes use centered stencils with wrap-around. Bounded axes use the
same centered stencil in the interior and one-sided stencils of equal width
near the two ends, so the formal order is the same everywhere.

Stencil weights are exact rationals obtained from :mod:`sympy` and cached as
floats.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
import sympy as sp

SUPPORTED_ORDERS = (2, 4)


@lru_cache(maxsize=None)
def stencil_weights(offsets: tuple[int, ...], deriv: int = 1) -> tuple[float, ...]:
    """Weights of the finite-difference formula for ``d^deriv/dx^deriv`` at 0.

    The weights are for unit spacing; divide by ``h**deriv``.
    """
    pts = [sp.Integer(o) for o in offsets]
    w = sp.calculus.finite_diff_weights(deriv, pts, 0)[deriv][-1]
    return tuple(float(c) for c in w)


@lru_cache(maxsize=None)
def _closure(order: int) -> list[tuple[tuple[int, ...], tuple[float, ...]]]:
    # one-sided stencils for rows 0..order//2-1 at the lower end
    width = order + 1
    rows = []
    for i in range(order // 2):
        offs = tuple(range(-i, width - i))
        rows.append((offs, stencil_weights(offs)))
    return rows


def diff(u: np.ndarray, axis: int, h: float, order: int = 4,
         periodic: bool = True) -> np.ndarray:
    """First derivative of ``u`` along ``axis`` (any numpy axis)."""
    if order not in SUPPORTED_ORDERS:
        raise ValueError(f"unsupported finite-difference order {order}")
    u = np.moveaxis(u, axis, -1)
    n = u.shape[-1]
    half = order // 2
    cw = stencil_weights(tuple(range(-half, half + 1)))
    if periodic:
        if n < order + 1:
            raise ValueError(f"periodic axis needs at least {order + 1} points, got {n}")
        up = np.concatenate([u[..., n - half:], u, u[..., :half]], axis=-1)
        out = np.zeros_like(u)
        for k in range(1, half + 1):
            # centered weights are antisymmetric, pair them to keep constants exact
            out += cw[half + k] * (up[..., half + k:half + k + n] - up[..., half - k:half - k + n])
    else:
        if n < order + 2:
            raise ValueError(f"bounded axis needs at least {order + 2} points, got {n}")
        out = np.zeros_like(u)
        m = n - 2 * half
        for k in range(1, half + 1):
            out[..., half:n - half] += cw[half + k] * (u[..., half + k:half + k + m]
                                                       - u[..., half - k:half - k + m])
        for i, (offs, w) in enumerate(_closure(order)):
            lo = np.zeros(u.shape[:-1])
            hi = np.zeros(u.shape[:-1])
            for o, c in zip(offs, w):
                lo += c * u[..., i + o]
                hi -= c * u[..., n - 1 - i - o]
            out[..., i] = lo
            out[..., n - 1 - i] = hi
    return np.moveaxis(out / h, -1, axis)


def dissipation(u: np.ndarray, axis: int, h: float, sigma: float,
                periodic: bool = True) -> np.ndarray:
    """Sixth-difference Kreiss-Oliger dissipation, suitable for 4th-order schemes.

    Returns ``sigma/64 * h**5 * D6 u``. On bounded axes the operator is applied
    only where the seven-point stencil fits and is zero in the last three rows
    at each end.
    """
    w6 = (1.0, -6.0, 15.0, -20.0, 15.0, -6.0, 1.0)
    u = np.moveaxis(u, axis, -1)
    n = u.shape[-1]
    out = np.zeros_like(u)
    if periodic:
        up = np.concatenate([u[..., n - 3:], u, u[..., :3]], axis=-1)
        for k, c in enumerate(w6):
            out += c * up[..., k:k + n]
    else:
        m = n - 6
        for k, c in enumerate(w6):
            out[..., 3:n - 3] += c * u[..., k:k + m]
    return np.moveaxis(out * (sigma / (64.0 * h)), -1, axis)
