"""
Curvature, constraint residuals and torsion in an orthonormal frame.

Kernels take full tensors with the grid axes trailing:
``K[i, j]``, ``G[i, j, b]`` (connection, antisymmetric in ``j, b``),
``eK[a, i, j] = e_a K_ij`` and ``eG[a, i, j, b] = e_a G_ijb``. Spatial indices
are raised and lowered with the Euclidean metric. The state-level wrappers
compute the frame derivatives with the grid stencils and call the kernels.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, fields
from typing import Iterable

import numpy as np

from .state import (StateField, compress_anti, commutator_coefficients, expand_anti,
                    expand_sym, frame_from_partials, inverse_drift, partials)


@dataclass
class FrameDerivatives:
    """Frame derivatives of the state blocks, direction index first."""

    eK: np.ndarray
    eG: np.ndarray
    ef: np.ndarray | None = None


def frame_derivatives(state: StateField, with_frame: bool = True) -> FrameDerivatives:
    f = state.f
    eK6 = frame_from_partials(f, partials(state.K6, state.grid))
    eG9 = frame_from_partials(f, partials(state.G9, state.grid))
    eK = np.moveaxis(expand_sym(np.moveaxis(eK6, 0, 1)), 2, 0)
    eG = np.moveaxis(expand_anti(np.moveaxis(eG9, 0, 2)), 3, 0)
    ef = frame_from_partials(f, partials(f, state.grid)) if with_frame else None
    return FrameDerivatives(eK, eG, ef)


# ------------------------------------------------------------------ kernels

def ricci_hat_kernel(G: np.ndarray, eG: np.ndarray) -> np.ndarray:
    """Spatial Ricci ``R_ij`` of the frame connection (not symmetrized)."""
    t1 = np.einsum("ibjb...->ij...", eG)
    t2 = np.einsum("bijb...->ij...", eG)
    t3 = np.einsum("bic...,cjb...->ij...", G, G)
    t4 = np.einsum("bbc...,ijc...->ij...", G, G)
    return -(t1 - t2 + t3 + t4)


def scalar_kernel(G: np.ndarray, eG: np.ndarray) -> np.ndarray:
    """Spatial scalar curvature, evaluated from its own contracted formula."""
    t1 = 2.0 * np.einsum("jbjb...->...", eG)
    t2 = np.einsum("bjc...,cjb...->...", G, G)
    t3 = np.einsum("bbc...,jjc...->...", G, G)
    return -(t1 + t2 + t3)


def riemann_kernel(G: np.ndarray, eG: np.ndarray) -> np.ndarray:
    """``R[a, i, j, b]``; contracting the first and last index gives the Ricci tensor."""
    r = eG - np.swapaxes(eG, 0, 1)
    r = r - np.einsum("abc...,ijc...->aijb...", G, G)
    r = r + np.einsum("ibc...,ajc...->aijb...", G, G)
    r = r - np.einsum("aic...,cjb...->aijb...", G, G)
    r = r + np.einsum("iac...,cjb...->aijb...", G, G)
    return r


def momentum_kernel(K: np.ndarray, G: np.ndarray, eK: np.ndarray) -> np.ndarray:
    """Momentum constraint ``M_j``; equal to the mixed Ricci component ``R_j0``."""
    return (np.einsum("ccj...->j...", eK)
            - np.einsum("ccl...,lj...->j...", G, K)
            - np.einsum("cjl...,cl...->j...", G, K)
            - np.einsum("jcc...->j...", eK))


def hamiltonian_kernel(K: np.ndarray, G: np.ndarray, eG: np.ndarray) -> np.ndarray:
    trK = np.einsum("ii...->...", K)
    return scalar_kernel(G, eG) - np.einsum("ij...,ij...->...", K, K) + trK * trK


def torsion_kernel(finv: np.ndarray, ef: np.ndarray, G: np.ndarray) -> np.ndarray:
    """``C[i, j, b]``: frame brackets minus the antisymmetrized connection."""
    c = commutator_coefficients(finv, ef)
    return c - G + np.swapaxes(G, 0, 1)


def torsion_rhs_kernel(K: np.ndarray, C: np.ndarray, Rb0: np.ndarray) -> np.ndarray:
    """Time derivative of the torsion implied by the evolution equations."""
    out = (np.einsum("bl...,ijl...->ijb...", K, C)
           - np.einsum("il...,ljb...->ijb...", K, C)
           - np.einsum("jl...,ilb...->ijb...", K, C))
    d = np.eye(3)
    out -= np.einsum("ib,j...->ijb...", d, Rb0)
    out += np.einsum("jb,i...->ijb...", d, Rb0)
    return out


# ------------------------------------------------------------ state wrappers

def _derivs(state, derivs, with_frame=False):
    if derivs is None or (with_frame and derivs.ef is None):
        return frame_derivatives(state, with_frame)
    return derivs


def spatial_ricci_hat(state: StateField, derivs: FrameDerivatives | None = None) -> np.ndarray:
    d = _derivs(state, derivs)
    return ricci_hat_kernel(state.G(), d.eG)


def spatial_scalar(state: StateField, derivs: FrameDerivatives | None = None) -> np.ndarray:
    d = _derivs(state, derivs)
    return scalar_kernel(state.G(), d.eG)


def riemann_hat(state: StateField, derivs: FrameDerivatives | None = None) -> np.ndarray:
    d = _derivs(state, derivs)
    return riemann_kernel(state.G(), d.eG)


def hamiltonian_residual(state: StateField, derivs: FrameDerivatives | None = None) -> np.ndarray:
    d = _derivs(state, derivs)
    return hamiltonian_kernel(state.K(), state.G(), d.eG)


def momentum_residual(state: StateField, derivs: FrameDerivatives | None = None) -> np.ndarray:
    d = _derivs(state, derivs)
    return momentum_kernel(state.K(), state.G(), d.eK)


# same object on purpose: the mixed Ricci components are the momentum constraint
ricci_b0 = momentum_residual


def torsion(state: StateField, derivs: FrameDerivatives | None = None) -> np.ndarray:
    """Torsion ``C[i, j, b]``, shape ``(3, 3, 3, ...)``."""
    d = _derivs(state, derivs, with_frame=True)
    return torsion_kernel(state.finv, d.ef, state.G())


def torsion_independent(C: np.ndarray) -> np.ndarray:
    """The 9 independent torsion components ``C[pair, b]`` (antisymmetric in ``i, j``)."""
    return compress_anti(np.moveaxis(C, 2, 0))


def torsion_rhs(state: StateField, derivs: FrameDerivatives | None = None) -> np.ndarray:
    d = _derivs(state, derivs, with_frame=True)
    C = torsion_kernel(state.finv, d.ef, state.G())
    return torsion_rhs_kernel(state.K(), C, momentum_kernel(state.K(), state.G(), d.eK))


# ------------------------------------------------------------ residual report

def l2(u: np.ndarray, weights: np.ndarray) -> float:
    """Discrete L2 norm over the grid; leading axes are summed as components."""
    sq = u * u
    if sq.ndim > 3:
        sq = sq.reshape((-1,) + sq.shape[-3:]).sum(axis=0)
    return float(np.sqrt(np.sum(sq * weights)))


def maxabs(u: np.ndarray) -> float:
    return float(np.max(np.abs(u)))


@dataclass
class ResidualReport:
    """Constraint residual norms at one time level."""

    t: float
    ham_l2: float
    ham_max: float
    mom1_l2: float
    mom1_max: float
    mom2_l2: float
    mom2_max: float
    mom3_l2: float
    mom3_max: float
    torsion_l2: float
    torsion_max: float
    riccib0_l2: float
    riccib0_max: float
    fdrift_max: float
    extra: dict | None = None

    def columns(self) -> list[str]:
        base = [f.name for f in fields(self) if f.name != "extra"]
        return base + list((self.extra or {}).keys())

    def values(self) -> list[float]:
        base = [getattr(self, f.name) for f in fields(self) if f.name != "extra"]
        return base + list((self.extra or {}).values())

    @property
    def worst_constraint(self) -> float:
        return max(self.ham_max, self.mom1_max, self.mom2_max, self.mom3_max, self.torsion_max)


def residual_report(state: StateField, derivs: FrameDerivatives | None = None) -> ResidualReport:
    d = _derivs(state, derivs, with_frame=True)
    K, G = state.K(), state.G()
    w = state.grid.cell_weights()
    H = hamiltonian_kernel(K, G, d.eG)
    M = momentum_kernel(K, G, d.eK)
    C = torsion_independent(torsion_kernel(state.finv, d.ef, G))
    return ResidualReport(
        t=state.t,
        ham_l2=l2(H, w), ham_max=maxabs(H),
        mom1_l2=l2(M[0], w), mom1_max=maxabs(M[0]),
        mom2_l2=l2(M[1], w), mom2_max=maxabs(M[1]),
        mom3_l2=l2(M[2], w), mom3_max=maxabs(M[2]),
        torsion_l2=l2(C, w), torsion_max=maxabs(C),
        riccib0_l2=l2(M, w), riccib0_max=maxabs(M),
        fdrift_max=float(inverse_drift(state).max()),
    )


def write_reports_csv(path, reports: Iterable[ResidualReport]) -> None:
    reports = list(reports)
    if not reports:
        raise ValueError("no reports to write")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(reports[0].columns())
        for r in reports:
            w.writerow([repr(float(v)) for v in r.values()])
