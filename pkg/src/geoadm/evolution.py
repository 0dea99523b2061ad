"""
Right-hand sides of the evolution system and the RK4 time integrator.

The unknowns evolve by

* ``d_t f_i^j = -K_i^c f_c^j`` and ``d_t finv^b_j = K_c^b finv^c_j``,
* ``d_t K_ij = -trK K_ij - Ric_(ij) + delta_ij H / 2`` with ``H`` the
  Hamiltonian constraint,
* ``d_t G_ijb`` given by :func:`rhs_G_kernel`, which adds the momentum
  constraint so that the principal part is symmetric hyperbolic.

Time is the proper time of the unit normal, so ``e_0 = d_t``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import stencils
from .geometry import (FrameDerivatives, ResidualReport, frame_derivatives, hamiltonian_kernel,
                       momentum_kernel, residual_report, ricci_hat_kernel, torsion,
                       torsion_independent, torsion_rhs)
from .state import (DET_FLOOR, StateField, StateError, compress_anti, compress_sym, frame_det,
                    validate)

log = logging.getLogger(__name__)

Source = Callable[[float, StateField], np.ndarray]
BoundaryPolicy = Callable[[StateField], None]


class NumericalAbort(RuntimeError):
    """The evolution produced non-finite data or a degenerate frame."""

    def __init__(self, message: str, last_good: StateField | None = None,
                 report: ResidualReport | None = None):
        super().__init__(message)
        self.last_good = last_good
        self.report = report


# ------------------------------------------------------------------ kernels

def rhs_K_kernel(K: np.ndarray, G: np.ndarray, eG: np.ndarray) -> np.ndarray:
    trK = np.einsum("ii...->...", K)
    ric = ricci_hat_kernel(G, eG)
    ric = 0.5 * (ric + np.swapaxes(ric, 0, 1))
    H = hamiltonian_kernel(K, G, eG)
    return -trK * K - ric + 0.5 * np.einsum("ij,...->ij...", np.eye(3), H)


def rhs_G_kernel(K: np.ndarray, G: np.ndarray, eK: np.ndarray) -> np.ndarray:
    M = momentum_kernel(K, G, eK)
    out = -np.einsum("ic...,cjb...->ijb...", K, G)
    out += np.einsum("jbi...->ijb...", eK) - np.einsum("bji...->ijb...", eK)
    out -= np.einsum("jbc...,ci...->ijb...", G, K)
    out -= np.einsum("jic...,bc...->ijb...", G, K)
    out += np.einsum("bjc...,ci...->ijb...", G, K)
    out += np.einsum("bic...,jc...->ijb...", G, K)
    d = np.eye(3)
    out += np.einsum("ib,j...->ijb...", d, M)
    out -= np.einsum("ij,b...->ijb...", d, M)
    return out


def rhs_frame_kernel(K: np.ndarray, f: np.ndarray, finv: np.ndarray):
    df = -np.einsum("ic...,cj...->ij...", K, f)
    dfinv = np.einsum("cb...,cj...->bj...", K, finv)
    return df, dfinv


def rhs_kernel(f, finv, K, G, eK, eG) -> np.ndarray:
    """Time derivative of all 33 stored components from full tensors and frame derivatives."""
    df, dfinv = rhs_frame_kernel(K, f, finv)
    dK = compress_sym(rhs_K_kernel(K, G, eG))
    dG = compress_anti(rhs_G_kernel(K, G, eK))
    shape = K.shape[2:]
    return np.concatenate([df.reshape((9,) + shape), dfinv.reshape((9,) + shape),
                           dK, dG.reshape((9,) + shape)])


# ------------------------------------------------------------ state wrappers

@dataclass
class RhsField:
    """Time derivative of every stored component, same layout as the state."""

    data: np.ndarray

    @property
    def K6(self):
        return self.data[18:24]

    @property
    def G9(self):
        return self.data[24:33].reshape((3, 3) + self.data.shape[1:])


def rhs(state: StateField, derivs: FrameDerivatives | None = None,
        dissipation: float = 0.0) -> RhsField:
    if derivs is None:
        derivs = frame_derivatives(state, with_frame=False)
    out = rhs_kernel(state.f, state.finv, state.K(), state.G(), derivs.eK, derivs.eG)
    if dissipation > 0.0:
        g = state.grid
        for a in range(3):
            out += stencils.dissipation(state.data, a - 3, g.h[a], dissipation, g.periodic[a])
    return RhsField(out)


def rhs_K(state: StateField, derivs: FrameDerivatives | None = None) -> np.ndarray:
    d = derivs or frame_derivatives(state, with_frame=False)
    return compress_sym(rhs_K_kernel(state.K(), state.G(), d.eG))


def rhs_G(state: StateField, derivs: FrameDerivatives | None = None) -> np.ndarray:
    d = derivs or frame_derivatives(state, with_frame=False)
    return compress_anti(rhs_G_kernel(state.K(), state.G(), d.eK))


def rhs_frame(state: StateField):
    return rhs_frame_kernel(state.K(), state.f, state.finv)


# ------------------------------------------------------------ time stepping

def max_speed(state: StateField) -> float:
    """Largest coordinate characteristic speed, at least 1.

    Characteristic speeds in the frame are bounded by 1, so the coordinate
    speed at a point is the spectral norm of ``f``.
    """
    fm = np.moveaxis(state.f, (0, 1), (-2, -1)).reshape(-1, 3, 3)
    return max(float(np.linalg.svd(fm, compute_uv=False).max()), 1.0)


def cfl_dt(state: StateField, cfl_factor: float = 0.25) -> float:
    return cfl_factor * min(state.grid.h) / max_speed(state)


def _check(state: StateField, where: str) -> None:
    if not np.all(np.isfinite(state.data)):
        validate(state)  # raises with location
    det = float(np.abs(frame_det(state)).min())
    if det <= DET_FLOOR:
        raise StateError(f"{where}: frame determinant {det:.3e} below floor {DET_FLOOR:.0e}")


def step_rk4(state: StateField, dt: float, boundary: BoundaryPolicy | None = None,
             source: Source | None = None, dissipation: float = 0.0) -> StateField:
    """One classical RK4 step; ``boundary`` is applied after every stage."""

    def stage(s: StateField) -> np.ndarray:
        k = rhs(s, dissipation=dissipation).data
        if source is not None:
            k = k + source(s.t, s)
        return k

    def make(data, t):
        s = StateField(state.grid, data, t)
        if boundary is not None:
            boundary(s)
        return s

    t = state.t
    k1 = stage(state)
    s2 = make(state.data + 0.5 * dt * k1, t + 0.5 * dt)
    k2 = stage(s2)
    s3 = make(state.data + 0.5 * dt * k2, t + 0.5 * dt)
    k3 = stage(s3)
    s4 = make(state.data + dt * k3, t + dt)
    k4 = stage(s4)
    new = make(state.data + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4), t + dt)
    try:
        _check(new, f"t={new.t:.6g}")
    except StateError as exc:
        raise NumericalAbort(str(exc), last_good=state) from exc
    return new


@dataclass
class Run:
    """Record of an evolution: output states, residual reports and torsion checks."""

    states: list[StateField] = field(default_factory=list)
    reports: list[ResidualReport] = field(default_factory=list)
    torsion_checks: list[tuple[float, float]] = field(default_factory=list)
    dt: float = 0.0
    steps: int = 0

    @property
    def final(self) -> StateField:
        return self.states[-1]


def evolve(state: StateField, t_end: float, cfl_factor: float = 0.25,
           output_interval: float | None = None, boundary: BoundaryPolicy | None = None,
           source: Source | None = None, dissipation: float = 0.0,
           dt: float | None = None, report: Callable[[StateField], ResidualReport] | None = None,
           check_torsion: bool = False, keep_states: bool = True,
           on_output: Callable[[StateField, ResidualReport], None] | None = None) -> Run:
    """Evolve to ``t_end`` with a fixed step.

    The step is ``cfl_dt`` of the initial data shrunk so that it divides
    ``t_end - t0`` and every output interval exactly. With ``check_torsion``
    the torsion at the two levels around every output time is compared with
    its predicted rate of change.
    """
    report = report or residual_report
    span = t_end - state.t
    if span <= 0:
        raise ValueError("t_end must exceed the initial time")
    if dt is None:
        dt = cfl_dt(state, cfl_factor)
    interval = output_interval if output_interval and output_interval > 0 else span
    nout = max(1, int(round(span / interval)))
    per = max(1, int(np.ceil(interval / dt - 1e-9)))
    dt = span / (nout * per)

    if boundary is not None:
        state = state.copy()
        boundary(state)
    run = Run(dt=dt)
    cur = state

    def record(s: StateField):
        r = report(s)
        run.reports.append(r)
        if keep_states or not run.states:
            run.states.append(s)
        else:
            run.states[-1] = s
        if on_output is not None:
            on_output(s, r)

    record(cur)
    total = nout * per
    # torsion is compared at interior output levels, using the levels either side
    check_at = set()
    if check_torsion:
        check_at = {n for n in range(per, total, per)} or ({total // 2} if total >= 2 else set())
    prev_C = torsion_independent(torsion(cur)) if 1 in check_at else None
    pending = None
    for n in range(1, total + 1):
        new = step_rk4(cur, dt, boundary, source, dissipation)
        if pending is not None:
            t_c, C_prev, rate = pending
            disc = np.abs((torsion_independent(torsion(new)) - C_prev) / (2 * dt) - rate).max()
            run.torsion_checks.append((t_c, float(disc)))
            pending = None
        if n in check_at:
            pending = (new.t, prev_C, torsion_independent(torsion_rhs(new)))
        prev_C = torsion_independent(torsion(new)) if (n + 1) in check_at else None
        cur = new
        if n % per == 0:
            record(cur)
    run.steps = total
    return run
