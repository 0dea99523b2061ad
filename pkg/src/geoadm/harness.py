"""
Run orchestration behind the command line: evolutions with output files,
convergence studies and the battery of structural checks.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable

import numpy as np

from . import boundary as bd
from . import hyperbolicity as hy
from .config import RunConfig
from .evolution import NumericalAbort, Run, evolve
from .geometry import ResidualReport, residual_report, riemann_hat, spatial_ricci_hat, torsion
from .norms import energy
from .scenarios import kasner, minkowski, mms, perturbed_kasner, random_frame
from .state import Grid, StateError, StateField, write_snapshot

log = logging.getLogger(__name__)

EXIT_OK, EXIT_CONFIG, EXIT_ABORT, EXIT_CHECK = 0, 2, 3, 4


@dataclass
class Problem:
    initial: StateField
    source: Callable | None = None
    exact: Callable[[float], StateField] | None = None
    boundary: Callable[[StateField], None] | None = None


def make_grid(cfg: RunConfig) -> Grid:
    return Grid(tuple(cfg.n), tuple(cfg.h), tuple(cfg.periodic), order=cfg.fd_order)


def build_problem(cfg: RunConfig, grid: Grid | None = None) -> Problem:
    grid = grid or make_grid(cfg)
    rng = np.random.default_rng(cfg.seed)
    bc = bd.impose_bdcond if cfg.boundary == "geodesic" else None
    if cfg.scenario == "minkowski":
        return Problem(minkowski(grid, cfg.t0), exact=lambda t: minkowski(grid, t), boundary=bc)
    if cfg.scenario == "kasner":
        return Problem(kasner(grid, cfg.p, cfg.t0), exact=lambda t: kasner(grid, cfg.p, t), boundary=bc)
    if cfg.scenario == "perturbed_kasner":
        return Problem(perturbed_kasner(grid, cfg.p, cfg.t0, cfg.amplitude, cfg.profile), boundary=bc)
    if cfg.scenario == "random_frame":
        return Problem(random_frame(grid, rng, cfg.amplitude, cfg.modes, cfg.t0), boundary=bc)
    if cfg.scenario == "mms":
        params = {"p": cfg.p} if cfg.recipe in ("kasner", "rotated_kasner") else {}
        if cfg.recipe == "trig":
            params["amplitude"] = cfg.recipe_amplitude
        P = mms(grid, cfg.recipe, cfg.t0, **params)
        return Problem(P.initial, source=P.source, exact=P.exact, boundary=bc)
    raise ValueError(f"unknown scenario {cfg.scenario}")


def _report_fn(cfg: RunConfig):
    def report(state: StateField) -> ResidualReport:
        r = residual_report(state)
        extra = {"energy": energy(state)}
        if cfg.boundary == "geodesic":
            extra["ricci_bdry_max"] = bd.ricci_boundary_check(state)
            cr = bd.corner_residuals(state)
            for k, name in enumerate(bd.CORNER_NAMES):
                extra[f"corner_{name}_max"] = max(float(np.abs(v[k]).max()) for v in cr.values())
            extra["bdcond_max"] = bd.bdcond_violation(state)
        r.extra = extra
        return r
    return report


def run_evolve(cfg: RunConfig, out_dir: str | Path | None = None, grid: Grid | None = None,
               write: bool = True) -> Run:
    """Evolve a configuration; write snapshots, residual CSV and the resolved config.

    On a numerical abort a ``failure.txt`` with the last good residual report
    is written before the exception propagates.
    """
    out = Path(out_dir or cfg.directory)
    problem = build_problem(cfg, grid)
    report = _report_fn(cfg)
    csv_fh = None
    written = {"n": 0}
    if write:
        out.mkdir(parents=True, exist_ok=True)
        (out / "config.resolved").write_text(cfg.to_text())
        csv_fh = open(out / "residuals.csv", "w")

    def on_output(state: StateField, r: ResidualReport):
        if not write:
            return
        if written["n"] == 0:
            csv_fh.write(",".join(r.columns()) + "\n")
        csv_fh.write(",".join(repr(float(v)) for v in r.values()) + "\n")
        csv_fh.flush()
        if cfg.snapshots:
            write_snapshot(out / f"snap_{written['n']:04d}.gadm", state)
        written["n"] += 1

    try:
        run = evolve(problem.initial, cfg.t_end, cfg.cfl_factor, cfg.output_interval,
                     boundary=problem.boundary, source=problem.source,
                     dissipation=cfg.dissipation, report=report, check_torsion=cfg.check_torsion,
                     keep_states=not write, on_output=on_output)
    except NumericalAbort as exc:
        if write:
            lines = [f"numerical abort: {exc}"]
            if exc.last_good is not None:
                try:
                    r = report(exc.last_good)
                    lines.append(f"last good time: {exc.last_good.t!r}")
                    lines += [f"{k}: {v!r}" for k, v in zip(r.columns(), r.values())]
                except (StateError, FloatingPointError, ValueError) as inner:
                    lines.append(f"last good report unavailable: {inner}")
            (out / "failure.txt").write_text("\n".join(lines) + "\n")
        raise
    finally:
        if csv_fh is not None:
            csv_fh.close()
    if write and run.torsion_checks:
        with open(out / "torsion_checks.csv", "w") as fh:
            fh.write("t,discrepancy_max\n")
            for t, d in run.torsion_checks:
                fh.write(f"{t!r},{d!r}\n")
    return run


# ---------------------------------------------------------------- convergence

@dataclass
class ConvergenceResult:
    h: list[float]
    errors: dict[str, list[float]]
    orders: dict[str, list[float]] = field(default_factory=dict)

    def __post_init__(self):
        for k, e in self.errors.items():
            e = np.asarray(e, dtype=float)
            with np.errstate(divide="ignore", invalid="ignore"):
                self.orders[k] = [float(v) for v in np.log2(e[:-1] / e[1:])]

    def to_rows(self) -> list[dict]:
        rows = []
        for lvl, h in enumerate(self.h):
            row = {"level": lvl, "h": h}
            for k, e in self.errors.items():
                row[k] = e[lvl]
                row[f"{k}_order"] = self.orders[k][lvl - 1] if lvl > 0 else float("nan")
            rows.append(row)
        return rows


def run_convergence(cfg: RunConfig, levels: int = 3) -> ConvergenceResult:
    """Run ``levels`` resolutions, each halving every grid spacing, and report observed orders.

    Errors are measured against the exact solution when the scenario has one.
    Residual norms of the constraints are reported in every case, and the face
    values of ``Ric(e_3, e_0)`` when a boundary is active.
    """
    if levels < 2:
        raise ValueError("a convergence study needs at least two levels")
    grid = make_grid(cfg)
    hs, errs = [], {}
    for lvl in range(levels):
        problem = build_problem(cfg, grid)
        run = evolve(problem.initial, cfg.t_end, cfg.cfl_factor, cfg.output_interval,
                     boundary=problem.boundary, source=problem.source,
                     dissipation=cfg.dissipation, check_torsion=cfg.check_torsion)
        hs.append(min(grid.h))
        if problem.exact is not None:
            ex = problem.exact(run.final.t)
            errs.setdefault("solution_max", []).append(float(np.abs(run.final.data - ex.data).max()))
        errs.setdefault("constraint_max", []).append(max(r.worst_constraint for r in run.reports))
        if cfg.boundary == "geodesic":
            errs.setdefault("ricci_bdry_max", []).append(
                max(bd.ricci_boundary_check(s) for s in run.states))
        if run.torsion_checks:
            errs.setdefault("torsion_propagation", []).append(max(d for _, d in run.torsion_checks))
        log.info("level %d h=%g done", lvl, hs[-1])
        grid = grid.refined(2)
    return ConvergenceResult(hs, errs)


# ---------------------------------------------------------------- checks

@dataclass
class CheckResult:
    name: str
    ok: bool
    detail: str
    value: float | None = None

    def to_json(self) -> str:
        return json.dumps({"check": self.name, "ok": self.ok, "value": self.value,
                           "detail": self.detail})


def run_checks(symbol_hook: Callable[[hy.SymbolMatrix], None] | None = None,
               flux_hook: Callable[[np.ndarray], np.ndarray] | None = None,
               seed: int = 0, include_identities: bool = True) -> list[CheckResult]:
    """Structural checks of the principal symbol, boundary flux and geometric identities.

    ``symbol_hook`` may mutate the assembled symbol and ``flux_hook`` may
    replace the flux matrix; both exist so that tests can confirm that the
    checks detect broken inputs.
    """
    out: list[CheckResult] = []
    sym = hy.assemble_symbol()
    if symbol_hook is not None:
        symbol_hook(sym)
    err, where = sym.asymmetry()
    if err == 0:
        out.append(CheckResult("symbol_symmetric", True, "all three symbol matrices are symmetric", 0.0))
    else:
        a, k, l = where
        out.append(CheckResult("symbol_symmetric", False,
                               f"direction {a}: entry ({hy.VARIABLES[k]}, {hy.VARIABLES[l]}) "
                               f"differs from its transpose by {err:g}", err))
    if err == 0:
        rng = np.random.default_rng(seed)
        worst = 0.0
        for xi in [np.eye(3)[a] for a in range(3)] + [v / np.linalg.norm(v) for v in rng.standard_normal((20, 3))]:
            worst = max(worst, float(np.abs(hy.characteristic_speeds(xi, sym)).max()))
        out.append(CheckResult("speeds_bounded", worst <= 1 + 1e-12,
                               f"largest characteristic speed {worst:.15g}", worst))
        gb = hy.classify_good_bad(sym)
        out.append(CheckResult("good_bad_split", gb["ok"],
                               f"bad rows {gb['bad_rows_max']:g}, bad cols {gb['bad_cols_max']:g}",
                               max(gb["bad_rows_max"], gb["bad_cols_max"])))
        mis = hy.symbol_jacobian_mismatch(symbol=sym)
        out.append(CheckResult("symbol_matches_rhs", mis <= 1e-7,
                               f"largest entry mismatch {mis:.3e}", mis))

    M = bd.flux_form_matrix()
    if flux_hook is not None:
        M = flux_hook(M)
    lam = float(np.linalg.eigvalsh(0.5 * (M + M.T)).max())
    out.append(CheckResult("flux_nonpositive", lam <= 1e-12,
                           f"largest eigenvalue of the boundary flux form {lam:.3e}", lam))
    rng = np.random.default_rng(seed)
    qmax = 0.0
    for _ in range(1000):
        K, G = bd.vector_to_tensors(bd.random_bdcond_vector(rng))
        qmax = max(qmax, abs(float(bd.boundary_flux_integrand(K, G))))
    out.append(CheckResult("flux_vanishes_on_bdcond", qmax == 0.0,
                           f"largest |Q| over 1000 admissible states {qmax:.3e}", qmax))

    if include_identities:
        g = Grid((16, 16, 16), (1 / 16,) * 3)
        s = random_frame(g, np.random.default_rng(seed), 0.1, 1)
        C = torsion(s)
        cmax = float(np.abs(C).max())
        out.append(CheckResult("koszul_torsion_free", cmax <= 1e-12,
                               f"torsion of the discrete Koszul connection {cmax:.3e}", cmax))
        R = riemann_hat(s)
        ric = spatial_ricci_hat(s)
        contr = float(np.abs(np.einsum("bijb...->ij...", R) - ric).max())
        out.append(CheckResult("riemann_contracts_to_ricci", contr <= 1e-10,
                               f"contraction mismatch {contr:.3e}", contr))
    return out
