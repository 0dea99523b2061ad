import numpy as np
import pytest

from conftest import KASNER_P
from geoadm import scenarios as sc
from geoadm.evolution import rhs
from geoadm.geometry import hamiltonian_residual, momentum_residual
from geoadm.state import Grid, connection_from_frame, validate


def torus(n):
    return Grid((n, n, n), (1 / n,) * 3)


@pytest.mark.parametrize("p", [(1, 1, -1), (0.5, 0.5, 0.0), (2 / 3, 2 / 3)])
def test_bad_kasner_exponents_rejected(p):
    with pytest.raises(sc.ScenarioError):
        sc.kasner(torus(8), p)


def test_kasner_data():
    s = sc.kasner(torus(8), KASNER_P, 2.0)
    assert validate(s).ok
    assert s.K()[..., 0, 0, 0] == pytest.approx(sc.kasner_exact_K(KASNER_P, 2.0))
    assert s.f[0, 0, 0, 0, 0] == pytest.approx(2.0 ** (-2 / 3))


def test_geometric_data_gives_orthonormal_adapted_frame(rng):
    g = Grid((5, 5, 9), (0.2, 0.2, 0.125), (True, True, False))
    A = rng.standard_normal((3, 3))
    h = A @ A.T + 3 * np.eye(3)
    k = rng.standard_normal((3, 3)); k = k + k.T
    s = sc.from_geometric_data(h[..., None, None, None], k[..., None, None, None], g)
    f = s.f[..., 0, 0, 0]
    assert np.allclose(f @ h @ f.T, np.eye(3), atol=1e-13)
    # e_1, e_2 tangent to x3 = const and e_3 orthogonal to them
    assert np.allclose(f[:2, 2], 0.0)
    assert np.allclose((f[2] @ h)[:2], 0.0, atol=1e-13)
    assert np.allclose(s.K()[..., 0, 0, 0], f @ k @ f.T)
    assert np.abs(np.einsum("ij...,bj...->ib...", s.f, s.finv) - np.eye(3)[..., None, None, None]).max() < 1e-13


def test_indefinite_metric_reported():
    g = Grid((5, 5, 5), (0.2,) * 3)
    with pytest.raises(sc.ScenarioError, match="not positive definite"):
        sc.from_geometric_data(np.diag([1.0, -1.0, 1.0])[..., None, None, None], np.zeros((3, 3, 1, 1, 1)), g)


def test_perturbed_kasner_satisfies_boundary_conditions_and_needs_a_slab():
    g = Grid((5, 5, 17), (1 / 16,) * 3, (True, True, False))
    s = sc.perturbed_kasner(g, KASNER_P, 1.0, 0.02)
    b = s.K6[0, 0, 0] - 2 / 3
    assert b[0] == 0.0 and b[-1] == 0.0 and b.max() == pytest.approx(0.02)
    with pytest.raises(sc.ScenarioError):
        sc.perturbed_kasner(torus(8), KASNER_P)


def test_random_frame_is_seeded_and_dual():
    a = sc.random_frame(torus(8), np.random.default_rng(11))
    b = sc.random_frame(torus(8), np.random.default_rng(11))
    assert np.array_equal(a.data, b.data)
    assert validate(a).drift_max < 1e-13


def test_rotated_kasner_is_an_exact_vacuum_solution():
    P = sc.mms(torus(8), "rotated_kasner", 1.3)
    assert np.abs(P.source(1.3, P.initial)).max() < 1e-12
    ex = P.exact(1.3)
    assert np.array_equal(ex.data, P.initial.data)
    # all 33 components vary in space
    assert np.all(P.initial.data.reshape(33, -1).std(axis=1) > 0)


def test_rotated_kasner_connection_matches_discrete_koszul_formula():
    errs = []
    for n in (12, 24):
        s = sc.get_recipe("rotated_kasner", torus(n)).state(1.0, torus(n))
        errs.append(np.abs(connection_from_frame(s) - s.G9).max())
    assert errs[0] / errs[1] > 12


def test_rotated_kasner_constraints_converge():
    errs = []
    for n in (12, 24):
        s = sc.get_recipe("rotated_kasner", torus(n)).state(1.0, torus(n))
        errs.append(max(np.abs(hamiltonian_residual(s)).max(), np.abs(momentum_residual(s)).max()))
    assert errs[0] / errs[1] > 12


def test_trig_source_plus_discrete_rhs_approximates_time_derivative():
    errs = []
    for n in (12, 24):
        g = torus(n)
        r = sc.get_recipe("trig", g)
        s = r.state(0.3, g)
        ev = r.evaluate(0.3, g)
        dt_K6 = ev["dt_K6"]
        approx = rhs(s).K6 + r.source(0.3, g)[18:24]
        errs.append(np.abs(approx - dt_K6).max())
    assert np.abs(r.source(0.3, g)).max() > 1e-2
    assert errs[0] / errs[1] > 12


def test_unknown_recipe_and_bounded_grid_rejected():
    with pytest.raises(sc.ScenarioError, match="unknown recipe"):
        sc.mms(torus(8), "nope")
    with pytest.raises(sc.ScenarioError):
        sc.mms(Grid((5, 5, 8), (0.2,) * 3, (True, True, False)), "kasner")
