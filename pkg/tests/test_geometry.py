import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import (KASNER_P, conformal_case, oracle_momentum, oracle_ricci,
                      random_point_tensors)
from geoadm import geometry as geo
from geoadm.scenarios import kasner, random_frame
from geoadm.state import Grid


def test_ricci_matches_conformal_closed_form_at_fourth_order():
    errs = []
    for n in (16, 32, 64):
        s, ric = conformal_case(n)
        errs.append(np.abs(geo.spatial_ricci_hat(s) - ric).max())
    orders = np.log2(np.array(errs[:-1]) / errs[1:])
    assert np.all(orders > 3.5), orders


def test_scalar_equals_trace_of_ricci_and_riemann_contracts():
    s, _ = conformal_case(16)
    d = geo.frame_derivatives(s)
    ric = geo.spatial_ricci_hat(s, d)
    assert np.abs(geo.spatial_scalar(s, d) - np.einsum("ii...->...", ric)).max() < 1e-11
    R = geo.riemann_hat(s, d)
    assert np.abs(np.einsum("bijb...->ij...", R) - ric).max() < 1e-11
    # both antisymmetries hold by construction
    assert np.abs(R + np.swapaxes(R, 0, 1)).max() < 1e-12
    assert np.abs(R + np.swapaxes(R, 2, 3)).max() < 1e-12


def test_discrete_koszul_connection_is_torsion_free():
    s = random_frame(Grid((12, 12, 12), (1 / 12,) * 3), np.random.default_rng(3), 0.15, 2)
    assert np.abs(geo.torsion(s)).max() < 1e-13


def test_torsion_detects_a_wrong_connection():
    s = random_frame(Grid((12, 12, 12), (1 / 12,) * 3), np.random.default_rng(3))
    s.G9[0, 0] += 0.1
    C = geo.torsion(s)
    assert np.abs(C).max() == pytest.approx(0.1, rel=1e-9)
    assert np.allclose(C, -np.swapaxes(C, 0, 1))


def test_kasner_residuals_vanish():
    s = kasner(Grid((8, 8, 8), (0.1,) * 3), KASNER_P, 1.3)
    r = geo.residual_report(s)
    assert r.worst_constraint < 1e-15 and r.fdrift_max < 1e-15


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=25, deadline=None)
def test_kernels_match_index_by_index_oracles(seed):
    K, G, eK, eG = random_point_tensors(np.random.default_rng(seed))
    add = lambda a: a[..., None]
    M = geo.momentum_kernel(add(K), add(G), add(eK))[..., 0]
    assert np.allclose(M, oracle_momentum(K, G, eK), atol=1e-12)
    R = geo.ricci_hat_kernel(add(G), add(eG))[..., 0]
    assert np.allclose(R, oracle_ricci(G, eG), atol=1e-12)
    assert geo.scalar_kernel(add(G), add(eG))[0] == pytest.approx(np.trace(R), abs=1e-11)


def test_ricci_b0_is_the_momentum_residual():
    assert geo.ricci_b0 is geo.momentum_residual


def test_torsion_rhs_kernel_oracle(rng):
    K = rng.standard_normal((3, 3)); K = K + K.T
    C = rng.standard_normal((3, 3, 3)); C = C - np.swapaxes(C, 0, 1)
    Rb0 = rng.standard_normal(3)
    ref = np.zeros((3, 3, 3))
    for i in range(3):
        for j in range(3):
            for b in range(3):
                v = sum(K[b, l] * C[i, j, l] - K[i, l] * C[l, j, b] - K[j, l] * C[i, l, b] for l in range(3))
                ref[i, j, b] = v - (i == b) * Rb0[j] + (j == b) * Rb0[i]
    out = geo.torsion_rhs_kernel(K[..., None], C[..., None], Rb0[..., None])[..., 0]
    assert np.allclose(out, ref)


def test_report_csv(tmp_path):
    s = kasner(Grid((8, 8, 8), (0.1,) * 3), KASNER_P)
    r = geo.residual_report(s)
    r.extra = {"energy": 1.0}
    p = tmp_path / "r.csv"
    geo.write_reports_csv(p, [r, r])
    lines = p.read_text().splitlines()
    assert lines[0].split(",")[:3] == ["t", "ham_l2", "ham_max"]
    assert lines[0].endswith("fdrift_max,energy") and len(lines) == 3
