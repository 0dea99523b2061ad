import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from geoadm import hyperbolicity as hy
from geoadm.harness import run_checks
from geoadm.scenarios import random_frame
from geoadm.state import Grid


def test_symbol_is_exactly_symmetric_and_integer():
    M = hy.assemble_symbol(exact=True)
    for Ma in M:
        for k in range(15):
            for l in range(15):
                assert Ma[k][l] == Ma[l][k]
                assert Ma[k][l].denominator == 1


def test_speeds_match_exact_eigenvalues():
    # independent route: exact eigenvalues of H^-1 M with sympy
    M = hy.assemble_symbol(exact=True)
    H = sp.diag(*[int(w) for w in hy.WEIGHTS])
    sym = hy.assemble_symbol()
    for a in range(3):
        exact = (H.inv() * sp.Matrix(M[a])).eigenvals()
        expected = sorted(float(v) for v, mult in exact.items() for _ in range(mult))
        assert hy.characteristic_speeds(np.eye(3)[a], sym) == pytest.approx(expected, abs=1e-13)
    assert sorted(float(v) for v in exact) == pytest.approx([-1, -2 ** -0.5, 0, 2 ** -0.5, 1])


@given(st.lists(st.floats(-1, 1), min_size=3, max_size=3).filter(lambda v: np.linalg.norm(v) > 0.1))
@settings(max_examples=40, deadline=None)
def test_speed_set_is_rotation_invariant(v):
    xi = np.array(v) / np.linalg.norm(v)
    ref = [-1] * 3 + [-2 ** -0.5] * 2 + [0] * 5 + [2 ** -0.5] * 2 + [1] * 3
    assert hy.characteristic_speeds(xi) == pytest.approx(ref, abs=1e-12)


def test_non_unit_covector_rejected():
    with pytest.raises(ValueError):
        hy.characteristic_speeds([1.0, 1.0, 0.0])


def test_symbol_matches_finite_difference_jacobian():
    assert hy.symbol_jacobian_mismatch(1e-5) <= 1e-7


def test_mutated_symbol_is_reported_with_location():
    sym = hy.assemble_symbol()
    sym.M[1, hy.INDEX["K11"], hy.INDEX["G323"]] += 1.0
    err, where = sym.asymmetry()
    assert err == 1.0 and where[0] == 2
    assert {where[1], where[2]} == {hy.INDEX["K11"], hy.INDEX["G323"]}
    with pytest.raises(hy.SymmetryError):
        hy.characteristic_speeds([0, 0, 1.0], sym)

    def hook(s):
        s.M[0, hy.INDEX["K33"], hy.INDEX["G212"]] += 0.5
    res = {r.name: r for r in run_checks(symbol_hook=hook, include_identities=False)}
    assert not res["symbol_symmetric"].ok
    assert "K33" in res["symbol_symmetric"].detail and "G212" in res["symbol_symmetric"].detail


def test_good_bad_split_normal_direction():
    gb = hy.classify_good_bad()
    assert gb["ok"] and gb["bad_rows_max"] == 0 and gb["bad_cols_max"] == 0
    assert set(gb["bad"]) == {"K33", "G313", "G323", "G312", "G123-G213"}
    # every good combination is paired with exactly one other
    pairs = {k: v[0][0] for k, v in gb["partners"].items()}
    assert all(pairs[pairs[k]] == k for k in pairs)


def test_normal_derivatives_recovered_from_equations():
    s = random_frame(Grid((12, 12, 12), (1 / 12,) * 3), np.random.default_rng(8), 0.1, 1)
    rec, direct = hy.normal_recovery(s)
    assert set(rec) == set(hy.GOOD)
    scale = max(np.abs(v).max() for v in direct.values())
    for k in rec:
        assert np.abs(rec[k] - direct[k]).max() <= 1e-10 * scale
