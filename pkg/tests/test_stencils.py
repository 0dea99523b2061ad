import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from geoadm import stencils


def test_centered_weights_are_the_classical_ones():
    assert stencils.stencil_weights((-2, -1, 0, 1, 2)) == pytest.approx((1 / 12, -2 / 3, 0, 2 / 3, -1 / 12))
    assert stencils.stencil_weights((-1, 0, 1)) == pytest.approx((-0.5, 0, 0.5))


def test_one_sided_rows_match_known_closures():
    rows = stencils._closure(4)
    assert rows[0][1] == pytest.approx((-25 / 12, 4, -3, 4 / 3, -1 / 4))
    assert rows[1][1] == pytest.approx((-1 / 4, -5 / 6, 3 / 2, -1 / 2, 1 / 12))


@given(coeffs=st.lists(st.floats(-3, 3), min_size=5, max_size=5),
       n=st.integers(8, 20))
@settings(max_examples=40, deadline=None)
def test_bounded_axis_is_exact_for_quartics(coeffs, n):
    # a width-5 stencil of order 4 differentiates degree-4 polynomials exactly
    h = 1.0 / (n - 1)
    x = np.arange(n) * h
    u = np.polynomial.polynomial.polyval(x, coeffs)
    du = np.polynomial.polynomial.polyval(x, np.polynomial.polynomial.polyder(coeffs))
    assert np.allclose(stencils.diff(u, 0, h, 4, periodic=False), du, atol=1e-9 * (1 + np.abs(du).max()))


def test_constants_have_zero_derivative():
    u = np.full((7, 9, 10), 3.7)
    for per in (True, False):
        for order in (2, 4):
            assert np.abs(stencils.diff(u, 2, 0.1, order, per)).max() < 1e-12


@pytest.mark.parametrize("periodic", [True, False])
@pytest.mark.parametrize("order", [2, 4])
def test_observed_order(periodic, order):
    errs = []
    for n in (16, 32, 64):
        h = 1 / n if periodic else 1 / (n - 1)
        x = np.arange(n) * h
        u = np.sin(2 * np.pi * x + 0.3)
        errs.append(np.abs(stencils.diff(u, 0, h, order, periodic) - 2 * np.pi * np.cos(2 * np.pi * x + 0.3)).max())
    orders = np.log2(np.array(errs[:-1]) / errs[1:])
    assert np.all(np.abs(orders - order) < 0.5)


def test_derivative_along_each_array_axis():
    n = 12
    x = np.arange(n) / n
    X = np.meshgrid(x, x, x, indexing="ij")
    for a in range(3):
        u = np.sin(2 * np.pi * X[a])
        d = stencils.diff(np.stack([u, 2 * u]), a - 3, 1 / n)
        ref = stencils.diff(u, a, 1 / n)
        assert np.array_equal(d[0], ref) and np.allclose(d[1], 2 * ref)


def test_too_few_points_rejected():
    with pytest.raises(ValueError):
        stencils.diff(np.zeros(5), 0, 0.1, 4, periodic=False)
    with pytest.raises(ValueError):
        stencils.diff(np.zeros(5), 0, 0.1, 3)


def test_dissipation_kills_low_degree_polynomials_and_damps_noise():
    x = np.arange(20) * 0.1
    u = 1 + x + x ** 2 + x ** 5
    assert np.allclose(stencils.dissipation(u, 0, 0.1, 1.0, periodic=False), 0.0, atol=1e-8)
    v = (-1.0) ** np.arange(16)
    q = stencils.dissipation(v, 0, 0.1, 1.0, periodic=True)
    assert np.all(q * v < 0)  # the highest mode is damped
