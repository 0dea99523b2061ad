import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from geoadm import state as S
from geoadm.state import Grid, StateField


def small_grid(periodic=(True, True, True)):
    return Grid((6, 7, 8), (0.1, 0.2, 0.3), periodic)


def test_layout_views_share_memory_and_x3_is_fastest():
    s = StateField.zeros(small_grid())
    assert s.data.flags["C_CONTIGUOUS"]
    assert s.data.strides[-1] == 8
    s.f[1, 2, 0, 0, 3] = 5.0
    assert s.data[5, 0, 0, 3] == 5.0
    s.G9[2, 1, 1, 1, 1] = 7.0
    assert s.data[24 + 7, 1, 1, 1] == 7.0


def test_field_names_cover_33_components():
    names = S.field_names()
    assert len(names) == 33 == len(set(names))
    assert names[18:24] == ["K11", "K12", "K22", "K13", "K23", "K33"]
    assert names[24:27] == ["G112", "G113", "G123"]


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=20, deadline=None)
def test_symmetric_and_antisymmetric_round_trips(seed):
    rng = np.random.default_rng(seed)
    v6 = rng.standard_normal((6, 2, 2, 2))
    full = S.expand_sym(v6)
    assert np.array_equal(full, np.swapaxes(full, 0, 1))
    assert np.array_equal(S.compress_sym(full), v6)
    v9 = rng.standard_normal((3, 3, 2, 2, 2))
    G = S.expand_anti(v9)
    assert np.array_equal(G, -np.swapaxes(G, 1, 2))
    assert np.array_equal(S.compress_anti(G), v9)


def test_snapshot_round_trip_is_bitwise(tmp_path, rng):
    s = StateField(small_grid(), rng.standard_normal((33, 6, 7, 8)), 1.25)
    p = tmp_path / "a.gadm"
    S.write_snapshot(p, s)
    raw = p.read_bytes()
    assert raw[:4] == b"GADM"
    assert len(raw) == 4 + 4 + 12 + 24 + 8 + 8 * 33 * 6 * 7 * 8
    back = S.read_snapshot(p)
    assert back.t == 1.25 and back.grid.n == (6, 7, 8) and back.grid.h == (0.1, 0.2, 0.3)
    assert back.data.tobytes() == s.data.tobytes()


def test_snapshot_errors(tmp_path, rng):
    s = StateField(small_grid(), rng.standard_normal((33, 6, 7, 8)))
    p = tmp_path / "a.gadm"
    S.write_snapshot(p, s)
    raw = p.read_bytes()
    (tmp_path / "magic.gadm").write_bytes(b"XXXX" + raw[4:])
    (tmp_path / "short.gadm").write_bytes(raw[:-8])
    (tmp_path / "hdr.gadm").write_bytes(raw[:10])
    for name, msg in [("magic", "magic"), ("short", "data bytes"), ("hdr", "truncated")]:
        with pytest.raises(S.StateError, match=msg):
            S.read_snapshot(tmp_path / f"{name}.gadm")


def test_validate_reports_nonfinite_location():
    s = StateField.zeros(small_grid())
    s.f[...] = np.eye(3)[..., None, None, None]
    s.finv[...] = np.eye(3)[..., None, None, None]
    assert S.validate(s).ok
    s.K6[2, 1, 2, 3] = np.nan
    with pytest.raises(S.StateError, match=r"K22 at point \(1, 2, 3\)"):
        S.validate(s)


def test_validate_flags_drift_and_degenerate_frames():
    s = StateField.zeros(small_grid())
    s.f[...] = np.eye(3)[..., None, None, None]
    s.finv[...] = np.eye(3)[..., None, None, None]
    s.finv[0, 0, 0, 0, 0] = 1.5
    d = S.validate(s)
    assert d.drift_max == pytest.approx(0.5) and d.notes
    s.f[0, 0] = 1e-9
    assert not S.validate(s).ok


def test_frame_derivative_of_scaled_identity_frame():
    g = Grid((16, 16, 16), (1 / 16,) * 3)
    s = StateField.zeros(g)
    s.f[...] = 2.0 * np.eye(3)[..., None, None, None]
    x = g.coords()
    u = np.sin(2 * np.pi * x[1])
    du = S.frame_derivative(u, 1, s)
    assert np.abs(du - 4 * np.pi * np.cos(2 * np.pi * x[1])).max() < 2e-2
    assert np.all(S.frame_derivative(u, 0, s) == 0.0)


def test_connection_full_form_is_antisymmetric():
    from conftest import conformal_case
    s, _ = conformal_case(12)
    G = S.connection_from_frame(s, full=True)
    assert np.abs(G + np.swapaxes(G, 1, 2)).max() < 1e-13
    assert np.array_equal(S.compress_anti(G), S.connection_from_frame(s))


def test_partials_do_not_depend_on_thread_count(monkeypatch, rng):
    g = Grid((8, 9, 10), (0.1, 0.1, 0.1), (True, True, False))
    u = rng.standard_normal((7, 8, 9, 10))
    monkeypatch.setenv(S.THREADS_ENV, "1")
    a = S.partials(u, g)
    monkeypatch.setenv(S.THREADS_ENV, "4")
    b = S.partials(u, g)
    assert a.tobytes() == b.tobytes()


def test_grid_refinement_and_weights():
    g = Grid((8, 8, 9), (0.125, 0.125, 0.125), (True, True, False))
    assert g.lengths == (1.0, 1.0, 1.0)
    assert g.cell_weights().sum() == pytest.approx(1.0)
    r = g.refined()
    assert r.n == (16, 16, 17) and r.lengths == (1.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        Grid((3, 8, 8), (1, 1, 1))
