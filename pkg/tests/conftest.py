import itertools

import numpy as np
import pytest

from geoadm.state import Grid, StateField, connection_from_frame

TWO_PI = 2 * np.pi
KASNER_P = (2 / 3, 2 / 3, -1 / 3)


def rotation_field(a, b, c):
    """Pointwise rotation Rz(c) Ry(b) Rx(a) for arrays of angles."""
    ca, sa, cb, sb, cc, sc = np.cos(a), np.sin(a), np.cos(b), np.sin(b), np.cos(c), np.sin(c)
    o, z = np.ones_like(a), np.zeros_like(a)
    Rx = np.array([[o, z, z], [z, ca, -sa], [z, sa, ca]])
    Ry = np.array([[cb, z, sb], [z, o, z], [-sb, z, cb]])
    Rz = np.array([[cc, -sc, z], [sc, cc, z], [z, z, o]])
    return np.einsum("ij...,jk...,kl...->il...", Rz, Ry, Rx)


def conformal_case(n):
    """Frame of the metric exp(2 phi) delta, rotated pointwise, with its exact Ricci tensor.

    For g = exp(2 phi) delta in three dimensions
    Ric_ab = -(d_a d_b phi - d_a phi d_b phi) - (lap phi + |d phi|^2) delta_ab,
    and frame components are exp(-2 phi) Q_ia Q_jb Ric_ab.
    """
    g = Grid((n, n, n), (1 / n,) * 3)
    x, y, z = g.coords()
    phi = 0.2 * np.sin(TWO_PI * x) * np.cos(TWO_PI * y) + 0.1 * np.sin(TWO_PI * z)
    dphi = np.array([0.2 * TWO_PI * np.cos(TWO_PI * x) * np.cos(TWO_PI * y),
                     -0.2 * TWO_PI * np.sin(TWO_PI * x) * np.sin(TWO_PI * y),
                     0.1 * TWO_PI * np.cos(TWO_PI * z)])
    hess = np.zeros((3, 3) + g.shape)
    hess[0, 0] = hess[1, 1] = -0.2 * TWO_PI ** 2 * np.sin(TWO_PI * x) * np.cos(TWO_PI * y)
    hess[0, 1] = hess[1, 0] = -0.2 * TWO_PI ** 2 * np.cos(TWO_PI * x) * np.sin(TWO_PI * y)
    hess[2, 2] = -0.1 * TWO_PI ** 2 * np.sin(TWO_PI * z)
    lap = hess[0, 0] + hess[1, 1] + hess[2, 2]
    ric = (-(hess - np.einsum("a...,b...->ab...", dphi, dphi))
           - (lap + (dphi ** 2).sum(0)) * np.eye(3).reshape(3, 3, 1, 1, 1))
    Q = rotation_field(0.3 * np.sin(TWO_PI * y), 0.2 * np.cos(TWO_PI * z),
                       0.4 * np.sin(TWO_PI * (x + z)))
    s = StateField.from_parts(g, np.exp(-phi) * Q, np.exp(phi) * Q, 0.0, 0.0)
    s.G9[...] = connection_from_frame(s)
    ric_frame = np.exp(-2 * phi) * np.einsum("ia...,jb...,ab...->ij...", Q, Q, ric)
    return s, ric_frame


# ---- brute-force pointwise oracles, written index by index from the formulas

R3 = range(3)


def oracle_momentum(K, G, eK):
    M = np.zeros(3)
    for j in R3:
        for c in R3:
            M[j] += eK[c, c, j] - eK[j, c, c]
            for l in R3:
                M[j] -= G[c, c, l] * K[l, j] + G[c, j, l] * K[c, l]
    return M


def oracle_ricci(G, eG):
    R = np.zeros((3, 3))
    for i, j in itertools.product(R3, R3):
        minus = 0.0
        for b in R3:
            minus += eG[i, b, j, b] - eG[b, i, j, b]
            for c in R3:
                minus += G[b, i, c] * G[c, j, b] + G[b, b, c] * G[i, j, c]
        R[i, j] = -minus
    return R


def oracle_rhs_K(K, G, eG):
    tr = sum(K[i, i] for i in R3)
    kk = sum(K[i, j] ** 2 for i in R3 for j in R3)
    bracket = 0.0
    for a in R3:
        for b in R3:
            bracket += 2 * eG[a, b, a, b]
            for c in R3:
                bracket += G[b, a, c] * G[c, a, b] + G[b, b, c] * G[a, a, c]
    bracket += kk - tr * tr
    Ric = oracle_ricci(G, eG)
    out = np.zeros((3, 3))
    for i, j in itertools.product(R3, R3):
        out[i, j] = -tr * K[i, j] - 0.5 * (Ric[i, j] + Ric[j, i]) - 0.5 * (i == j) * bracket
    return out


def oracle_rhs_G(K, G, eK):
    M = oracle_momentum(K, G, eK)
    out = np.zeros((3, 3, 3))
    for i, j, b in itertools.product(R3, R3, R3):
        v = eK[j, b, i] - eK[b, j, i]
        for c in R3:
            v += (-K[i, c] * G[c, j, b] - G[j, b, c] * K[c, i] - G[j, i, c] * K[b, c]
                  + G[b, j, c] * K[c, i] + G[b, i, c] * K[j, c])
        v += (i == b) * M[j] - (i == j) * M[b]
        out[i, j, b] = v
    return out


def random_point_tensors(rng, scale=1.0):
    """Random K (symmetric), G (antisymmetric in last pair), eK, eG at one point."""
    K = rng.standard_normal((3, 3)) * scale
    K = K + K.T
    G = rng.standard_normal((3, 3, 3)) * scale
    G = G - np.swapaxes(G, 1, 2)
    eK = rng.standard_normal((3, 3, 3)) * scale
    eK = eK + np.swapaxes(eK, 1, 2)
    eG = rng.standard_normal((3, 3, 3, 3)) * scale
    eG = eG - np.swapaxes(eG, 2, 3)
    return K, G, eK, eG


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# ---- acceptance summary: one PASS/FAIL line per criterion at the end of the session

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
