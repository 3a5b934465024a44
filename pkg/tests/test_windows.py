import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracle_helpers import parity_mat, pi_mat, rand_c
from qha_lab import _core
from qha_lab.phase_space import GridModel, PhasePoint, hermite_basis, special_signal
from qha_lab.qha import fourier_wigner, weyl_symbol
from qha_lab.windows import (
    OperatorWindow,
    born_jordan,
    build_window,
    diagonal_series,
    id_minus_gauss,
    identity,
    identity_plus,
    multiplication,
    numerical_radius,
    numerical_radius_vector,
    rank_one,
    scaled,
    schatten_norm,
    shift,
    tau_wigner,
    weyl_quantize,
    wigner,
)


def test_flags():
    g = GridModel(16, "continuum")
    assert wigner(g).flags == {"hermitian": True, "positive": False}
    assert rank_one(special_signal(g, "gaussian")).flags == {"hermitian": True, "positive": True}
    assert id_minus_gauss(g).flags["positive"]
    assert not shift(g, PhasePoint(1, 0)).flags["hermitian"]
    assert identity(g).flags["positive"]
    assert isinstance(wigner(g).flags["hermitian"], bool)
    with pytest.raises(ValueError):
        OperatorWindow(g, np.eye(4))
    with pytest.raises(ValueError):
        OperatorWindow(g, np.eye(16), "unknown")


def test_builders_match_explicit_matrices():
    n = 8
    g = GridModel(n)
    assert np.allclose(wigner(g).matrix, 2 * parity_mat(n))
    assert np.allclose(shift(g, PhasePoint(3, 2)).matrix, pi_mat(n, 3, 2))
    rng = np.random.default_rng(0)
    from qha_lab.phase_space import Signal

    u, v = Signal(g, rand_c(rng, n)), Signal(g, rand_c(rng, n))
    R = rank_one(u, v)
    f = rand_c(rng, n)
    assert np.allclose(R.matrix @ f, np.vdot(v.coeffs, f) * u.coeffs)
    c, U, s, V = R.meta["lowrank"]
    assert np.allclose(c * np.eye(n) + (U * s) @ V.conj().T, R.matrix)
    K = identity_plus(0.5, scaled(R, 2.0))
    c, U, s, V = K.meta["lowrank"]
    assert np.allclose(c * np.eye(n) + (U * s) @ V.conj().T, K.matrix)
    M = multiplication(g, np.arange(n, dtype=float))
    assert np.allclose(M.matrix, np.diag(np.arange(n)))


def test_diagonal_series_is_projection():
    g = GridModel(64, "continuum")
    S = diagonal_series(g, [0, 3, 7])
    assert np.allclose(S.matrix @ S.matrix, S.matrix, atol=1e-12)
    assert S.op_norm == pytest.approx(1.0)
    assert np.trace(S.matrix).real == pytest.approx(3.0)


def test_build_window_dispatch():
    g = GridModel(16, "continuum")
    assert build_window(g, "wigner").structure == "parity-multiple"
    assert build_window(g, "shift", z0=(1, 2)).meta["z0"] == (1, 2)
    assert build_window(g, "zero").is_zero()
    with pytest.raises(ValueError):
        build_window(g, "nonsense")


def test_tau_half_close_to_wigner_on_hermite_span():
    # the sampled tau = 1/2 window agrees with 2P on the well-resolved Hermite span
    g = GridModel(256, "continuum")
    H = hermite_basis(g, 20)
    D = H.conj().T @ (tau_wigner(g, 0.5).matrix - wigner(g).matrix) @ H
    assert np.linalg.norm(D, 2) < 1e-10


def test_born_jordan_routes_agree():
    g = GridModel(64, "continuum")
    a, b = born_jordan(g, "sinc-symbol"), born_jordan(g, "tau-average", n_tau=801)
    assert np.linalg.norm(a.matrix - b.matrix, 2) / np.linalg.norm(a.matrix, 2) < 1e-4
    assert a.flags["hermitian"]
    with pytest.raises(ValueError):
        born_jordan(GridModel(16), "sinc-symbol")
    with pytest.raises(ValueError):
        tau_wigner(g, 1.5)


def test_gaussian_weyl_symbol():
    g = GridModel(128, "continuum")
    X, XI = g.phase_coords()
    a = weyl_symbol(rank_one(special_signal(g, "gaussian"))).values
    assert np.abs(a - 2 * np.exp(-2 * np.pi * (X ** 2 + XI ** 2))).max() < 1e-10


@pytest.mark.parametrize("mode", ["exact", "continuum"])
def test_weyl_quantize_roundtrip(mode):
    g = GridModel(16, mode)
    S = OperatorWindow(g, rand_c(np.random.default_rng(1), 16, 16))
    assert np.allclose(weyl_quantize(g, weyl_symbol(S)).matrix, S.matrix)


def test_schatten_norms():
    rng = np.random.default_rng(2)
    M = rand_c(rng, 12, 12)
    sv = np.linalg.svd(M, compute_uv=False)
    assert schatten_norm(M, 1) == pytest.approx(sv.sum())
    assert schatten_norm(M, 2) == pytest.approx(np.sqrt((sv ** 2).sum()))
    assert schatten_norm(M, np.inf) == pytest.approx(sv[0])
    assert schatten_norm(M, 3) == pytest.approx((sv ** 3).sum() ** (1 / 3))
    with pytest.raises(ValueError):
        schatten_norm(M, 0.5)


def test_numerical_radius_against_dense_scan():
    rng = np.random.default_rng(3)
    for _ in range(5):
        M = rand_c(rng, 10, 10)
        thetas = np.linspace(0, 2 * np.pi, 20001)
        scan = max(np.linalg.eigvalsh((np.exp(1j * t) * M + np.exp(-1j * t) * M.conj().T) / 2)[-1]
                   for t in thetas)
        w, v = numerical_radius_vector(M)
        assert w == pytest.approx(scan, rel=1e-7)
        assert w >= scan - 1e-12
        assert abs(np.vdot(v, M @ v)) == pytest.approx(w, rel=1e-9)
        sv = np.linalg.svd(M, compute_uv=False)[0]
        assert sv / 2 - 1e-12 <= w <= sv + 1e-12


def test_numerical_radius_of_normal_operators():
    g = GridModel(16)
    assert numerical_radius(shift(g, PhasePoint(3, 1))) == pytest.approx(1.0)
    assert numerical_radius(wigner(g)) == pytest.approx(2.0)


def test_window_serialization_roundtrip():
    g = GridModel(8, "continuum")
    S = OperatorWindow(g, rand_c(np.random.default_rng(4), 8, 8))
    back = OperatorWindow.from_dict(json.loads(json.dumps(S.to_dict())))
    assert np.array_equal(back.matrix, S.matrix)
    assert back.grid == g


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 7), st.integers(0, 7), st.integers(0, 2 ** 16))
def test_adjoint_and_reflection_symbols(m, k, seed):
    # F_W(S^*) = conj(reflect(F_W(S))) and alpha_z changes F_W by a character only
    g = GridModel(8)
    S = OperatorWindow(g, rand_c(np.random.default_rng(seed), 8, 8))
    F = fourier_wigner(S).values
    assert np.allclose(fourier_wigner(S.adjoint()).values, np.conj(_core.reflect(F)))
    Fa = fourier_wigner(OperatorWindow(g, _core.conjugate_shift(S.matrix, m, k))).values
    assert np.allclose(np.abs(Fa), np.abs(F))
