import io
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracle_helpers import (
    alpha,
    cohen_brute,
    fn_op_conv_brute,
    op_conv_brute,
    pi_mat,
    rand_c,
    stft_brute,
    symplectic_fourier_brute,
)
from qha_lab import _core, qha
from qha_lab.phase_space import GridModel, Signal, make_region, special_signal
from qha_lab.windows import OperatorWindow, rank_one, wigner

N = 8
GRID = GridModel(N)


def _op(seed, herm=False):
    M = rand_c(np.random.default_rng(seed), N, N)
    if herm:
        M = M + M.conj().T
    return OperatorWindow(GRID, M)


def _sig(seed):
    return Signal(GRID, rand_c(np.random.default_rng(seed), N))


def test_cohen_against_brute_force():
    S, f, g = _op(0), _sig(1), _sig(2)
    assert np.allclose(qha.cohen_transform(S, f).values, cohen_brute(S.matrix, f.data))
    assert np.allclose(qha.cohen_transform(S, f, g).values, cohen_brute(S.matrix, f.data, g.data))


def test_stft_and_ambiguity_against_brute_force():
    f, g = _sig(3), _sig(4)
    assert np.allclose(qha.stft(f, g).values, stft_brute(f.data, g.data))
    assert np.allclose(qha.ambiguity(f).values, stft_brute(f.data, f.data))


def test_convolutions_against_brute_force():
    T, S = _op(5), _op(6)
    assert np.allclose(qha.op_convolution(T, S).values, op_conv_brute(T.matrix, S.matrix))
    F = rand_c(np.random.default_rng(7), N, N)
    assert np.allclose(qha.fn_op_convolution(F, S).matrix, fn_op_conv_brute(F, S.matrix))


def test_symplectic_fourier_against_brute_force_and_involution():
    F = rand_c(np.random.default_rng(8), N, N)
    G = qha.symplectic_fourier(qha.PhaseFunction(GRID, F))
    assert np.allclose(G.values, symplectic_fourier_brute(F))
    assert np.allclose(qha.symplectic_fourier(G).values, F)


def test_fourier_wigner_trace_definition():
    S = _op(9)
    F = qha.fourier_wigner(S).values
    chi = _core.halfphase(N)
    for m, k in [(0, 0), (1, 3), (5, 6), (7, 7)]:
        rho = chi[m, k] * pi_mat(N, m, k)
        assert F[m, k] == pytest.approx(np.trace(rho.conj().T @ S.matrix))


def test_moyal_and_parseval():
    f, g = _sig(10), _sig(11)
    V = qha.stft(f, g)
    assert V.lp_norm(2) ** 2 == pytest.approx(f.norm() ** 2 * g.norm() ** 2)
    S = _op(12)
    assert qha.fourier_wigner(S).lp_norm(2) == pytest.approx(np.linalg.norm(S.matrix))


def test_fn_op_convolution_full_region_of_identity_trace():
    # (1/n) sum_z alpha_z(S) = tr(S) Id on the cyclic grid
    S = _op(13)
    M = qha.fn_op_convolution(np.ones((N, N)), S).matrix
    assert np.allclose(M, np.trace(S.matrix) * np.eye(N))


def test_positivity_and_commutativity():
    rng = np.random.default_rng(14)
    A = rand_c(rng, N, N)
    B = rand_c(rng, N, N)
    T = OperatorWindow(GRID, A @ A.conj().T)
    S = OperatorWindow(GRID, B @ B.conj().T)
    TS = qha.op_convolution(T, S).values
    assert np.abs(TS.imag).max() < 1e-10 and TS.real.min() > -1e-10
    assert np.allclose(TS, qha.op_convolution(S, T).values)


def test_gaussian_cohen_for_wigner_window():
    g = GridModel(256, "continuum")
    X, XI = g.phase_coords()
    Q = qha.cohen_transform(wigner(g), special_signal(g, "gaussian")).values
    r2 = X ** 2 + XI ** 2
    near = r2 <= 16
    assert np.abs(Q - 2 * np.exp(-2 * np.pi * r2))[near].max() < 1e-10
    # the discrete parity window carries a ghost copy half a period away
    half = g.side() / 2
    ghost = np.abs(Q[(np.abs(X) < 1e-12) & (np.abs(np.abs(XI) - half) < 1e-12)])
    assert ghost.max() == pytest.approx(2.0)


def test_phase_function_csv_and_json():
    F = qha.ambiguity(_sig(15))
    text = F.to_csv()
    rows = text.strip().split("\n")
    assert rows[0] == "m,k,re,im" and len(rows) == N * N + 1
    m, k, re, im = rows[1 + 3 * N + 2].split(",")
    assert (int(m), int(k)) == (3, 2)
    assert float(re) == pytest.approx(F.values[3, 2].real, rel=1e-11, abs=1e-11)
    buf = io.StringIO()
    F.to_csv(buf)
    assert buf.getvalue() == text
    back = qha.PhaseFunction.from_dict(json.loads(json.dumps(F.to_dict())))
    assert np.array_equal(back.values, F.values)


def test_lp_norm_on_region():
    g = GridModel(16, "continuum")
    reg = make_region(g, {"kind": "ball", "radius": 1.0})
    F = qha.indicator(reg)
    assert F.lp_norm(3, reg) == pytest.approx(reg.measure ** (1 / 3))
    assert F.lp_norm(np.inf) == 1.0


def test_fourier_transforms_dispatch():
    S = _op(16)
    a = qha.fourier_transforms(S, "weyl_symbol")
    assert np.allclose(qha.fourier_transforms(a, "inverse_weyl_symbol").matrix, S.matrix)
    with pytest.raises(ValueError):
        qha.fourier_transforms(S, "nope")


def test_grid_mismatch_rejected():
    with pytest.raises(ValueError):
        qha.cohen_transform(wigner(GridModel(16)), _sig(0))


# ---------------------------------------------------------- properties

seeds = st.integers(0, 2 ** 20)


@settings(max_examples=30, deadline=None)
@given(seeds, seeds)
def test_fsigma_of_convolution_is_product(s1, s2):
    T, S = _op(s1), _op(s2)
    lhs = qha.symplectic_fourier(qha.op_convolution(T, S)).values
    rhs = qha.fourier_wigner(T).values * qha.fourier_wigner(S).values
    assert np.allclose(lhs, rhs)


@settings(max_examples=30, deadline=None)
@given(seeds, seeds)
def test_rank_one_convolution_is_cohen(s1, s2):
    f, S = _sig(s1), _op(s2)
    lhs = qha.op_convolution(rank_one(f), S.reflected()).values
    assert np.allclose(lhs, qha.cohen_transform(S, f).values)


@settings(max_examples=30, deadline=None)
@given(seeds, st.integers(0, N - 1), st.integers(0, N - 1))
def test_cohen_covariance(seed, m, k):
    # Q_S(pi(w) f)(z) = Q_S f(z - w)
    S, f = _op(seed), _sig(seed + 1)
    Q = qha.cohen_transform(S, f).values
    Qs = qha.cohen_transform(S, Signal(GRID, pi_mat(N, m, k) @ f.data)).values
    assert np.allclose(Qs, np.roll(Q, (m, k), axis=(0, 1)))


@settings(max_examples=30, deadline=None)
@given(seeds, seeds)
def test_symbol_convolution(s1, s2):
    T, S = _op(s1), _op(s2)
    lhs = qha.op_convolution(T, S).values
    rhs = qha.phase_convolution(qha.weyl_symbol(T), qha.weyl_symbol(S)).values
    assert np.allclose(lhs, rhs)


@settings(max_examples=20, deadline=None)
@given(seeds, st.integers(0, N - 1), st.integers(0, N - 1))
def test_alpha_acts_on_fw_by_character(seed, m, k):
    S = _op(seed)
    F = qha.fourier_wigner(S).values
    Fa = qha.fourier_wigner(OperatorWindow(GRID, alpha(S.matrix, N, m, k))).values
    mz, kz = np.meshgrid(np.arange(N), np.arange(N), indexing="ij")
    assert np.allclose(Fa, np.exp(-2j * np.pi * (m * kz - k * mz) / N) * F)


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_hermitian_window_gives_real_cohen(seed):
    S, f = _op(seed, herm=True), _sig(seed + 3)
    assert np.abs(qha.cohen_transform(S, f).values.imag).max() < 1e-10
