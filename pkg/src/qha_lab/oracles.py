"""Identity suite on small exact-cyclic grids.

Every entry is a residual (max abs or relative error) that should sit at
roundoff level.
"""
from __future__ import annotations

import numpy as np

from . import qha
from .operator_rep import MAX_DOUBLE_N, polarized_adjoint, polarized_cohen
from .phase_space import GridModel, Signal
from .windows import OperatorWindow, weyl_quantize

IDENTITY_TOL = 1e-10


def _rand_op(grid, rng):
    n = grid.n
    return OperatorWindow(grid, rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))


def _rand_sig(grid, rng):
    n = grid.n
    return Signal(grid, rng.standard_normal(n) + 1j * rng.standard_normal(n))


def _hs_inner(A: OperatorWindow, B: OperatorWindow) -> complex:
    return complex(np.vdot(B.matrix, A.matrix))  # tr(A B^*)


def identity_suite(n: int = 8, seed: int = 0, mode: str = "exact") -> dict[str, float]:
    """Residuals of the core identities for random data on an n-point grid."""
    grid = GridModel(n, mode)
    rng = np.random.default_rng(seed)
    f, g = _rand_sig(grid, rng), _rand_sig(grid, rng)
    S, T = _rand_op(grid, rng), _rand_op(grid, rng)
    w = grid.phase_weight
    out = {}

    V = qha.stft(f, g).values
    out["moyal"] = abs(np.sum(np.abs(V) ** 2) * w - f.norm() ** 2 * g.norm() ** 2) / (f.norm() * g.norm()) ** 2

    F = qha.fourier_wigner(S).values
    hs2 = np.linalg.norm(S.matrix) ** 2
    out["fw-parseval"] = abs(np.sum(np.abs(F) ** 2) * w - hs2) / hs2

    back = weyl_quantize(grid, qha.weyl_symbol(S)).matrix
    out["weyl-roundtrip"] = np.abs(back - S.matrix).max() / np.abs(S.matrix).max()

    TS = qha.op_convolution(T, S)
    lhs = qha.symplectic_fourier(TS).values
    rhs = qha.fourier_wigner(T).values * qha.fourier_wigner(S).values
    out["fsigma-convolution"] = np.abs(lhs - rhs).max() / np.abs(rhs).max()

    Q = qha.cohen_transform(S, f).values
    ff = qha.op_convolution(qha.tensor(f), S.reflected()).values
    out["rank-one-cohen"] = np.abs(Q - ff).max() / np.abs(Q).max()

    sym = qha.phase_convolution(qha.weyl_symbol(T), qha.weyl_symbol(S)).values
    out["symbol-convolution"] = np.abs(TS.values - sym).max() / np.abs(TS.values).max()

    if n <= MAX_DOUBLE_N:
        S1, R2, W = _rand_op(grid, rng), _rand_op(grid, rng), _rand_op(grid, rng)
        QT = polarized_cohen(T, S1)
        scale = np.linalg.norm(T.matrix) * np.linalg.norm(S1.matrix)
        out["polarized-isometry"] = abs(QT.norm() - scale) / scale
        lhs = QT.inner(polarized_cohen(W, R2))
        rhs = _hs_inner(T, W) * np.conj(_hs_inner(S1, R2))
        out["polarized-orthogonality"] = abs(lhs - rhs) / abs(rhs)
        rec = polarized_adjoint(QT, S1).matrix
        out["polarized-reconstruction"] = (np.abs(rec - np.linalg.norm(S1.matrix) ** 2 * T.matrix).max()
                                           / np.abs(T.matrix).max() / np.linalg.norm(S1.matrix) ** 2)
    return {k: float(v) for k, v in out.items()}
