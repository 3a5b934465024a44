"""Array-level kernels shared by the public modules.

Everything here works on plain numpy arrays in the unitary coefficient
picture: a signal is a vector ``c`` in C^n with the standard inner product,
an operator is an n x n matrix, and a phase-space function is an n x n array
indexed ``[m, k]`` (position shift, frequency shift).  The measure of one
phase-space point is ``1/n``.

The time-frequency shift is ``pi(m, k) = M_k T_m`` with
``(T_m c)[j] = c[j - m]`` and ``(M_k c)[j] = exp(2 pi i k j / n) c[j]``.
Transforms use the symmetrised shifts ``rho(z) = chi(z) pi(z)`` where
``chi`` is a discrete half-phase: ``chi(z)**2 = exp(-2 pi i m k / n)`` and
``chi(-z) = chi(z)``.  With this choice ``rho(z) rho(-z) = I`` and the
Fourier-Wigner transform ``F_W(S)(z) = tr(rho(z)^* S)`` satisfies Parseval
and the convolution theorem exactly on Z_n x Z_n.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np


def centered(n: int) -> np.ndarray:
    """Representatives of Z_n in [-n/2, n/2)."""
    i = np.arange(n)
    return np.where(i >= n // 2, i - n, i)


@lru_cache(maxsize=16)
def _halfphase(n: int) -> np.ndarray:
    t = centered(n).astype(float)
    base = np.exp(-1j * np.pi * np.outer(t, t) / n)
    m = np.arange(n)[:, None]
    k = np.arange(n)[None, :]
    mm, kk = (-m) % n, (-k) % n
    # pick one representative of each pair {z, -z} so that chi is even
    own = (m * n + k) <= (mm * n + kk)
    chi = np.where(own, base, base[mm, kk])
    chi.setflags(write=False)
    return chi


def halfphase(n: int) -> np.ndarray:
    """Even unimodular half-phase chi with chi(z)^2 = exp(-2 pi i m k/n)."""
    return _halfphase(n)


def reflect(F: np.ndarray) -> np.ndarray:
    """F(z) -> F(-z) on the cyclic grid."""
    return np.roll(F[::-1, ::-1], 1, axis=(0, 1))


def tf_shift_vec(c: np.ndarray, m: int, k: int) -> np.ndarray:
    n = c.shape[0]
    j = np.arange(n)
    return np.exp(2j * np.pi * (k % n) * j / n) * np.roll(c, m % n)


def parity_vec(c: np.ndarray) -> np.ndarray:
    return np.roll(c[::-1], 1)


def tf_matrix(n: int, m: int, k: int) -> np.ndarray:
    j = np.arange(n)
    P = np.zeros((n, n), dtype=complex)
    P[j, (j - m) % n] = np.exp(2j * np.pi * (k % n) * j / n)
    return P


def parity_matrix(n: int) -> np.ndarray:
    j = np.arange(n)
    P = np.zeros((n, n), dtype=complex)
    P[j, (-j) % n] = 1.0
    return P


def _diag_index(n: int):
    m = np.arange(n)[:, None]
    j = np.arange(n)[None, :]
    return j + 0 * m, (j - m) % n


def conjugate_shift(S: np.ndarray, m: int, k: int) -> np.ndarray:
    """alpha_z(S) = pi(z) S pi(z)^* without forming pi(z)."""
    n = S.shape[0]
    j = np.arange(n)
    ph = np.exp(2j * np.pi * (k % n) * j / n)
    R = np.roll(S, (m % n, m % n), axis=(0, 1))
    return ph[:, None] * R * ph.conj()[None, :]


def origin_sign(n: int) -> np.ndarray:
    """(-1)^k on the phase grid.

    Index modulation exp(2 pi i k j/n) is referenced to j = 0 while the
    continuum emulation puts x = 0 at j = n/2; the two differ by (-1)^k.
    """
    k = np.arange(n)
    return np.broadcast_to(np.where(k % 2, -1.0, 1.0)[None, :], (n, n))


def fourier_wigner(S: np.ndarray, origin: bool = False) -> np.ndarray:
    """F_W(S)(m, k) = tr(rho(m, k)^* S), optionally referenced to x = 0."""
    n = S.shape[0]
    rows, cols = _diag_index(n)
    D = S[rows, cols]  # D[m, j] = S[j, j - m]
    F = np.conj(halfphase(n)) * np.fft.fft(D, axis=1)
    return F * origin_sign(n) if origin else F


def inverse_fourier_wigner(F: np.ndarray, origin: bool = False) -> np.ndarray:
    """S = (1/n) sum_z F(z) rho(z)."""
    n = F.shape[0]
    if origin:
        F = F * origin_sign(n)
    D = np.fft.ifft(F * halfphase(n), axis=1)
    rows, cols = _diag_index(n)
    S = np.empty((n, n), dtype=complex)
    S[rows, cols] = D
    return S


def symplectic_fourier(F: np.ndarray) -> np.ndarray:
    """(1/n) sum_u F(u) exp(-2 pi i [u, z]/n), [u, z] = m_u k_z - k_u m_z.

    This is an exact involution on the grid.
    """
    return np.fft.ifft(np.fft.fft(F, axis=0), axis=1).T


def stft(c: np.ndarray, g: np.ndarray) -> np.ndarray:
    """V_g f(m, k) = <f, pi(m, k) g>."""
    n = c.shape[0]
    rows, cols = _diag_index(n)
    D = c[rows] * np.conj(g[cols])
    return np.fft.fft(D, axis=1)


def stft_adjoint(W: np.ndarray, g: np.ndarray) -> np.ndarray:
    """sum_{m,k} W(m, k) pi(m, k) g  (unweighted synthesis)."""
    n = g.shape[0]
    rows, cols = _diag_index(n)
    E = n * np.fft.ifft(W, axis=1)  # E[m, j] = sum_k W[m,k] e^{2 pi i k j/n}
    return np.sum(E * g[cols], axis=0)


def stft_rows(c: np.ndarray, g: np.ndarray, rows: np.ndarray) -> np.ndarray:
    """V_g f restricted to the position shifts ``rows``; shape (len(rows), n)."""
    n = c.shape[0]
    j = np.arange(n)
    D = c[None, :] * np.conj(g[(j[None, :] - rows[:, None]) % n])
    return np.fft.fft(D, axis=1)


def stft_adjoint_rows(W: np.ndarray, g: np.ndarray, rows: np.ndarray) -> np.ndarray:
    """sum over (m in rows, k) of W pi(m, k) g."""
    n = g.shape[0]
    j = np.arange(n)
    E = n * np.fft.ifft(W, axis=1)
    return np.sum(E * g[(j[None, :] - rows[:, None]) % n], axis=0)


def fw_rank_one(f: np.ndarray, g: np.ndarray) -> np.ndarray:
    """F_W(f g^H) = conj(chi) V_g f."""
    return np.conj(halfphase(f.shape[0])) * stft(f, g)


def convolve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """(1/n) sum_u a(u) b(w - u) on the cyclic phase grid."""
    n = a.shape[0]
    return np.fft.ifft2(np.fft.fft2(a) * np.fft.fft2(b)) / n


def op_convolution(T: np.ndarray, S: np.ndarray) -> np.ndarray:
    """T * S (z) = tr(T alpha_z(PSP))."""
    return symplectic_fourier(fourier_wigner(T) * fourier_wigner(S))


def fn_op_convolution(F: np.ndarray, S: np.ndarray) -> np.ndarray:
    """(1/n) sum_z F(z) alpha_z(S)."""
    return inverse_fourier_wigner(symplectic_fourier(F) * fourier_wigner(S))


def cohen(fw_S_reflected: np.ndarray, f: np.ndarray, g: np.ndarray | None = None) -> np.ndarray:
    """<alpha_z(S) f, g> given F_W of the reflected window."""
    if g is None:
        g = f
    return symplectic_fourier(fw_rank_one(f, g) * fw_S_reflected)


def hermite_functions(x: np.ndarray, jmax: int) -> np.ndarray:
    """L2-normalised Hermite functions 2^{1/4}/sqrt(2^j j!) H_j(sqrt(2 pi) x) e^{-pi x^2}.

    Returns array of shape (jmax + 1, len(x)); three-term recurrence.
    """
    u = np.sqrt(2 * np.pi) * np.asarray(x, dtype=float)
    H = np.zeros((jmax + 1, u.size))
    H[0] = np.pi ** -0.25 * np.exp(-u ** 2 / 2)
    if jmax >= 1:
        H[1] = np.sqrt(2.0) * u * H[0]
    for j in range(1, jmax):
        H[j + 1] = np.sqrt(2.0 / (j + 1)) * u * H[j] - np.sqrt(j / (j + 1)) * H[j - 1]
    return (2 * np.pi) ** 0.25 * H
