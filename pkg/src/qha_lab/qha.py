"""Quantum harmonic analysis on the finite phase space.

Conventions (measure dz = (1/n) sum over the grid):

* ``alpha_z(S) = pi(z) S pi(z)^*`` and ``S_check = P S P``.
* ``Q_S(f, g)(z) = <alpha_z(S) f, g>``; ``Af(z) = <f, pi(z) f>``.
* ``T * S(z) = tr(T alpha_z(S_check))`` and ``F * S = (1/n) sum_z F(z) alpha_z(S)``.
* ``F_W(S)(z) = tr(rho(z)^* S)`` with the even half-phase described in
  ``_core``; in continuum mode it is additionally referenced to x = 0.
* ``F_sigma F(z) = (1/n) sum_u F(u) exp(-2 pi i [u, z]/n)``, an involution.
* Weyl symbol ``a_S = F_sigma F_W(S)``.

With these choices F_W is unitary onto L^2(dz), ``F_sigma(T * S) =
F_W(T) F_W(S)`` and ``T * S = a_T conv a_S`` hold exactly.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

from . import _core
from .phase_space import GridModel, Region, Signal, _same_grid
from .windows import OperatorWindow


@dataclass(frozen=True, eq=False)
class PhaseFunction:
    """Complex field on the n x n phase grid, indexed [m, k]."""

    grid: GridModel
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=complex)
        if v.shape != (self.grid.n, self.grid.n):
            raise ValueError("phase function must be n x n")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def lp_norm(self, p: float, region: Region | None = None) -> float:
        """(sum |F|^p / n)^{1/p} over the region (max modulus for p = inf)."""
        a = np.abs(self.values)
        if region is not None:
            _same_grid(self.grid, region.grid)
            a = a[region.mask]
        if np.isinf(p):
            return float(a.max()) if a.size else 0.0
        return float((np.sum(a ** p) * self.grid.phase_weight) ** (1.0 / p))

    def __getitem__(self, idx):
        return self.values[idx]

    def __add__(self, other: "PhaseFunction") -> "PhaseFunction":
        return PhaseFunction(self.grid, self.values + other.values)

    def __sub__(self, other: "PhaseFunction") -> "PhaseFunction":
        return PhaseFunction(self.grid, self.values - other.values)

    def abs(self) -> np.ndarray:
        return np.abs(self.values)

    def reflected(self) -> "PhaseFunction":
        return PhaseFunction(self.grid, _core.reflect(self.values))

    def to_csv(self, fh=None) -> str | None:
        """Long-form CSV with columns m, k, re, im (row-major by (m, k))."""
        own = fh is None
        fh = io.StringIO() if own else fh
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["m", "k", "re", "im"])
        n = self.grid.n
        for m in range(n):
            for k in range(n):
                v = self.values[m, k]
                w.writerow([m, k, f"{v.real:#.12g}", f"{v.imag:#.12g}"])
        return fh.getvalue() if own else None

    def to_dict(self) -> dict:
        return {
            "n": self.grid.n,
            "mode": self.grid.mode,
            "values": [[float(v.real), float(v.imag)] for v in self.values.ravel()],
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "PhaseFunction":
        n = int(d["n"])
        a = np.asarray(d["values"], dtype=float)
        return cls(GridModel(n, d.get("mode", "exact")), (a[:, 0] + 1j * a[:, 1]).reshape(n, n))


def indicator(region: Region) -> PhaseFunction:
    return PhaseFunction(region.grid, region.mask.astype(complex))


def tensor(f: Signal, g: Signal | None = None) -> OperatorWindow:
    """f (x) g as an operator h -> <h, g> f (alias of windows.rank_one)."""
    from .windows import rank_one

    return rank_one(f, g)


# ------------------------------------------------------------- transforms

def cohen_transform(S: OperatorWindow, f: Signal, g: Signal | None = None) -> PhaseFunction:
    """Q_S(f, g)(z) = <alpha_z(S) f, g>; g defaults to f."""
    _same_grid(S.grid, f.grid)
    gc = None
    if g is not None:
        _same_grid(S.grid, g.grid)
        gc = g.coeffs
    return PhaseFunction(f.grid, _core.cohen(S.fw_reflected, f.coeffs, gc))


def stft(f: Signal, g: Signal) -> PhaseFunction:
    """V_g f(z) = <f, pi(z) g>."""
    _same_grid(f.grid, g.grid)
    return PhaseFunction(f.grid, _core.stft(f.coeffs, g.coeffs))


def ambiguity(f: Signal) -> PhaseFunction:
    """Af(z) = <f, pi(z) f>."""
    return stft(f, f)


def op_convolution(T: OperatorWindow, S: OperatorWindow) -> PhaseFunction:
    """T * S (z) = tr(T alpha_z(P S P))."""
    _same_grid(T.grid, S.grid)
    return PhaseFunction(T.grid, _core.op_convolution(T.matrix, S.matrix))


def fn_op_convolution(F: PhaseFunction | np.ndarray, S: OperatorWindow) -> OperatorWindow:
    """F * S = (1/n) sum_z F(z) alpha_z(S)."""
    vals = np.asarray(getattr(F, "values", F))
    if vals.shape != (S.n, S.n):
        raise ValueError("grid mismatch")
    M = _core.fn_op_convolution(vals, S.matrix)
    if np.isrealobj(vals) or not np.any(vals.imag):
        if S.flags["hermitian"]:
            M = (M + M.conj().T) / 2
    return OperatorWindow(S.grid, M, "generic")


def fourier_wigner(S: OperatorWindow) -> PhaseFunction:
    return PhaseFunction(S.grid, _core.fourier_wigner(S.matrix, origin=S.grid.continuum))


def inverse_fourier_wigner(F: PhaseFunction) -> OperatorWindow:
    M = _core.inverse_fourier_wigner(F.values, origin=F.grid.continuum)
    return OperatorWindow(F.grid, M, "weyl-quantized")


def symplectic_fourier(F: PhaseFunction) -> PhaseFunction:
    return PhaseFunction(F.grid, _core.symplectic_fourier(F.values))


def weyl_symbol(S: OperatorWindow) -> PhaseFunction:
    """a_S = F_sigma F_W(S)."""
    return symplectic_fourier(fourier_wigner(S))


def phase_convolution(a: PhaseFunction, b: PhaseFunction) -> PhaseFunction:
    """(a conv b)(w) = (1/n) sum_u a(u) b(w - u)."""
    _same_grid(a.grid, b.grid)
    return PhaseFunction(a.grid, _core.convolve(a.values, b.values))


def fourier_transforms(x, mode: str):
    """Dispatch over the transform family.

    mode in {fourier_wigner, inverse_fourier_wigner, symplectic_fourier,
    inverse_symplectic_fourier, weyl_symbol, inverse_weyl_symbol}.
    """
    from .windows import weyl_quantize

    table = {
        "fourier_wigner": fourier_wigner,
        "inverse_fourier_wigner": inverse_fourier_wigner,
        "symplectic_fourier": symplectic_fourier,
        "inverse_symplectic_fourier": symplectic_fourier,
        "weyl_symbol": weyl_symbol,
        "inverse_weyl_symbol": lambda F: weyl_quantize(F.grid, F),
    }
    if mode not in table:
        raise ValueError(f"unknown transform mode {mode!r}")
    return table[mode](x)
