"""Operator windows, Schatten norms and the numerical radius.

Window matrices act on sample vectors; since sampling only rescales the
inner product, the same matrix acts on coefficient vectors and all norms and
traces are plain matrix quantities.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Callable, Mapping, Sequence

import numpy as np
from scipy import optimize

from . import _core
from .phase_space import GridModel, PhasePoint, Signal, hermite_basis

STRUCTURES = (
    "rank-one",
    "parity-multiple",
    "weyl-quantized",
    "diagonal-series",
    "shift",
    "identity-plus-compact",
    "generic",
)

FLAG_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class OperatorWindow:
    """An n x n window with verified flags.

    ``meta`` carries optional structure data used by fast evaluation paths
    (``lowrank = (c, U, s, V)`` meaning ``c I + U diag(s) V^H``, or ``z0``
    for shift windows).  It never changes the matrix.
    """

    grid: GridModel
    matrix: np.ndarray = field(repr=False)
    structure: str = "generic"
    meta: Mapping[str, Any] = field(default_factory=dict, repr=False, compare=False)
    flags: Mapping[str, bool] = field(init=False, compare=False)

    def __post_init__(self):
        M = np.array(self.matrix, dtype=complex)
        n = self.grid.n
        if M.shape != (n, n):
            raise ValueError(f"window matrix must be {n} x {n}")
        if self.structure not in STRUCTURES:
            raise ValueError(f"unknown structure {self.structure!r}")
        M.setflags(write=False)
        object.__setattr__(self, "matrix", M)
        object.__setattr__(self, "flags", _verify_flags(M))

    @property
    def n(self) -> int:
        return self.grid.n

    @cached_property
    def op_norm(self) -> float:
        """Operator norm ||S||_B."""
        if self.flags["hermitian"]:
            ev = self.eigenvalues
            return float(np.abs(ev).max()) if ev.size else 0.0
        return float(np.linalg.norm(self.matrix, 2))

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        """Eigenvalues (descending) of the Hermitian part."""
        H = (self.matrix + self.matrix.conj().T) / 2
        return np.linalg.eigvalsh(H)[::-1]

    @cached_property
    def fw_reflected(self) -> np.ndarray:
        """Fourier-Wigner transform of the reflected window PSP."""
        return _core.reflect(_core.fourier_wigner(self.matrix))

    def is_zero(self) -> bool:
        return not np.any(self.matrix)

    def adjoint(self) -> "OperatorWindow":
        meta = {}
        if "lowrank" in self.meta:
            c, U, s, V = self.meta["lowrank"]
            meta["lowrank"] = (np.conj(c), V, np.conj(s), U)
        return OperatorWindow(self.grid, self.matrix.conj().T, self.structure, meta)

    def reflected(self) -> "OperatorWindow":
        P = _core.parity_matrix(self.n)
        return OperatorWindow(self.grid, P @ self.matrix @ P, self.structure)

    def apply(self, f: Signal) -> Signal:
        return Signal(f.grid, self.matrix @ f.data)

    def to_dict(self) -> dict:
        M = self.matrix
        return {
            "n": self.n,
            "mode": self.grid.mode,
            "matrix": [[[float(v.real), float(v.imag)] for v in row] for row in M],
            "flags": dict(self.flags),
            "structure": self.structure,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "OperatorWindow":
        grid = GridModel(int(d["n"]), d.get("mode", "exact"))
        arr = np.asarray(d["matrix"], dtype=float)
        return cls(grid, arr[..., 0] + 1j * arr[..., 1], d.get("structure", "generic"))


def _verify_flags(M: np.ndarray) -> dict:
    fro = np.linalg.norm(M)
    herm = bool(fro == 0 or np.linalg.norm(M - M.conj().T) <= FLAG_TOL * fro)
    pos = False
    if herm:
        ev = np.linalg.eigvalsh((M + M.conj().T) / 2)
        scale = np.abs(ev).max() if ev.size else 0.0
        pos = bool(ev.min() >= -FLAG_TOL * scale)
    return {"hermitian": herm, "positive": pos}


# ---------------------------------------------------------------- builders

def rank_one(g: Signal, h: Signal | None = None) -> OperatorWindow:
    """g (x) h, acting as f -> <f, h> g."""
    h = g if h is None else h
    if g.grid != h.grid:
        raise ValueError("grid mismatch")
    u, v = g.coeffs, h.coeffs
    meta = {"lowrank": (0.0, u[:, None], np.ones(1), v[:, None])}
    return OperatorWindow(g.grid, np.outer(u, v.conj()), "rank-one", meta)


def wigner(grid: GridModel) -> OperatorWindow:
    """S_W = 2P."""
    return OperatorWindow(grid, 2 * _core.parity_matrix(grid.n), "parity-multiple", {"factor": 2.0})


def _chirp_product(grid: GridModel) -> np.ndarray:
    t = _core.centered(grid.n).astype(float)
    return np.outer(t, t) / grid.n  # x * xi in continuum coordinates


def _require_continuum(grid: GridModel):
    if not grid.continuum:
        raise ValueError("continuum emulation required")


def tau_kernel(grid: GridModel, tau: float) -> np.ndarray:
    """Continuum-referenced sampled Fourier-Wigner transform exp(2 pi i (tau - 1/2) x xi) of S_tau."""
    return np.exp(2j * np.pi * (tau - 0.5) * _chirp_product(grid))


def tau_wigner(grid: GridModel, tau: float) -> OperatorWindow:
    """tau-Wigner window obtained by inverting the sampled Fourier-Wigner kernel."""
    _require_continuum(grid)
    if not 0.0 < tau < 1.0:
        raise ValueError(f"tau must lie in (0, 1), got {tau}")
    M = _core.inverse_fourier_wigner(tau_kernel(grid, tau), origin=True)
    return OperatorWindow(grid, M, "weyl-quantized", {"tau": tau})


def born_jordan(grid: GridModel, method: str = "sinc-symbol", n_tau: int = 201) -> OperatorWindow:
    """Born-Jordan window.

    ``sinc-symbol`` inverts the sampled kernel sinc(pi x xi); ``tau-average``
    averages tau-Wigner kernels over a midpoint rule with ``n_tau`` nodes.
    """
    _require_continuum(grid)
    if method == "sinc-symbol":
        # np.sinc(t) = sin(pi t)/(pi t)
        F = np.sinc(_chirp_product(grid)).astype(complex)
    elif method == "tau-average":
        taus = (np.arange(n_tau) + 0.5) / n_tau
        F = sum(tau_kernel(grid, t) for t in taus) / n_tau
    else:
        raise ValueError(f"unknown Born-Jordan method {method!r}")
    M = _core.inverse_fourier_wigner(F, origin=True)
    return OperatorWindow(grid, M, "weyl-quantized", {"method": method})


def shift(grid: GridModel, z0: PhasePoint) -> OperatorWindow:
    """pi(z0) as a window."""
    z0.check(grid)
    return OperatorWindow(grid, _core.tf_matrix(grid.n, z0.m, z0.k), "shift", {"z0": (z0.m, z0.k)})


def identity(grid: GridModel) -> OperatorWindow:
    return identity_plus(1.0, None, grid)


def identity_plus(c: complex, K: OperatorWindow | None, grid: GridModel | None = None) -> OperatorWindow:
    """c Id + K."""
    grid = K.grid if K is not None else grid
    n = grid.n
    M = c * np.eye(n, dtype=complex)
    meta: dict = {}
    if K is None:
        meta["lowrank"] = (c, np.zeros((n, 0)), np.zeros(0), np.zeros((n, 0)))
    else:
        M = M + K.matrix
        if "lowrank" in K.meta:
            cK, U, s, V = K.meta["lowrank"]
            meta["lowrank"] = (c + cK, U, s, V)
    return OperatorWindow(grid, M, "identity-plus-compact", meta)


def id_minus_gauss(grid: GridModel) -> OperatorWindow:
    """Id - phi0 (x) phi0."""
    from .phase_space import special_signal

    g = rank_one(special_signal(grid, "gaussian"))
    return identity_plus(1.0, scaled(g, -1.0))


def scaled(S: OperatorWindow, a: complex) -> OperatorWindow:
    meta = {}
    if "lowrank" in S.meta:
        c, U, s, V = S.meta["lowrank"]
        meta["lowrank"] = (a * c, U, a * np.asarray(s), V)
    return OperatorWindow(S.grid, a * S.matrix, S.structure, meta)


def diagonal_series(grid: GridModel, indices: Sequence[int], weights: Sequence[float] | None = None) -> OperatorWindow:
    """sum_k w_k phi_{n_k} (x) phi_{n_k} over Hermite functions."""
    indices = [int(i) for i in indices]
    w = np.ones(len(indices)) if weights is None else np.asarray(weights, dtype=float)
    H = hermite_basis(grid, max(indices) + 1)[:, indices]
    M = (H * w) @ H.conj().T
    return OperatorWindow(grid, M, "diagonal-series", {"lowrank": (0.0, H, w, H), "indices": indices})


def multiplication(grid: GridModel, phi: Callable[[np.ndarray], np.ndarray] | np.ndarray) -> OperatorWindow:
    """Multiplication by phi(x) on the sample grid."""
    vals = phi(grid.positions()) if callable(phi) else np.asarray(phi)
    return OperatorWindow(grid, np.diag(vals.astype(complex)), "generic")


def custom(grid: GridModel, matrix: np.ndarray, structure: str = "generic") -> OperatorWindow:
    return OperatorWindow(grid, matrix, structure)


def build_window(grid: GridModel, kind: str, **params) -> OperatorWindow:
    """Dispatch by name; see the individual builders for parameters."""
    if kind == "rank_one":
        return rank_one(params["g"], params.get("h"))
    if kind == "wigner":
        return wigner(grid)
    if kind == "tau_wigner":
        return tau_wigner(grid, float(params["tau"]))
    if kind == "born_jordan":
        return born_jordan(grid, params.get("method", "sinc-symbol"), int(params.get("n_tau", 201)))
    if kind == "shift":
        z0 = params["z0"]
        z0 = z0 if isinstance(z0, PhasePoint) else PhasePoint.wrap(grid, *z0)
        return shift(grid, z0)
    if kind == "identity_plus":
        return identity_plus(params.get("c", 1.0), params.get("K"), grid)
    if kind == "identity":
        return identity(grid)
    if kind == "zero":
        return OperatorWindow(grid, np.zeros((grid.n, grid.n)), "generic")
    if kind == "id_minus_gauss":
        return id_minus_gauss(grid)
    if kind == "diagonal_series":
        return diagonal_series(grid, params["indices"], params.get("weights"))
    if kind == "multiplication":
        return multiplication(grid, params["phi"])
    if kind == "custom":
        return custom(grid, params["matrix"], params.get("structure", "generic"))
    raise ValueError(f"unknown window kind {kind!r}")


def weyl_quantize(grid: GridModel, symbol) -> OperatorWindow:
    """Operator whose Weyl symbol is ``symbol`` (PhaseFunction or n x n array)."""
    a = np.asarray(getattr(symbol, "values", symbol), dtype=complex)
    if a.shape != (grid.n, grid.n):
        raise ValueError("symbol must be defined on the full phase grid")
    M = _core.inverse_fourier_wigner(_core.symplectic_fourier(a), origin=grid.continuum)
    return OperatorWindow(grid, M, "weyl-quantized")


# ------------------------------------------------------------------ norms

def schatten_norm(S: OperatorWindow | np.ndarray, q: float = 2) -> float:
    """l^q norm of the singular values; q = inf gives the operator norm."""
    M = getattr(S, "matrix", S)
    if q < 1:
        raise ValueError("Schatten exponent must be >= 1")
    if q == 2:
        return float(np.linalg.norm(M))
    sv = np.linalg.svd(M, compute_uv=False)
    if np.isinf(q):
        return float(sv.max())
    return float(np.sum(sv ** q) ** (1.0 / q))


def _top_hermitian_part(M: np.ndarray, theta: float):
    H = (np.exp(1j * theta) * M + np.exp(-1j * theta) * M.conj().T) / 2
    w, V = np.linalg.eigh(H)
    return w[-1], V[:, -1]


def numerical_radius_vector(S: OperatorWindow | np.ndarray, tol: float = 1e-10, n_coarse: int = 64):
    """Numerical radius and a unit vector g with |<Sg, g>| = w(S).

    Hermitian input reduces to the spectral radius.  Otherwise the top
    eigenvalue of Re(e^{i theta} S) is swept over theta and the best
    candidates are refined by bounded scalar minimisation.
    """
    M = np.asarray(getattr(S, "matrix", S), dtype=complex)
    if np.allclose(M, M.conj().T, atol=1e-14 * max(np.abs(M).max(), 1e-300)):
        w, V = np.linalg.eigh((M + M.conj().T) / 2)
        i = int(np.argmax(np.abs(w)))
        return float(abs(w[i])), V[:, i]
    thetas = 2 * np.pi * np.arange(n_coarse) / n_coarse
    vals = np.array([_top_hermitian_part(M, t)[0] for t in thetas])
    h = 2 * np.pi / n_coarse
    best_val, best_theta = -np.inf, 0.0
    for idx in np.argsort(vals)[-3:]:
        res = optimize.minimize_scalar(lambda t: -_top_hermitian_part(M, t)[0],
                                       bounds=(thetas[idx] - h, thetas[idx] + h), method="bounded",
                                       options={"xatol": tol})
        th, val = (res.x, -res.fun) if -res.fun >= vals[idx] else (thetas[idx], vals[idx])
        if val > best_val:
            best_val, best_theta = val, th
    _, g = _top_hermitian_part(M, best_theta)
    return float(best_val), g


def numerical_radius(S: OperatorWindow | np.ndarray) -> float:
    """w(S) = sup_{|g|=1} |<Sg, g>|."""
    return numerical_radius_vector(S)[0]
