"""Phase-space representations of operators.

* generalised Husimi transform ``T * S_check (z) = tr(T alpha_z(S))``;
* total correlation ``T~ = T * T_check``;
* concentration of these over Hilbert-Schmidt and density operators;
* the polarised Cohen class ``Q_S T(w, z) = <T, pi(z) S pi(w)^*>_HS`` on
  the double phase space (small grids only).

The continuous change of variables relating the polarised class to the STFT
of Weyl symbols,

    U = [[0, -I, 0, I], [I, 0, -I, 0], [I/2, 0, I/2, 0], [0, I/2, 0, I/2]],

needs half-integer shears that do not exist on Z_n, so it is recorded here
only; the discrete checks are isometry, orthogonality and reconstruction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _core
from .concentration import OptimizerConfig, _ascent, _merge, default_workers, density_point
from .phase_space import GridModel, Region, _same_grid, special_signal
from .qha import PhaseFunction
from .windows import OperatorWindow, rank_one, schatten_norm, weyl_quantize

CHANGE_OF_VARIABLES_U = np.array(
    [[0, -1, 0, 1], [1, 0, -1, 0], [0.5, 0, 0.5, 0], [0, 0.5, 0, 0.5]]
)  # d = 1 blocks of the change of variables (documentation only)

MAX_DOUBLE_N = 16


# ------------------------------------------------------------ transforms

def husimi_transform(T: OperatorWindow, S: OperatorWindow | None = None) -> PhaseFunction:
    """T * S_check (z) = tr(T alpha_z(S)); S defaults to phi_0 (x) phi_0."""
    if S is None:
        S = rank_one(special_signal(T.grid, "gaussian"))
    _same_grid(T.grid, S.grid)
    F = _core.symplectic_fourier(_core.fourier_wigner(T.matrix) * S.fw_reflected)
    return PhaseFunction(T.grid, F)


def total_correlation(T: OperatorWindow) -> PhaseFunction:
    """T~(z) = tr(T alpha_z(T))."""
    return husimi_transform(T, T)


def total_correlation_report(T: OperatorWindow) -> dict:
    """Radar-type facts: sup |T~| <= ||T||^2 and whether T~(0) attains it."""
    tc = total_correlation(T)
    hs2 = schatten_norm(T, 2) ** 2
    M = T.matrix
    # T^* = c T with |c| = 1 ?
    i = np.unravel_index(np.argmax(np.abs(M)), M.shape)
    selfadj = False
    if abs(M[i]) > 0:
        c = np.conj(M[i[::-1]]) / M[i]
        selfadj = bool(abs(abs(c) - 1) < 1e-10 and np.allclose(M.conj().T, c * M, atol=1e-10 * abs(M[i])))
    return {
        "hs_norm_sq": hs2,
        "value_at_0": complex(tc.values[0, 0]),
        "sup_abs": float(np.abs(tc.values).max()),
        "attains_at_0": bool(abs(abs(tc.values[0, 0]) - hs2) <= 1e-10 * max(hs2, 1e-300)),
        "unimodular_selfadjoint": selfadj,
    }


# --------------------------------------------------------- optimisation

@dataclass
class OperatorConcentrationResult:
    kind: str
    value: float
    optimizer: OperatorWindow | None
    target: float | None = None
    attained: bool | None = None
    cross_check: dict = field(default_factory=dict)
    family: dict = field(default_factory=dict)
    trace: list = field(default_factory=list)
    converged: bool = True
    iterations: int = 0
    runs: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "value": self.value,
            "target": self.target,
            "attained": self.attained,
            "cross_check": self.cross_check,
            "family": self.family,
            "converged": self.converged,
            "iterations": self.iterations,
            "runs": self.runs,
            "trace": self.trace,
        }


class _HSObjective:
    """Phi(T) = sum_Omega |tr(T alpha_z(S))|^p / n on ||T||_HS = 1."""

    def __init__(self, S: OperatorWindow, region: Region, p: float):
        self.p = p
        self.mask = region.mask
        self.w = 1.0 / S.n
        self.fwR = S.fw_reflected
        self.fw_adj = np.conj(_core.reflect(_core.fourier_wigner(S.matrix)))  # F_W(S^*)

    def ref(self, phi):
        return 0.5 * self.p * phi

    def phi(self, T):
        H = _core.symplectic_fourier(_core.fourier_wigner(T) * self.fwR)
        return float(np.sum(np.abs(H[self.mask]) ** self.p) * self.w), H

    def grad(self, T, H):
        a = np.abs(H)
        F = np.where(self.mask, 0.5 * self.p * _safe_pow(a, self.p - 2) * H, 0.0)
        return _core.inverse_fourier_wigner(_core.symplectic_fourier(F) * self.fw_adj)


class _SymbolObjective:
    """Same problem through Weyl symbols: H = a conv b with b the symbol of S_check."""

    def __init__(self, S: OperatorWindow, region: Region, p: float):
        n = S.n
        self.p, self.n = p, n
        self.mask = region.mask
        self.w = 1.0 / n
        b = _core.symplectic_fourier(S.fw_reflected)
        self.Fb = np.fft.fft2(b)

    def ref(self, phi):
        return 0.5 * self.p * phi

    def phi(self, x):
        # symbol a = sqrt(n) x so that ||a||_{L^2(dz)} = ||x||
        H = np.fft.ifft2(np.fft.fft2(x) * self.Fb) / math.sqrt(self.n)
        return float(np.sum(np.abs(H[self.mask]) ** self.p) * self.w), H

    def grad(self, x, H):
        a = np.abs(H)
        F = np.where(self.mask, 0.5 * self.p * _safe_pow(a, self.p - 2) * H, 0.0)
        # adjoint of x -> ifft2(fft2(x) Fb)/sqrt(n), times the weight 1/n
        return np.fft.ifft2(np.fft.fft2(F) * np.conj(self.Fb)) / math.sqrt(self.n) * self.w


class _DensityObjective:
    """Phi(A) = sum_Omega |tr(T alpha_z(S))|^p / n with T = A A^* / tr(A A^*)."""

    def __init__(self, S: OperatorWindow, region: Region, p: float):
        self.p = p
        self.mask = region.mask
        self.w = 1.0 / S.n
        self.fwR = S.fw_reflected
        self.fwS = _core.fourier_wigner(S.matrix)

    def ref(self, phi):
        return self.p * phi

    def _T(self, A):
        T = A @ A.conj().T
        return T / np.real(np.trace(T))

    def phi(self, A):
        T = self._T(A)
        H = _core.symplectic_fourier(_core.fourier_wigner(T) * self.fwR)
        return float(np.sum(np.abs(H[self.mask]) ** self.p) * self.w), (T, H)

    def grad(self, A, aux):
        T, H = aux
        a = np.abs(H)
        F1 = np.where(self.mask, 0.5 * self.p * _safe_pow(a, self.p - 2) * np.conj(H), 0.0)
        E = _core.inverse_fourier_wigner(_core.symplectic_fourier(F1) * self.fwS)
        He = E + E.conj().T  # 2 Re-part: dPhi = 2 Re tr(dT E) = tr(dT He)
        tau = float(np.real(np.vdot(A, A)))
        return (He @ A - np.real(np.trace(He @ T)) * A) / tau


def _raw_symbol(M: np.ndarray) -> np.ndarray:
    """Weyl symbol in the index convention used by the objectives (no origin shift)."""
    return _core.symplectic_fourier(_core.fourier_wigner(M))


def _safe_pow(a, e):
    if e >= 0:
        return a ** e
    with np.errstate(divide="ignore"):
        return np.where(a > 1e-12, a ** e, 0.0)


def _run_starts(obj, starts, cfg):
    def run(item):
        label, x0 = item
        x, val, trace, conv, it = _ascent(obj, np.asarray(x0, dtype=complex), cfg)
        return {"label": label, "c": x, "value": val, "trace": trace, "converged": conv, "iterations": it}

    workers = cfg.workers or default_workers()
    if workers > 1 and len(starts) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as ex:
            runs = list(ex.map(run, starts))
    else:
        runs = [run(s) for s in starts]
    return _merge(runs), runs


def _matrix_starts(S: OperatorWindow, region: Region, cfg: OptimizerConfig, kind: str):
    n = S.n
    rng = np.random.default_rng(cfg.seed)
    out = []
    for i in range(cfg.n_random):
        out.append((f"random-{i}", rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))))
    zw = density_point(region)
    base = _core.conjugate_shift(S.matrix.conj().T, zw.m, zw.k)
    if kind == "density":
        # square root of a positive start: top eigenvectors of the localisation operator
        from .concentration import localization_operator

        H, _ = localization_operator(region, S)
        w, V = np.linalg.eigh((H.matrix + H.matrix.conj().T) / 2)
        out.append(("eigen-mix", V[:, ::-1] * np.exp(-np.arange(n) / 2.0)))
        out.append(("shifted-adjoint", _psd_root(base @ base.conj().T)))
    else:
        out.append(("shifted-adjoint", base))
    return out


def _psd_root(M):
    w, V = np.linalg.eigh((M + M.conj().T) / 2)
    return V * np.sqrt(np.clip(w, 0, None))


def _lp_field(H: np.ndarray, mask: np.ndarray, p: float, w: float) -> float:
    a = np.abs(H[mask])
    if math.isinf(p):
        return float(a.max())
    return float((np.sum(a ** p) * w) ** (1.0 / p))


def husimi_concentration(T: OperatorWindow, S: OperatorWindow, region: Region, p: float) -> float:
    """||T * S_check||_{L^p(Omega)} / ||T||_HS."""
    H = husimi_transform(T, S).values
    return _lp_field(H, region.mask, p, region.grid.phase_weight) / schatten_norm(T, 2)


def _broad_symbol_family(grid: GridModel, region: Region, p: float, sigmas=None):
    half = grid.side() / 2
    smax = half / math.sqrt(math.log(1e13) / math.pi)
    sigmas = np.geomspace(0.5, smax, 8) if sigmas is None else np.asarray(sigmas, dtype=float)
    X, XI = grid.phase_coords()
    vals, ops = [], []
    for s in sigmas:
        a = math.sqrt(2) / s * np.exp(-np.pi * (X ** 2 + XI ** 2) / s ** 2)
        T = weyl_quantize(grid, a)
        tc = total_correlation(T).values
        vals.append(_lp_field(tc, region.mask, p, grid.phase_weight) / schatten_norm(T, 2) ** 2)
        ops.append(T)
    return sigmas, vals, ops


def optimize_operator_concentration(S: OperatorWindow | None, region: Region, p: float,
                                    kind: str = "hilbert-schmidt",
                                    budget: OptimizerConfig | dict | None = None,
                                    family: dict | None = None) -> OperatorConcentrationResult:
    """Operator-level concentration over Hilbert-Schmidt or density operators.

    kind ``hilbert-schmidt``: maximise ||T * S_check||_{L^p(Omega)}/||T||_HS;
    for p = inf the value is ||S||_HS attained by alpha_w(S^*).
    kind ``total-correlation``: broad Gaussian-symbol family approaching
    |Omega|^{1/p}; the supremum is flagged as not attained.
    kind ``density``: maximise over T = A A^*/tr(A A^*); compared with the
    signal-level value.
    """
    cfg = budget if isinstance(budget, OptimizerConfig) else OptimizerConfig.from_dict(budget)
    p = float(p)
    grid = region.grid
    if kind == "total-correlation":
        sig, vals, ops = _broad_symbol_family(grid, region, p, (family or {}).get("sigmas"))
        target = region.measure ** (1 / p)
        tail = float(np.mean(vals[-3:]))
        rising = bool(np.all(np.diff(vals) > 0))
        return OperatorConcentrationResult(
            kind, tail, ops[-1], target=target, attained=False if rising and max(vals) < target else None,
            family={"sigma": [float(s) for s in sig], "values": [float(v) for v in vals], "tail": tail},
        )
    if S is None:
        raise ValueError(f"window S is required for {kind}")
    _same_grid(S.grid, grid)
    if S.is_zero():
        raise ValueError("window is zero")
    if kind == "hilbert-schmidt":
        hs = schatten_norm(S, 2)
        if math.isinf(p):
            zw = density_point(region)
            T = OperatorWindow(grid, _core.conjugate_shift(S.matrix.conj().T, zw.m, zw.k))
            val = husimi_concentration(T, S, region, p)
            return OperatorConcentrationResult(kind, val, T, target=hs, attained=True,
                                               cross_check={"hs_norm": hs, "density_point": (zw.m, zw.k)})
        obj = _HSObjective(S, region, p)
        best, runs = _run_starts(obj, _matrix_starts(S, region, cfg, kind), cfg)
        T = OperatorWindow(grid, best["c"])
        # symbol route: same problem in Weyl-symbol coordinates
        sobj = _SymbolObjective(S, region, p)
        a_opt = _raw_symbol(T.matrix) / math.sqrt(grid.n)
        direct = sobj.phi(a_opt)[0] ** (1 / p)
        rng = np.random.default_rng(cfg.seed + 1)
        sstarts = [("random", rng.standard_normal((grid.n, grid.n)) + 1j * rng.standard_normal((grid.n, grid.n)))]
        sstarts.append(("shifted-adjoint", _raw_symbol(_matrix_starts(S, region, cfg, kind)[-1][1])))
        sbest, _ = _run_starts(sobj, sstarts, cfg)
        return OperatorConcentrationResult(
            kind, best["value"], T, attained=True,
            cross_check={"symbol_of_optimizer": direct, "symbol_route_value": sbest["value"],
                         "upper_bound": region.measure ** (1 / p) * hs},
            trace=best["trace"], converged=best["converged"], iterations=best["iterations"],
            runs=[{"start": r["label"], "value": r["value"], "iterations": r["iterations"]} for r in runs],
        )
    if kind == "density":
        if math.isinf(p):
            raise ValueError("density route needs finite p")
        obj = _DensityObjective(S, region, p)
        best, runs = _run_starts(obj, _matrix_starts(S, region, cfg, kind), cfg)
        A = best["c"]
        T = A @ A.conj().T
        T = T / np.real(np.trace(T))
        sv = np.linalg.svd(T, compute_uv=False)
        return OperatorConcentrationResult(
            kind, best["value"], OperatorWindow(grid, (T + T.conj().T) / 2),
            cross_check={"singular_values": [float(x) for x in sv[:4]], "second_singular_value": float(sv[1])},
            trace=best["trace"], converged=best["converged"], iterations=best["iterations"],
            runs=[{"start": r["label"], "value": r["value"], "iterations": r["iterations"]} for r in runs],
        )
    raise ValueError(f"unknown operator class {kind!r}")


# ---------------------------------------------------------- double phase

@dataclass(frozen=True, eq=False)
class DoublePhaseFunction:
    """Field on (Z_n x Z_n) x (Z_n x Z_n), indexed [m_w, k_w, m_z, k_z]."""

    grid: GridModel
    values: np.ndarray = field(repr=False)

    @property
    def weight(self) -> float:
        return self.grid.phase_weight ** 2

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2) * self.weight))

    def inner(self, other: "DoublePhaseFunction") -> complex:
        return complex(np.vdot(other.values, self.values) * self.weight)

    def lp_norm(self, p: float, mask: np.ndarray | None = None) -> float:
        a = np.abs(self.values if mask is None else self.values[mask])
        if math.isinf(p):
            return float(a.max())
        return float((np.sum(a ** p) * self.weight) ** (1 / p))

    def summary(self) -> dict:
        a = np.abs(self.values)
        i = np.unravel_index(np.argmax(a), a.shape)
        return {"n": self.grid.n, "l2_norm": self.norm(), "max_abs": float(a.max()),
                "argmax": [int(x) for x in i]}

    def to_dict(self) -> dict:
        v = self.values.ravel()
        return {"n": self.grid.n, "mode": self.grid.mode, "summary": self.summary(),
                "values": [[float(x.real), float(x.imag)] for x in v]}


def polarized_cohen(T: OperatorWindow, S: OperatorWindow, allow_large: bool = False) -> DoublePhaseFunction:
    """Q_S T(w, z) = <T, pi(z) S pi(w)^*>_HS = tr(T pi(w) S^* pi(z)^*)."""
    _same_grid(T.grid, S.grid)
    n = T.n
    if n > MAX_DOUBLE_N and not allow_large:
        raise ValueError(f"polarized Cohen class is limited to n <= {MAX_DOUBLE_N}")
    chi = _core.halfphase(n)
    Sa = S.matrix.conj().T
    out = np.empty((n, n, n, n), dtype=complex)
    for mw in range(n):
        for kw in range(n):
            Pw = _core.tf_matrix(n, mw, kw)
            Y = T.matrix @ Pw @ Sa
            # tr(Y pi(z)^*) = fft over j of Y[j, j - m]
            out[mw, kw] = _core.fourier_wigner(Y) * chi
    return DoublePhaseFunction(T.grid, out)


def polarized_adjoint(F: DoublePhaseFunction, S: OperatorWindow) -> OperatorWindow:
    """Q_S^* F = sum_{w,z} n^{-2} F(w, z) pi(z) S pi(w)^*."""
    n = S.n
    out = np.zeros((n, n), dtype=complex)
    for mw in range(n):
        for kw in range(n):
            Pw = _core.tf_matrix(n, mw, kw)
            # sum_z F(w,z) pi(z) = n * inverse_fw of F / chi ... via rho = chi pi
            Z = _core.inverse_fourier_wigner(F.values[mw, kw] / _core.halfphase(n)) * n
            out += Z @ S.matrix @ Pw.conj().T
    return OperatorWindow(S.grid, out / n ** 2)
