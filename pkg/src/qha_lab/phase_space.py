"""Finite phase-space model: grids, signals, time-frequency shifts, regions.

Phase space is Z_n x Z_n.  A phase point ``(m, k)`` is the shift
``pi(m, k) f[j] = exp(2 pi i k j / n) f[(j - m) mod n]``.  In the
continuum-emulation mode samples sit at ``x_j = (j - n/2) / sqrt(n)`` and the
phase point ``(m, k)`` stands for ``z = (m~, k~) / sqrt(n)`` with ``m~, k~``
the centred representatives.  Region geometry always uses these coordinates,
so one grid point carries measure ``1/n`` in both modes.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

from . import _core

_MODE_ALIASES = {
    "exact": "exact",
    "exact-cyclic": "exact",
    "continuum": "continuum",
    "continuum-emulation": "continuum",
}


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class GridModel:
    """Discrete phase space of an n-point signal space.

    Parameters
    ----------
    n : int
        Signal dimension, even and at least 4.
    mode : str
        ``"exact"`` (unit spacing) or ``"continuum"`` (spacing 1/sqrt(n),
        samples centred at zero).
    """

    n: int
    mode: str = "exact"

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 4 or self.n % 2:
            raise ValueError(f"n must be an even integer >= 4, got {self.n}")
        object.__setattr__(self, "n", int(self.n))
        if self.mode not in _MODE_ALIASES:
            raise ValueError(f"unknown grid mode {self.mode!r}")
        object.__setattr__(self, "mode", _MODE_ALIASES[self.mode])

    @property
    def continuum(self) -> bool:
        return self.mode == "continuum"

    @property
    def delta(self) -> float:
        return 1.0 / np.sqrt(self.n) if self.continuum else 1.0

    @property
    def phase_weight(self) -> float:
        return 1.0 / self.n

    def positions(self) -> np.ndarray:
        """Sample positions x_j (continuum mode) or indices (exact mode)."""
        j = np.arange(self.n)
        if self.continuum:
            return (j - self.n / 2) * self.delta
        return j.astype(float)

    def phase_coords(self) -> tuple[np.ndarray, np.ndarray]:
        """Continuum coordinates (x, xi) of every phase point, shape (n, n)."""
        t = _core.centered(self.n) / np.sqrt(self.n)
        return np.meshgrid(t, t, indexing="ij")

    def side(self) -> float:
        """Side length of the phase-space torus in continuum coordinates."""
        return float(np.sqrt(self.n))


@dataclass(frozen=True)
class PhasePoint:
    m: int
    k: int

    def __post_init__(self):
        if self.m < 0 or self.k < 0:
            raise ValueError("phase point indices must be non-negative")

    @classmethod
    def wrap(cls, grid: GridModel, m: int, k: int) -> "PhasePoint":
        return cls(int(m) % grid.n, int(k) % grid.n)

    @classmethod
    def from_coords(cls, grid: GridModel, x: float, xi: float) -> "PhasePoint":
        """Nearest grid point to continuum coordinates (x, xi)."""
        s = np.sqrt(grid.n)
        return cls.wrap(grid, int(round(x * s)), int(round(xi * s)))

    def coords(self, grid: GridModel) -> tuple[float, float]:
        c = _core.centered(grid.n)
        s = np.sqrt(grid.n)
        return float(c[self.m % grid.n] / s), float(c[self.k % grid.n] / s)

    def check(self, grid: GridModel):
        if self.m >= grid.n or self.k >= grid.n:
            raise ValueError(f"grid mismatch: phase point {self} outside Z_{grid.n}")


@dataclass(frozen=True, eq=False)
class Signal:
    """Sampled signal; the norm is ``sum |data|^2 * delta``."""

    grid: GridModel
    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        d = np.asarray(self.data, dtype=complex)
        if d.shape != (self.grid.n,):
            raise ValueError(f"signal length {d.shape} does not match n={self.grid.n}")
        object.__setattr__(self, "data", _frozen(d))

    @classmethod
    def from_coeffs(cls, grid: GridModel, c: np.ndarray) -> "Signal":
        return cls(grid, np.asarray(c) / np.sqrt(grid.delta))

    @property
    def coeffs(self) -> np.ndarray:
        """Coefficient vector in the unitary picture (data * sqrt(delta))."""
        return self.data * np.sqrt(self.grid.delta)

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def inner(self, other: "Signal") -> complex:
        """<self, other>, linear in the first slot."""
        _same_grid(self.grid, other.grid)
        return complex(np.vdot(other.coeffs, self.coeffs))

    def normalized(self) -> "Signal":
        nrm = self.norm()
        if nrm == 0:
            raise ValueError("cannot normalise the zero signal")
        return Signal(self.grid, self.data / nrm)

    def __add__(self, other: "Signal") -> "Signal":
        _same_grid(self.grid, other.grid)
        return Signal(self.grid, self.data + other.data)

    def __mul__(self, a: complex) -> "Signal":
        return Signal(self.grid, a * self.data)

    __rmul__ = __mul__

    def to_dict(self) -> dict:
        return {
            "n": self.grid.n,
            "mode": self.grid.mode,
            "data": [[float(v.real), float(v.imag)] for v in self.data],
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "Signal":
        grid = GridModel(int(d["n"]), d.get("mode", "exact"))
        arr = np.asarray(d["data"], dtype=float)
        return cls(grid, arr[:, 0] + 1j * arr[:, 1])


def _same_grid(a: GridModel, b: GridModel):
    if a != b:
        raise ValueError(f"grid mismatch: {a} vs {b}")


def tf_shift(f: Signal, z: PhasePoint) -> Signal:
    """pi(z) f."""
    z.check(f.grid)
    return Signal(f.grid, _core.tf_shift_vec(f.data, z.m, z.k))


def parity(f: Signal) -> Signal:
    """P f[j] = f[-j mod n]."""
    return Signal(f.grid, _core.parity_vec(f.data))


@dataclass(frozen=True, eq=False)
class Region:
    grid: GridModel
    mask: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.asarray(self.mask, dtype=bool)
        if m.shape != (self.grid.n, self.grid.n):
            raise ValueError("region mask must be n x n")
        if not m.any():
            raise ValueError("degenerate region: empty mask")
        object.__setattr__(self, "mask", _frozen(m))

    @property
    def count(self) -> int:
        return int(self.mask.sum())

    @property
    def measure(self) -> float:
        return self.count * self.grid.phase_weight

    def points(self) -> np.ndarray:
        """Indices (m, k) of the region, shape (count, 2)."""
        return np.argwhere(self.mask)

    def centroid(self) -> tuple[float, float]:
        X, XI = self.grid.phase_coords()
        return float(X[self.mask].mean()), float(XI[self.mask].mean())

    def radius(self) -> float:
        """Largest distance from the centroid to a point of the region."""
        X, XI = self.grid.phase_coords()
        cx, cxi = self.centroid()
        return float(np.sqrt((X[self.mask] - cx) ** 2 + (XI[self.mask] - cxi) ** 2).max())

    def diameter(self) -> float:
        return 2.0 * max(self.radius(), 1.0 / np.sqrt(self.grid.n))

    def shifted(self, z: PhasePoint) -> "Region":
        """Omega + z on the cyclic grid."""
        return Region(self.grid, np.roll(self.mask, (z.m, z.k), axis=(0, 1)))

    def to_dict(self) -> dict:
        return {"n": self.grid.n, "mode": self.grid.mode, "mask": [bool(b) for b in self.mask.ravel()]}

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "Region":
        n = int(d["n"])
        grid = GridModel(n, d.get("mode", "continuum"))
        return cls(grid, np.asarray(d["mask"], dtype=bool).reshape(n, n))


def _wrapped(d: np.ndarray, side: float) -> np.ndarray:
    return (d + side / 2) % side - side / 2


def _mask_for(grid: GridModel, spec) -> np.ndarray:
    if isinstance(spec, Region):
        _same_grid(spec.grid, grid)
        return spec.mask.copy()
    if isinstance(spec, np.ndarray):
        return np.asarray(spec, dtype=bool)
    kind = spec.get("kind")
    X, XI = grid.phase_coords()
    side = grid.side()
    if kind == "full":
        return np.ones((grid.n, grid.n), dtype=bool)
    if kind == "ball":
        cx, cxi = spec.get("center", (0.0, 0.0))
        R = float(spec["radius"])
        dx, dxi = _wrapped(X - cx, side), _wrapped(XI - cxi, side)
        return dx ** 2 + dxi ** 2 <= R ** 2 * (1 + 1e-12)
    if kind == "rectangle":
        (x0, x1), (k0, k1) = spec["x"], spec["xi"]
        return (X >= x0) & (X <= x1) & (XI >= k0) & (XI <= k1)
    if kind == "mask":
        return np.asarray(spec["mask"], dtype=bool).reshape(grid.n, grid.n)
    if kind == "union":
        out = np.zeros((grid.n, grid.n), dtype=bool)
        for part in spec["parts"]:
            out |= _mask_for(grid, part)
        return out
    if kind == "complement":
        box = _mask_for(grid, spec.get("box", {"kind": "full"}))
        return box & ~_mask_for(grid, spec["of"])
    raise ValueError(f"unknown region kind {kind!r}")


def make_region(grid: GridModel, spec) -> Region:
    """Rasterise a region spec by cell-centre membership.

    ``spec`` is a dict with ``kind`` one of ``full``, ``ball`` (center, radius),
    ``rectangle`` (x=[a,b], xi=[c,d]), ``mask``, ``union`` (parts) or
    ``complement`` (of, box), or an explicit boolean array.
    """
    mask = _mask_for(grid, spec)
    if mask.shape != (grid.n, grid.n):
        raise ValueError("region mask must be n x n")
    if not mask.any():
        raise ValueError("degenerate region: empty mask")
    return Region(grid, mask)


def sampled_gaussian(grid: GridModel, lam: float = 1.0, center=0.0) -> np.ndarray:
    """Samples of (sqrt2/lam)^{1/2} exp(-pi (y - x0)^2 / lam^2) exp(2 pi i xi0 y)."""
    x0, xi0 = (center, 0.0) if np.isscalar(center) else center
    x = grid.positions()
    return (np.sqrt(2) / lam) ** 0.5 * np.exp(-np.pi * (x - x0) ** 2 / lam ** 2) * np.exp(
        2j * np.pi * xi0 * x
    )


def special_signal(grid: GridModel, kind: str, *, lam: float = 1.0, center=0.0, j: int = 0,
                   seed: int | None = None, renormalize: bool = True) -> Signal:
    """Catalogue signals.

    kind : ``gaussian`` (lam, center), ``hermite`` (j), ``random`` (seed) or
    ``delta`` (j).  Gaussians and Hermite functions need continuum mode.
    """
    if kind in ("gaussian", "hermite") and not grid.continuum:
        raise ValueError(f"{kind} signals require continuum emulation")
    if kind == "gaussian":
        if lam <= 0:
            raise ValueError("lam must be positive")
        data = sampled_gaussian(grid, lam, center)
    elif kind == "hermite":
        if j < 0 or j >= grid.n // 4:
            raise ValueError(f"insufficient resolution for hermite({j}) at n={grid.n}")
        data = _core.hermite_functions(grid.positions(), j)[j].astype(complex)
    elif kind == "random":
        rng = np.random.default_rng(seed)
        data = rng.standard_normal(grid.n) + 1j * rng.standard_normal(grid.n)
    elif kind == "delta":
        data = np.zeros(grid.n, dtype=complex)
        data[j % grid.n] = 1.0 / np.sqrt(grid.delta)
    else:
        raise ValueError(f"unknown signal kind {kind!r}")
    s = Signal(grid, data)
    return s.normalized() if renormalize else s


def hermite_basis(grid: GridModel, count: int) -> np.ndarray:
    """First ``count`` Hermite functions as orthonormal coefficient columns."""
    if not grid.continuum:
        raise ValueError("hermite signals require continuum emulation")
    if count > grid.n // 4:
        raise ValueError(f"insufficient resolution for {count} Hermite functions at n={grid.n}")
    H = _core.hermite_functions(grid.positions(), count - 1).T * np.sqrt(grid.delta)
    return H / np.linalg.norm(H, axis=0)

