"""Closed-form strict-gap criteria for the Wigner window 2^d P.

Quantities
----------
``C_p^p = (1/2pi) int_0^{2pi} |cos t|^p dt``,
``A_d(x) = d gamma(d, x) / x^d``, ``F_d(x) = gamma(d, x) / Gamma(d)``,
``m_d = inf_x max(A_d, F_d) = F_d((d!)^{1/d})`` and
``L_{p,d} = 2^d (2p)^{-d/p}`` (the L^p norm of |W phi_0| = 2^d e^{-2 pi |z|^2}).

For a ball B_R in R^{2d} with ``x = 2 pi p R^2`` the captured Gaussian mass is
``int_{B_R} |W phi_0|^p = 2^{dp} |B_R| A_d(x) = 2^{dp} (2p)^{-d} F_d(x)``.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import integrate, optimize, special

VERDICTS = ("cpmd-global", "gaussian-mass", "small-set", "uncertified")


def _check_p(p: float) -> float:
    p = float(p)
    if not p >= 1 or math.isinf(p):
        raise ValueError("p must be finite and >= 1")
    return p


def c_p_pow_p(p: float, method: str = "closed") -> float:
    """C_p^p, either by the Gamma ratio or by adaptive quadrature."""
    p = _check_p(p)
    if method == "closed":
        return math.exp(math.lgamma((p + 1) / 2) - math.lgamma((p + 2) / 2)) / math.sqrt(math.pi)
    if method == "quad":
        # four symmetric quarter periods; cos >= 0 on [0, pi/2]
        val, _ = integrate.quad(lambda t: math.cos(t) ** p, 0.0, math.pi / 2, epsabs=1e-15, epsrel=1e-13)
        return 2.0 * val / math.pi
    raise ValueError(f"unknown method {method!r}")


def c_p(p: float, method: str = "closed") -> float:
    """C_p = ((1/2pi) int |cos|^p)^{1/p}."""
    return c_p_pow_p(p, method) ** (1.0 / float(p))


def gamma_lower(d: float, x: float) -> float:
    """Lower incomplete gamma gamma(d, x) = int_0^x t^{d-1} e^{-t} dt."""
    if x <= 0:
        return 0.0
    return float(special.gammainc(d, x) * special.gamma(d))


def A_d(d: int, x: float) -> float:
    if x <= 0:
        return 1.0
    # d gamma(d,x)/x^d = d! P(d,x) / x^d, computed in logs for large d
    return float(special.gammainc(d, x) * math.exp(math.lgamma(d + 1) - d * math.log(x)))


def F_d(d: int, x: float) -> float:
    if x <= 0:
        return 0.0
    return float(special.gammainc(d, x))


def m_d_crossing(d: int) -> float:
    """m_d from the closed crossing point x* = (d!)^{1/d}."""
    return F_d(d, math.exp(math.lgamma(d + 1) / d))


def m_d_golden(d: int) -> float:
    """m_d by golden-section minimisation of max(A_d, F_d).

    A_d decreases and F_d increases, so the maximum is unimodal.
    """
    xs = math.exp(math.lgamma(d + 1) / d)
    g = lambda x: max(A_d(d, x), F_d(d, x))
    res = optimize.minimize_scalar(g, bracket=(xs / 4, xs * 1.1, xs * 4), method="golden",
                                   options={"xtol": 1e-14})
    return float(res.fun)


def m_d(d: int) -> float:
    return m_d_crossing(d)


def gap_constants(d: int, x: float) -> dict:
    """gamma(d, x), A_d(x), F_d(x) and m_d (both routes; they must agree)."""
    if d < 1:
        raise ValueError("d must be >= 1")
    if x < 0:
        raise ValueError("x must be >= 0")
    mc, mg = m_d_crossing(d), m_d_golden(d)
    if abs(mc - mg) > 1e-8:
        raise ArithmeticError(f"m_d routes disagree: {mc} vs {mg}")
    return {"gamma_lower": gamma_lower(d, x), "A_d": A_d(d, x), "F_d": F_d(d, x), "m_d": mc}


@dataclass(frozen=True)
class GapConstants:
    p: float
    d: int
    c_p: float
    c_p_pow_p: float
    m_d: float
    l_pd: float

    @classmethod
    def compute(cls, p: float, d: int = 1) -> "GapConstants":
        cpp = c_p_pow_p(p)
        return cls(float(p), int(d), cpp ** (1 / p), cpp, m_d(d), lieb_norm(p, d))


def lieb_norm(p: float, d: int = 1) -> float:
    """L_{p,d} = 2^d (2p)^{-d/p}."""
    return 2.0 ** d * (2.0 * p) ** (-d / p)


def ball_measure(d: int, R: float) -> float:
    """Lebesgue measure of the ball of radius R in R^{2d}."""
    return math.pi ** d * R ** (2 * d) / math.factorial(d)


def wigner_ess_bound(p: float, measure: float, d: int = 1) -> float:
    """C_p 2^d min(|Omega|^{1/p}, (2p)^{-d/p}), a certified bound on the essential value."""
    return c_p(p) * 2.0 ** d * min(measure ** (1.0 / p), (2.0 * p) ** (-d / p))


@dataclass
class BallVerdict:
    d: int
    p: float
    R: float
    x: float
    c_p: float
    c_p_pow_p: float
    A_d: float
    F_d: float
    m_d: float
    ball_measure: float
    gaussian_mass: float
    small_set_radius: float
    criteria: dict = field(default_factory=dict)
    verdict: str = "uncertified"

    @property
    def certified(self) -> bool:
        return self.verdict != "uncertified"

    def to_dict(self) -> dict:
        return asdict(self)


def wigner_ball_verdict(d: int, p: float, R: float) -> BallVerdict:
    """Apply the cpmd, Gaussian-mass and small-set criteria in that order."""
    if d < 1 or R <= 0:
        raise ValueError("d and R must be positive")
    p = _check_p(p)
    if p < 2:
        raise ValueError("ball criteria need p >= 2")
    cpp = c_p_pow_p(p)
    cp = cpp ** (1 / p)
    x = 2 * math.pi * p * R * R
    a, f, md = A_d(d, x), F_d(d, x), m_d(d)
    mass = 2.0 ** (d * p) * (2 * p) ** (-d) * f
    # small sets: |W phi_0| >= 2^d a on B(0, r) with C_p < a < 1
    a_lvl = 0.5 * (cp + 1.0)
    r_small = math.sqrt(-math.log(a_lvl) / (2 * math.pi))
    crit = {
        "cpmd-global": cpp < md,
        "gaussian-mass": max(a, f) > cpp,
        "small-set": R <= r_small,
    }
    verdict = next((k for k in VERDICTS[:3] if crit[k]), "uncertified")
    return BallVerdict(d, p, R, x, cp, cpp, a, f, md, ball_measure(d, R), mass, r_small, crit, verdict)


def p_threshold(d: int, tol: float = 1e-6) -> float:
    """Smallest p >= 2 with C_p^p < m_d (bisection; returns 2 if already true)."""
    md = m_d(d)
    g = lambda p: c_p_pow_p(p) - md
    if g(2.0) < 0:
        return 2.0
    lo, hi = 2.0, 4.0
    while g(hi) >= 0:
        lo, hi = hi, 2 * hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if g(mid) < 0:
            hi = mid
        else:
            lo = mid
    return hi


def gap_table(ds, ps, Rs) -> list[BallVerdict]:
    return [wigner_ball_verdict(int(d), float(p), float(R)) for d in ds for p in ps for R in Rs]


def table_to_csv(rows: list[BallVerdict]) -> str:
    """CSV with columns d, p, R, x, A_d, F_d, C_p^p, verdict."""
    fh = io.StringIO()
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["d", "p", "R", "x", "A_d", "F_d", "C_p^p", "verdict"])
    for r in rows:
        w.writerow([r.d, f"{r.p:#.12g}", f"{r.R:#.12g}", f"{r.x:#.12g}", f"{r.A_d:#.12g}",
                    f"{r.F_d:#.12g}", f"{r.c_p_pow_p:#.12g}", r.verdict])
    return fh.getvalue()


def uncertified_range(d: int, p: float, Rs=None) -> np.ndarray:
    """Radii from a sweep where no ball criterion certifies."""
    Rs = np.geomspace(1e-3, 1e2, 2001) if Rs is None else np.asarray(Rs)
    return np.array([R for R in Rs if not wigner_ball_verdict(d, p, R).certified])
