"""Scripted reproductions: nonattainment examples, positive mechanisms,
Born-Jordan and Wigner gap checks, and the affine wavelet autovoice.

Each experiment returns an :class:`ExperimentReport` with the measured
sequence, the target and a pass flag against the stated tolerance.
"""
from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import asdict, dataclass, field, replace
from typing import Callable

import numpy as np
from scipy import integrate
from numpy.polynomial.legendre import leggauss

from . import _core
from .concentration import (
    ConcentrationProblem,
    EscapeFamily,
    OptimizerConfig,
    escape_traces,
    localization_operator,
    optimize_concentration,
    strict_gap_check,
)
from .gap_criteria import gap_table, wigner_ball_verdict
from .phase_space import GridModel, PhasePoint, Signal, make_region, special_signal
from .windows import (
    born_jordan,
    diagonal_series,
    id_minus_gauss,
    identity_plus,
    rank_one,
    scaled,
    shift,
    wigner,
)


@dataclass
class ExperimentReport:
    """Outcome of one experiment.

    ``target_source`` says where the target comes from (``closed-form``,
    ``theory`` or ``oracle``); ``monotone`` records whether the distance of
    the measured sequence to the target is nonincreasing after burn-in.
    """

    name: str
    inputs: dict
    measured: list
    target: float | None
    target_source: str
    tolerance: float
    passed: bool
    runtime: float = 0.0
    monotone: bool | None = None
    details: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return _jsonable(asdict(self))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def csv_rows(self) -> list[list]:
        """Rows of (experiment, parameter, measured, target, tolerance, pass)."""
        rows = [[self.name, c["parameter"], c["measured"], c["target"], c["tolerance"], c["pass"]]
                for c in self.checks]
        if not rows:
            rows.append([self.name, "tail", self.measured[-1] if self.measured else None, self.target,
                         self.tolerance, self.passed])
        return rows

    def to_csv(self) -> str:
        return reports_to_csv([self])


def reports_to_csv(reports: list[ExperimentReport]) -> str:
    fh = io.StringIO()
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["experiment", "parameter", "measured", "target", "tolerance", "pass"])
    for r in reports:
        for row in r.csv_rows():
            w.writerow([_fmt(x) for x in row])
    return fh.getvalue()


def _fmt(x):
    if isinstance(x, (float, np.floating)):
        return f"{float(x):#.12g}"
    return x


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, complex):
        return [x.real, x.imag]
    return x


def _check(parameter, measured, target, tolerance, ok=None):
    if ok is None:
        ok = abs(measured - target) <= tolerance
    return {"parameter": parameter, "measured": measured, "target": target, "tolerance": tolerance,
            "pass": bool(ok)}


def _monotone_toward(seq, target, burn_in=None) -> bool:
    d = np.abs(np.asarray(seq, dtype=float) - target)
    b = len(d) // 3 if burn_in is None else burn_in
    return bool(np.all(np.diff(d[b:]) <= 1e-12 * max(1.0, abs(target))))


def _cfg(config: dict, key: str, default):
    return config.get(key, default) if config else default


def _budget(config: dict, **defaults) -> OptimizerConfig:
    b = dict(defaults)
    b.update(_cfg(config, "budget", {}) or {})
    return OptimizerConfig.from_dict(b)


# ------------------------------------------------------------ experiments

def _id_minus_gauss(config: dict) -> ExperimentReport:
    n = int(_cfg(config, "n", 1024))
    p = float(_cfg(config, "p", 2.0))
    R = float(_cfg(config, "radius", 1.0))
    grid = GridModel(n, "continuum")
    region = make_region(grid, {"kind": "ball", "radius": R})
    prob = ConcentrationProblem(id_minus_gauss(grid), region, p)
    target = region.measure ** (1 / p)
    budget = _budget(config, max_iter=200, seed=int(_cfg(config, "seed", 0)))
    res = strict_gap_check(prob, budget, [EscapeFamily("shifted", {"members": 8})])
    tr = res.escape["shifted"]
    tail = tr["tail"]
    checks = [
        _check("tail", tail, target, 0.01 * target),
        _check("best-multistart", res.value, target, 1e-9, ok=res.value <= target + 1e-9),
        _check("verdict", res.verdict, "unattained-suspected", 0, ok=res.verdict == "unattained-suspected"),
    ]
    return ExperimentReport(
        "id-minus-gauss", {"n": n, "p": p, "radius": R, "window": "Id - phi0 (x) phi0"},
        tr["values"], target, "theory", 0.01 * target, all(c["pass"] for c in checks),
        monotone=_monotone_toward(tr["values"], target),
        details={"shifts": tr["params"], "optimizer_value": res.value, "verdict": res.verdict,
                 "upper_bounds": res.upper_bounds, "runs": res.runs},
        checks=checks,
    )


def gaussian_ambiguity_abs(lam: float, x: float, xi: float) -> float:
    """|A phi_lam (x, xi)| = exp(-pi (x^2/lam^2 + lam^2 xi^2)/2)."""
    return math.exp(-math.pi * (x * x / lam ** 2 + lam ** 2 * xi * xi) / 2)


def _tf_shift_window(config: dict) -> ExperimentReport:
    n = int(_cfg(config, "n", 1024))
    p = float(_cfg(config, "p", 2.0))
    R = float(_cfg(config, "radius", 1.0))
    m0, k0 = _cfg(config, "z0", (2, 0))
    grid = GridModel(n, "continuum")
    z0 = PhasePoint.wrap(grid, m0, k0)
    x0, xi0 = z0.coords(grid)
    region = make_region(grid, {"kind": "ball", "radius": R})
    S = shift(grid, z0)
    prob = ConcentrationProblem(S, region, p)
    target = region.measure ** (1 / p)
    budget = _budget(config, max_iter=200, seed=int(_cfg(config, "seed", 0)))
    res = strict_gap_check(prob, budget, [EscapeFamily("dilated", {"members": 8})])
    tr = res.escape["dilated"]
    closed = [target * gaussian_ambiguity_abs(l, x0, xi0) for l in tr["params"]]
    # radar strictness: |Af(z0)| < ||f||^2 for random f
    rng = np.random.default_rng(int(_cfg(config, "seed", 0)))
    gaps = []
    for _ in range(int(_cfg(config, "radar_trials", 100))):
        c = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        a = abs(np.vdot(_core.tf_shift_vec(c, z0.m, z0.k), c))
        gaps.append(float(np.vdot(c, c).real - a))
    closed_err = max(abs(a - b) for a, b in zip(closed, tr["values"]))
    checks = [
        _check("tail", tr["tail"], target, 0.01 * target),
        _check("closed-form", closed_err, 0.0, 1e-6),
        _check("radar-strict", min(gaps), 0.0, 0, ok=min(gaps) > 0),
        _check("verdict", res.verdict, "unattained-suspected", 0, ok=res.verdict == "unattained-suspected"),
    ]
    return ExperimentReport(
        "tf-shift-window", {"n": n, "p": p, "radius": R, "z0": [x0, xi0]},
        tr["values"], target, "theory", 0.01 * target, all(c["pass"] for c in checks),
        monotone=_monotone_toward(tr["values"], target, 0),
        details={"lambdas": tr["params"], "closed_form": closed, "radar_min_gap": min(gaps),
                 "optimizer_value": res.value, "verdict": res.verdict},
        checks=checks,
    )


def _perturbation_identity(config: dict) -> ExperimentReport:
    n = int(_cfg(config, "n", 256))
    p = float(_cfg(config, "p", 2.0))
    R = float(_cfg(config, "radius", 0.5))
    c = float(_cfg(config, "c", 1.0))
    ts = list(_cfg(config, "t_values", (0.0, 0.25, 0.5, 0.75, 1.0)))
    grid = GridModel(n, "continuum")
    region = make_region(grid, {"kind": "ball", "radius": R})
    phi0 = special_signal(grid, "gaussian")
    S0 = rank_one(phi0)
    S = identity_plus(c, S0)
    budget = _budget(config, max_iter=500, seed=int(_cfg(config, "seed", 0)))
    res = optimize_concentration(ConcentrationProblem(S, region, p), budget)
    fstar = res.optimizer.coeffs
    w = grid.phase_weight
    mask = region.mask

    def lp(F):
        a = np.abs(F[mask])
        return float((np.sum(a ** p) * w) ** (1 / p))

    Q0 = np.abs(_core.stft(fstar, phi0.coeffs)) ** 2  # Q_{S0} f*
    fam = EscapeFamily("shifted", {"members": 6}).members(region)
    _, far = fam[-1]
    prob = ConcentrationProblem(S, region, p)
    from .concentration import concentration_functional

    sweep, limits = [], []
    for t in ts:
        fj = Signal.from_coeffs(grid, math.sqrt(1 - t) * fstar + math.sqrt(t) * far.coeffs)
        sweep.append(concentration_functional(prob, fj))
        limits.append(lp(c + (1 - t) * Q0))
    err = max(abs(a - b) for a, b in zip(sweep, limits))
    # Q_S f grows with rho for positive S0, so the sweep peaks at rho = 1
    rho_vals = []
    for rho in (0.0, 0.5, 1.0):
        r = optimize_concentration(ConcentrationProblem(identity_plus(c, scaled(S0, rho)), region, p), budget)
        rho_vals.append(r.value)
    # p = 1: ascent vs c |Omega| + lambda_max(H_{Omega,S0})
    H0, spec0 = localization_operator(region, S0)
    p1_target = c * region.measure + float(spec0[0])
    p1 = optimize_concentration(ConcentrationProblem(S, region, 1.0),
                                OptimizerConfig(strategy="ascent", starts=("random", "gaussian"), max_iter=2000))
    checks = [
        _check("limit-formula", err, 0.0, 1e-4),
        _check("rho-max", max(rho_vals), res.value, 1e-4),
        _check("p1-eigen", p1.value, p1_target, 1e-8),
        _check("above-essential", res.value, c * region.measure ** (1 / p), 0,
               ok=res.value > c * region.measure ** (1 / p) * (1 + 1e-3)),
    ]
    return ExperimentReport(
        "perturbation-identity", {"n": n, "p": p, "radius": R, "c": c, "t_values": ts},
        sweep, None, "closed-form", 1e-4, all(x["pass"] for x in checks),
        details={"limits": limits, "optimizer_value": res.value, "rho_values": rho_vals,
                 "p1_value": p1.value, "p1_target": p1_target, "universal": prob.universal_bound},
        checks=checks,
    )


def ambiguity_overlap(u: np.ndarray, region) -> float:
    """C_Omega(u) with C^2 = int_Omega int_Omega |Au(w - z)|^2 dz dw."""
    grid = region.grid
    n = grid.n
    chi = region.mask.astype(float)
    auto = np.real(np.fft.ifft2(np.abs(np.fft.fft2(chi)) ** 2))  # #{z in Omega : z + v in Omega}
    rows = np.flatnonzero(auto.max(axis=1) > 0.5)
    A = np.abs(_core.stft_rows(u, u, rows)) ** 2
    return float(np.sqrt(np.sum(A * auto[rows]) / n ** 2))


def _diagonal_series(config: dict) -> ExperimentReport:
    n = int(_cfg(config, "n", 1024))
    R = float(_cfg(config, "radius", 0.25))
    kmax = int(_cfg(config, "k_max", 6))
    p = float(_cfg(config, "p", 2.0))
    grid = GridModel(n, "continuum")
    region = make_region(grid, {"kind": "ball", "radius": R})
    from .phase_space import hermite_basis

    Hb = hermite_basis(grid, n // 4)
    indices, overlaps, j = [], [], 0
    for k in range(1, kmax + 1):
        while j < n // 4:
            cj = ambiguity_overlap(Hb[:, j], region)
            j += 1
            if cj <= 2.0 ** (-k):
                indices.append(j - 1)
                overlaps.append(cj)
                break
        else:
            break
    S = diagonal_series(grid, indices)
    H, spec = localization_operator(region, S)
    eff = int(math.ceil(4 * region.measure * n))
    tail_max = float(np.abs(spec[eff:]).max()) if eff < spec.size else 0.0
    below = np.flatnonzero(np.abs(spec) < 1e-6)
    prob = ConcentrationProblem(S, region, p)
    tr = escape_traces(prob, [EscapeFamily("shifted")])["shifted"]
    checks = [
        _check("eigen-tail", tail_max, 0.0, 1e-6),
        _check("op-norm", S.op_norm, 1.0, 1e-10),
        _check("escape-tail", tr["tail"], 0.0, 1e-3 * prob.universal_bound),
    ]
    return ExperimentReport(
        "diagonal-series-local-compactness", {"n": n, "radius": R, "p": p, "k_max": kmax},
        [float(x) for x in spec[:32]], 0.0, "oracle", 1e-6, all(c["pass"] for c in checks),
        details={"indices": indices, "overlaps": overlaps, "effective_rank_index": eff,
                 "first_index_below_1e-6": int(below[0]) if below.size else None,
                 "search_exhausted": len(indices) < kmax,
                 "eigen_tail_max": tail_max, "trace_H": float(np.sum(spec)),
                 "escape_values": tr["values"]},
        checks=checks,
    )


def msech_quadrature(lam: float) -> float:
    """int_R e^{-i s lam} / (2 cosh(s/2)) ds by adaptive Fourier quadrature."""
    f = lambda s: 2.0 * math.exp(-s / 2) / (1.0 + math.exp(-s))  # 1/cosh(s/2) without overflow
    # the tail beyond s = 80 is below 4e-18
    if lam == 0:
        val, _ = integrate.quad(f, 0, 80.0, epsabs=1e-14, epsrel=1e-13, limit=200)
    else:
        val, _ = integrate.quad(f, 0, 80.0, weight="cos", wvar=abs(lam), epsabs=1e-14, limit=200)
    return val  # even integrand: 2 * int_0^inf cos(s lam) / (2 cosh(s/2))


def _born_jordan_msech(config: dict) -> ExperimentReport:
    lams = np.linspace(-5, 5, int(_cfg(config, "n_lambda", 41)))
    quad = [msech_quadrature(float(l)) for l in lams]
    exact = [math.pi / math.cosh(math.pi * l) for l in lams]
    err = max(abs(a - b) for a, b in zip(quad, exact))
    checks = [_check("msech", err, 0.0, 1e-8)]
    details = {"lambdas": lams.tolist(), "exact": exact}
    if _cfg(config, "concentration", True):
        n = int(_cfg(config, "n", 256))
        R = float(_cfg(config, "radius", 0.5))
        grid = GridModel(n, "continuum")
        region = make_region(grid, {"kind": "ball", "radius": R})
        prob = ConcentrationProblem(born_jordan(grid), region, 2.0)
        budget = _budget(config, max_iter=300, starts=("gaussian", "eigen"))
        res = strict_gap_check(prob, budget)
        details.update({"bj_value": res.value, "bj_ess_lower": res.ess_lower, "bj_verdict": res.verdict})
        checks.append(_check("bj-gap", res.verdict, "gap", 0, ok=res.verdict in ("certified-gap", "empirical-gap")))
    return ExperimentReport(
        "born-jordan-msech", {"lambda_range": [-5, 5]}, quad, None, "closed-form", 1e-8,
        all(c["pass"] for c in checks), details=details, checks=checks,
    )


def _wigner_gap_survey(config: dict) -> ExperimentReport:
    ds = _cfg(config, "ds", (1, 2, 3))
    ps = _cfg(config, "ps", (2.0, 3.0, 4.0, 6.0))
    Rs = _cfg(config, "radii", (0.25, 0.5, 1.0, 2.0, 4.0))
    rows = gap_table(ds, ps, Rs)
    table = [r.to_dict() for r in rows]
    checks = []
    for r in rows:
        if r.d == 1 and r.p == 2:
            checks.append(_check(f"ball d=1 p=2 R={r.R:g}", r.verdict, "certified", 0, ok=r.certified))
    for d in ds:
        for p in ps:
            small = wigner_ball_verdict(int(d), float(p), 1e-3)
            large = wigner_ball_verdict(int(d), float(p), 1e2)
            checks.append(_check(f"small-R d={d} p={p:g}", small.verdict, "certified", 0, ok=small.certified))
            checks.append(_check(f"large-R d={d} p={p:g}", large.verdict, "certified", 0, ok=large.certified))
    n = int(_cfg(config, "n", 128))
    grid = GridModel(n, "continuum")
    numeric = []
    for p in _cfg(config, "numeric_ps", (2.0, 4.0)):
        for R in _cfg(config, "numeric_radii", (0.5, 1.0)):
            region = make_region(grid, {"kind": "ball", "radius": R})
            res = strict_gap_check(ConcentrationProblem(wigner(grid), region, p),
                                   _budget(config, max_iter=300, starts=("gaussian", "eigen")))
            ball = wigner_ball_verdict(1, p, R)
            numeric.append({"p": p, "R": R, "value": res.value, "verdict": res.verdict,
                            "certified_ess": res.upper_bounds.get("certified_ess"), "ball": ball.verdict})
            if ball.certified:
                checks.append(_check(f"strict-gap p={p:g} R={R:g}", res.verdict, "certified-gap", 0,
                                     ok=res.verdict == "certified-gap"))
    return ExperimentReport(
        "wigner-gap-survey", {"ds": list(ds), "ps": list(ps), "radii": list(Rs), "n": n},
        [r.c_p_pow_p for r in rows], None, "closed-form", 0.0, all(c["pass"] for c in checks),
        details={"table": table, "numeric": numeric}, checks=checks,
    )


# ------------------------------------------------------------------ affine

@dataclass
class AffineParameters:
    """f_n with spectrum h_n = n^{-1/2} w^{-1/2} 1_{I_n}, I_n = [e^{-M-n}, e^{-M}].

    K = {|b| <= B, |log a| <= L}; the region is {|b| <= region_b,
    |log a| <= region_log_a} with left Haar measure a^{-2} db da.
    """

    n_seq: int
    m_n: float | None = None
    B: float = 1.0
    L: float = 1.0
    quad_points: tuple = (24, 24)
    grid_points: tuple = (21, 21)
    region_b: float = 0.5
    region_log_a: float = 0.5
    p: float = 2.0

    def __post_init__(self):
        if self.n_seq < 2:
            raise ValueError("n_seq must be >= 2")
        if self.B <= 0 or self.L <= 0:
            raise ValueError("B and L must be positive")
        if self.L >= self.n_seq:
            raise ValueError("L must be smaller than n_seq: the overlap would be empty")
        if self.region_b > self.B or self.region_log_a > self.L:
            raise ValueError("region must lie inside K")

    @property
    def M(self) -> float:
        """Drift M_n (defaults to n)."""
        return float(self.n_seq) if self.m_n is None else float(self.m_n)

    def log_interval(self) -> tuple[float, float]:
        return -self.M - self.n_seq, -self.M


def affine_overlap(params: AffineParameters, log_a: float) -> float:
    """|J_n cap (J_n - log a)| from the interval endpoints."""
    s0, s1 = params.log_interval()
    lo, hi = max(s0, s0 - log_a), min(s1, s1 - log_a)
    return max(0.0, hi - lo)


def affine_autovoice_value(params: AffineParameters, b: float, log_a: float) -> complex:
    """A f_n(b, a) = (1/n) int over the log overlap of exp(2 pi i b e^s) ds."""
    s0, s1 = params.log_interval()
    lo, hi = max(s0, s0 - log_a), min(s1, s1 - log_a)
    if hi <= lo:
        return 0j
    re, _ = integrate.quad(lambda s: math.cos(2 * math.pi * b * math.exp(s)), lo, hi, epsabs=1e-14, epsrel=1e-13)
    im, _ = integrate.quad(lambda s: math.sin(2 * math.pi * b * math.exp(s)), lo, hi, epsabs=1e-14, epsrel=1e-13)
    return complex(re, im) / params.n_seq


def _affine_sup_deviation(params: AffineParameters) -> float:
    logs = np.linspace(-params.L, params.L, params.grid_points[1])
    bs = np.linspace(-params.B, params.B, params.grid_points[0])
    return max(abs(affine_autovoice_value(params, b, la) - 1) for b in bs for la in logs)


def affine_bound(params: AffineParameters) -> float:
    """sup_K |A f_n - 1| <= 2 pi B e^{-M_n} + L/n."""
    return 2 * math.pi * params.B * math.exp(-params.M) + params.L / params.n_seq


def affine_lp_norm(params: AffineParameters) -> float:
    """||A f_n||_{L^p(Omega)} for left Haar measure a^{-2} db da = e^{-s} db ds."""
    xb, wb = leggauss(params.quad_points[0])
    xs, ws = leggauss(params.quad_points[1])
    acc = 0.0
    for bi, wbi in zip(params.region_b * xb, params.region_b * wb):
        for si, wsi in zip(params.region_log_a * xs, params.region_log_a * ws):
            acc += wbi * wsi * math.exp(-si) * abs(affine_autovoice_value(params, bi, si)) ** params.p
    return acc ** (1 / params.p)


def affine_region_measure(params: AffineParameters) -> float:
    return 2 * params.region_b * 2 * math.sinh(params.region_log_a)


def affine_autovoice(params: AffineParameters, n_values=(5, 10, 20, 40)) -> ExperimentReport:
    """Overlap identity and uniform bound on K along n_values, L^p(Omega)
    concentration at ``params.n_seq``."""
    t0 = time.perf_counter()
    checks, devs = [], []
    for n in n_values:
        pn = replace(params, n_seq=int(n))
        logs = np.linspace(-pn.L, pn.L, pn.grid_points[1])
        overlap_err = max(abs(affine_overlap(pn, la) - (n - abs(la))) for la in logs)
        dev, bound = _affine_sup_deviation(pn), affine_bound(pn)
        devs.append(dev)
        checks.append(_check(f"overlap-identity n={n}", overlap_err, 0.0, 1e-12))
        checks.append(_check(f"uniform-bound n={n}", dev, bound, 0, ok=dev <= bound * (1 + 1e-12)))
    lp = affine_lp_norm(params)
    target = affine_region_measure(params) ** (1 / params.p)
    checks.append(_check(f"lp-norm n={params.n_seq}", lp, target, 0.02 * target))
    return ExperimentReport(
        "affine-autovoice", {**_jsonable(asdict(params)), "n_values": list(n_values)}, devs, target, "theory",
        0.02 * target, all(c["pass"] for c in checks), runtime=time.perf_counter() - t0,
        monotone=_monotone_toward(devs, 0.0, 0),
        details={"lp_norm": lp, "haar_measure": affine_region_measure(params)},
        checks=checks,
    )


def _affine(config: dict) -> ExperimentReport:
    keys = AffineParameters.__dataclass_fields__
    kw = {k: v for k, v in config.items() if k in keys}
    kw.setdefault("n_seq", 40)
    for k in ("quad_points", "grid_points"):
        if k in kw:
            kw[k] = tuple(kw[k])
    return affine_autovoice(AffineParameters(**kw), tuple(config.get("n_values", (5, 10, 20, 40))))


EXPERIMENTS: dict[str, Callable[[dict], ExperimentReport]] = {
    "id-minus-gauss": _id_minus_gauss,
    "tf-shift-window": _tf_shift_window,
    "perturbation-identity": _perturbation_identity,
    "diagonal-series-local-compactness": _diagonal_series,
    "born-jordan-msech": _born_jordan_msech,
    "wigner-gap-survey": _wigner_gap_survey,
    "affine-autovoice": _affine,
}


def run_experiment(name: str, config: dict | None = None) -> ExperimentReport:
    if name not in EXPERIMENTS:
        raise ValueError(f"unknown experiment {name!r}; choose from {sorted(EXPERIMENTS)}")
    t0 = time.perf_counter()
    rep = EXPERIMENTS[name](dict(config or {}))
    rep.runtime = time.perf_counter() - t0
    return rep
