import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracle_helpers import alpha, rand_c
from qha_lab import _core
from qha_lab.concentration import (
    ConcentrationProblem,
    ConcentrationResult,
    EscapeFamily,
    OptimizerConfig,
    _DenseEngine,
    _Objective,
    certified_ess_bound,
    classify,
    concentration_functional,
    default_families,
    density_point,
    escape_traces,
    essential_value_estimate,
    jensen_bound,
    localization_operator,
    make_engine,
    optimize_concentration,
    strict_gap_check,
    upper_bounds,
)
from qha_lab.phase_space import GridModel, PhasePoint, Signal, make_region, special_signal
from qha_lab.windows import OperatorWindow, id_minus_gauss, identity, rank_one, shift, wigner


def _lowrank_window(grid, rng, r=2, c=0.7 - 0.2j):
    n = grid.n
    U, V = rand_c(rng, n, r), rand_c(rng, n, r)
    s = rand_c(rng, r)
    M = c * np.eye(n) + (U * s) @ V.conj().T
    return OperatorWindow(grid, M, "generic", {"lowrank": (c, U, s, V)})


def _brute_Q(S, f):
    n = S.shape[0]
    return np.array([[np.vdot(f, alpha(S, n, m, k) @ f) for k in range(n)] for m in range(n)])


@pytest.fixture
def small():
    g = GridModel(16, "continuum")
    return g, make_region(g, {"kind": "ball", "radius": 1.0}), np.random.default_rng(1)


def test_engines_agree_with_brute_force(small):
    g, R, rng = small
    f = rand_c(rng, 16)
    for S in (_lowrank_window(g, rng), shift(g, PhasePoint(3, 5)), wigner(g)):
        Qb = _brute_Q(S.matrix, f)
        for kind in ("dense", "auto"):
            eng = make_engine(S, kind, R.mask)
            assert np.allclose(eng.cohen(f), Qb[eng.rows])


def test_engine_fields_agree(small):
    g, R, rng = small
    f = rand_c(rng, 16)
    for S in (_lowrank_window(g, rng), shift(g, PhasePoint(3, 5))):
        dense, fast = _DenseEngine(S, R.mask), make_engine(S, "auto", R.mask)
        F1 = rand_c(rng, 16, 16)
        F2 = rand_c(rng, 16, 16)
        F1[~R.mask] = 0
        F2[~R.mask] = 0
        # brute force: (1/n) sum_z F1 alpha_z(S) f + F2 alpha_z(S)^* f
        out = sum((F1[m, k] * alpha(S.matrix, 16, m, k) @ f + F2[m, k] * alpha(S.matrix, 16, m, k).conj().T @ f)
                  for m in range(16) for k in range(16)) / 16
        r = dense.rows
        assert np.allclose(dense.field(F1[r], F2[r], f), out)
        assert np.allclose(fast.field(F1[r], F2[r], f), out)


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_gradient_finite_difference(small, p):
    g, R, rng = small
    S = _lowrank_window(g, rng)
    obj = _Objective(ConcentrationProblem(S, R, p), make_engine(S, mask=R.mask))
    f = rand_c(rng, 16)
    phi, Q = obj.phi(f)
    G = obj.grad(f, Q)
    d = rand_c(rng, 16)
    h = 1e-6
    num = (obj.phi(f + h * d)[0] - obj.phi(f - h * d)[0]) / (2 * h)
    assert num == pytest.approx(2 * np.real(np.vdot(d, G)), rel=1e-6)
    # Euler identity for the degree-2p homogeneous Phi
    assert np.real(np.vdot(f, G)) == pytest.approx(obj.ref(phi), rel=1e-10)


def test_p1_eigen_route_matches_ascent():
    g = GridModel(64, "continuum")
    R = make_region(g, {"kind": "ball", "radius": 1.0})
    S = rank_one(special_signal(g, "gaussian", lam=1.3))
    prob = ConcentrationProblem(S, R, 1.0)
    e = optimize_concentration(prob)
    a = optimize_concentration(prob, {"strategy": "ascent", "starts": ("random",)})
    assert e.strategy == "eigen"
    assert a.value == pytest.approx(e.value, abs=1e-10)
    assert concentration_functional(prob, e.optimizer) == pytest.approx(e.value, abs=1e-12)


def test_pinf_radius_route():
    g = GridModel(32, "continuum")
    R = make_region(g, {"kind": "ball", "radius": 1.0})
    S = shift(g, PhasePoint(2, 1))
    res = optimize_concentration(ConcentrationProblem(S, R, math.inf))
    assert res.strategy == "radius"
    assert res.value == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        optimize_concentration(ConcentrationProblem(S, R, 2.0), {"strategy": "radius"})
    with pytest.raises(ValueError):
        optimize_concentration(ConcentrationProblem(S, R, 2.0), {"strategy": "eigen"})


def test_identity_window_is_flat():
    g = GridModel(32, "continuum")
    R = make_region(g, {"kind": "ball", "radius": 1.0})
    prob = ConcentrationProblem(identity(g), R, 3.0)
    f = special_signal(g, "random", seed=5)
    assert concentration_functional(prob, f) == pytest.approx(R.measure ** (1 / 3), abs=1e-13)


def test_zero_window_and_zero_signal():
    g = GridModel(16, "continuum")
    R = make_region(g, {"kind": "ball", "radius": 1.0})
    Z = OperatorWindow(g, np.zeros((16, 16)))
    res = optimize_concentration(ConcentrationProblem(Z, R, 2.0))
    assert res.value == 0.0 and res.strategy == "zero"
    with pytest.raises(ValueError):
        concentration_functional(ConcentrationProblem(wigner(g), R), Signal(g, np.zeros(16)))


def test_optimizer_config_validation():
    with pytest.raises(ValueError):
        OptimizerConfig.from_dict({"bogus": 1})
    assert OptimizerConfig.from_dict({"starts": ["random"]}).starts == ("random",)
    with pytest.raises(ValueError):
        ConcentrationProblem(wigner(GridModel(16)), make_region(GridModel(16), {"kind": "full"}), 0.5)
    with pytest.raises(ValueError):
        ConcentrationProblem(wigner(GridModel(16)), make_region(GridModel(32), {"kind": "full"}))


def test_deterministic_with_seed():
    g = GridModel(32, "continuum")
    R = make_region(g, {"kind": "ball", "radius": 1.0})
    prob = ConcentrationProblem(wigner(g), R, 2.0)
    a = optimize_concentration(prob, {"seed": 3, "max_iter": 50})
    b = optimize_concentration(prob, {"seed": 3, "max_iter": 50, "workers": 1})
    assert a.value == b.value
    assert np.array_equal(a.optimizer.data, b.optimizer.data)


def test_result_serialization():
    g = GridModel(16, "continuum")
    R = make_region(g, {"kind": "ball", "radius": 1.0})
    res = optimize_concentration(ConcentrationProblem(wigner(g), R, 2.0), {"max_iter": 20})
    d = json.loads(res.to_json("opt.json"))
    assert d["optimizer-file-ref"] == "opt.json"
    assert d["value"] == res.value
    assert isinstance(res, ConcentrationResult)


def test_localization_operator_trace():
    g = GridModel(32, "continuum")
    R = make_region(g, {"kind": "ball", "radius": 1.0})
    S = rank_one(special_signal(g, "gaussian"))
    H, spec = localization_operator(R, S)
    assert np.trace(H.matrix).real == pytest.approx(R.measure)
    assert np.all(np.diff(spec) <= 1e-14)
    _, spec2 = localization_operator(R, shift(g, PhasePoint(1, 0)))
    assert spec2.size == 0


def test_density_point_inside_region():
    g = GridModel(32, "continuum")
    R = make_region(g, {"kind": "ball", "radius": 1.0, "center": (1.0, 0.5)})
    z = density_point(R)
    assert R.mask[z.m, z.k]
    assert z.coords(g) == pytest.approx((1.0, 0.5), abs=0.2)


def test_escape_families_and_errors():
    g = GridModel(256, "continuum")
    R = make_region(g, {"kind": "ball", "radius": 0.5})
    for kind in ("shifted", "dilated", "hermite"):
        mem = EscapeFamily(kind, {"members": 5}).members(R)
        assert len(mem) >= 3
        assert all(abs(s.norm() - 1) < 1e-10 for _, s in mem)
    with pytest.raises(ValueError):
        EscapeFamily("bogus")
    with pytest.raises(ValueError, match="grid too small"):
        EscapeFamily("shifted").members(make_region(GridModel(64, "continuum"), {"kind": "ball", "radius": 1.0}))
    with pytest.raises(ValueError):
        EscapeFamily("shifted").members(make_region(GridModel(64), {"kind": "ball", "radius": 1.0}))


def test_compact_window_escape_decays():
    g = GridModel(256, "continuum")
    R = make_region(g, {"kind": "ball", "radius": 0.5})
    prob = ConcentrationProblem(rank_one(special_signal(g, "gaussian")), R, 2.0)
    tr = escape_traces(prob, [EscapeFamily("shifted")])["shifted"]
    assert tr["values"][0] > 0.1 and tr["tail"] < 1e-10
    assert essential_value_estimate(prob) < 1e-10
    assert [f.kind for f in default_families(prob)] == ["shifted"]
    assert [f.kind for f in default_families(ConcentrationProblem(shift(g, PhasePoint(1, 0)), R))] == ["dilated"]


def test_bounds_and_certification():
    g = GridModel(64, "continuum")
    R = make_region(g, {"kind": "ball", "radius": 1.0})
    prob = ConcentrationProblem(wigner(g), R, 2.0)
    b = upper_bounds(prob)
    assert b["wigner_ess"] == pytest.approx(math.sqrt(0.5) * 2 * 0.5)
    assert certified_ess_bound(prob, b) == (b["wigner_ess"], "wigner_ess")
    rk = ConcentrationProblem(rank_one(special_signal(g, "gaussian")), R, 2.0)
    assert certified_ess_bound(rk) == (0.0, "finite-rank")
    assert jensen_bound(rk) >= optimize_concentration(rk, {"max_iter": 200}).value - 1e-10
    assert jensen_bound(prob) is None


def test_classify_rules():
    rising = {"f": {"values": [0.5, 0.9, 1.0], "tail": 1.0}}
    flat = {"f": {"values": [1.0, 1.0, 1.0], "tail": 1.0}}
    assert classify(1.0, 0.5, 0.8, flat) == "certified-gap"
    assert classify(1.0, 0.5, None, flat) == "empirical-gap"
    assert classify(1.0, 1.0, None, rising) == "unattained-suspected"
    assert classify(1.0, 1.0, None, flat) == "threshold-suspected"


def test_strict_gap_check_wigner_certified():
    g = GridModel(64, "continuum")
    R = make_region(g, {"kind": "ball", "radius": 0.5})
    res = strict_gap_check(ConcentrationProblem(wigner(g), R, 2.0), {"max_iter": 200})
    assert res.verdict == "certified-gap"
    assert "error" in res.escape["shifted"]  # grid too small to emulate escape


def test_strict_gap_check_identity_minus_gauss_small():
    g = GridModel(256, "continuum")
    R = make_region(g, {"kind": "ball", "radius": 0.5})
    res = strict_gap_check(ConcentrationProblem(id_minus_gauss(g), R, 2.0), {"max_iter": 100})
    assert res.verdict == "unattained-suspected"
    assert res.ess_lower == pytest.approx(R.measure ** 0.5, rel=1e-6)


# ------------------------------------------------------------- properties

@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 20), st.floats(1.0, 6.0))
def test_universal_bound(seed, p):
    g = GridModel(16, "continuum")
    R = make_region(g, {"kind": "ball", "radius": 1.0})
    rng = np.random.default_rng(seed)
    S = OperatorWindow(g, rand_c(rng, 16, 16))
    prob = ConcentrationProblem(S, R, p)
    f = Signal(g, rand_c(rng, 16)).normalized()
    assert concentration_functional(prob, f) <= prob.universal_bound * (1 + 1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 20), st.integers(0, 15), st.integers(0, 15))
def test_covariance_of_functional(seed, m, k):
    # J_{Omega + w}(pi(w) f) = J_Omega(f)
    g = GridModel(16, "continuum")
    R = make_region(g, {"kind": "ball", "radius": 1.0})
    rng = np.random.default_rng(seed)
    S = OperatorWindow(g, rand_c(rng, 16, 16))
    f = Signal(g, rand_c(rng, 16))
    w = PhasePoint(m, k)
    fs = Signal(g, _core.tf_shift_vec(f.data, m, k))
    a = concentration_functional(ConcentrationProblem(S, R, 2.0), f)
    b = concentration_functional(ConcentrationProblem(S, R.shifted(w), 2.0), fs)
    assert a == pytest.approx(b, rel=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2 ** 20), st.complex_numbers(min_magnitude=0.1, max_magnitude=10, allow_nan=False,
                                                  allow_infinity=False))
def test_functional_homogeneity(seed, a):
    g = GridModel(16, "continuum")
    R = make_region(g, {"kind": "ball", "radius": 1.0})
    rng = np.random.default_rng(seed)
    prob = ConcentrationProblem(wigner(g), R, 2.5)
    f = Signal(g, rand_c(rng, 16))
    assert concentration_functional(prob, f * a) == pytest.approx(abs(a) ** 2 * concentration_functional(prob, f),
                                                                 rel=1e-10)
