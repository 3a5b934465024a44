import csv
import io
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qha_lab.experiments import (
    EXPERIMENTS,
    AffineParameters,
    ExperimentReport,
    affine_autovoice_value,
    affine_bound,
    affine_lp_norm,
    affine_overlap,
    affine_region_measure,
    ambiguity_overlap,
    gaussian_ambiguity_abs,
    msech_quadrature,
    reports_to_csv,
    run_experiment,
)
from qha_lab.phase_space import GridModel, make_region, special_signal
from qha_lab.qha import ambiguity


def test_registry_and_unknown_name():
    assert set(EXPERIMENTS) == {"id-minus-gauss", "tf-shift-window", "perturbation-identity",
                                "diagonal-series-local-compactness", "born-jordan-msech",
                                "wigner-gap-survey", "affine-autovoice"}
    with pytest.raises(ValueError, match="unknown experiment"):
        run_experiment("bogus")


def test_affine_parameter_validation():
    with pytest.raises(ValueError):
        AffineParameters(n_seq=1)
    with pytest.raises(ValueError):
        AffineParameters(n_seq=3, L=3.0, region_log_a=0.5)
    with pytest.raises(ValueError):
        AffineParameters(n_seq=5, region_b=2.0)
    p = AffineParameters(n_seq=7)
    assert p.M == 7.0
    assert AffineParameters(n_seq=7, m_n=3.0).M == 3.0


def test_affine_closed_forms():
    p = AffineParameters(n_seq=10)
    assert affine_autovoice_value(p, 0.0, 0.0) == pytest.approx(1.0, abs=1e-13)
    assert affine_autovoice_value(p, 0.0, 1.0) == pytest.approx(0.9, abs=1e-13)
    assert affine_overlap(p, 20.0) == 0.0
    assert affine_autovoice_value(p, 0.3, 20.0) == 0j
    assert affine_region_measure(p) == pytest.approx(2 * math.sinh(0.5) * 2 * 0.5)
    assert affine_bound(p) == pytest.approx(2 * math.pi * math.exp(-10) + 0.1)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 60), st.floats(-1.0, 1.0), st.floats(-1.0, 1.0))
def test_affine_overlap_identity_and_bound(n, la, b):
    p = AffineParameters(n_seq=n)
    assert affine_overlap(p, la) == pytest.approx(n - abs(la), abs=1e-12)
    assert abs(affine_autovoice_value(p, b, la) - 1) <= affine_bound(p) * (1 + 1e-9)


def test_affine_lp_norm_converges():
    vals = [affine_lp_norm(AffineParameters(n_seq=n, quad_points=(12, 12))) for n in (5, 20, 80)]
    target = affine_region_measure(AffineParameters(n_seq=5)) ** 0.5
    assert abs(vals[0] - target) > abs(vals[1] - target) > abs(vals[2] - target)
    assert vals[2] == pytest.approx(target, rel=0.01)


def test_affine_experiment_passes_and_fails():
    ok = run_experiment("affine-autovoice", {"n_seq": 40, "n_values": [5, 10]})
    assert ok.passed and ok.monotone
    bad = run_experiment("affine-autovoice", {"n_seq": 2, "n_values": [5]})
    assert not bad.passed
    assert [c["pass"] for c in bad.checks] == [True, True, False]


def test_msech_quadrature():
    for lam in (0.0, 0.37, -1.2, 4.0):
        assert msech_quadrature(lam) == pytest.approx(math.pi / math.cosh(math.pi * lam), abs=1e-10)


def test_gaussian_ambiguity_closed_form_matches_grid():
    g = GridModel(256, "continuum")
    for lam in (1.0, 2.0):
        A = np.abs(ambiguity(special_signal(g, "gaussian", lam=lam)).values)
        X, XI = g.phase_coords()
        for idx in [(0, 0), (3, 5), (250, 10)]:
            assert A[idx] == pytest.approx(gaussian_ambiguity_abs(lam, X[idx], XI[idx]), abs=1e-10)


def test_ambiguity_overlap_bounds():
    g = GridModel(128, "continuum")
    R = make_region(g, {"kind": "ball", "radius": 0.5})
    u = special_signal(g, "gaussian").coeffs
    val = ambiguity_overlap(u, R)
    assert 0 < val <= R.measure + 1e-12


def test_report_serialization():
    r = ExperimentReport("x", {"a": np.int64(2)}, [np.float64(0.5)], 1.0, "theory", 0.1, True,
                         checks=[{"parameter": "p", "measured": 0.5, "target": 1.0, "tolerance": 0.1,
                                  "pass": False}], details={"z": 1 + 2j})
    d = json.loads(r.to_json())
    assert d["inputs"] == {"a": 2} and d["details"]["z"] == [1.0, 2.0]
    rows = list(csv.reader(io.StringIO(reports_to_csv([r, r]))))
    assert rows[0] == ["experiment", "parameter", "measured", "target", "tolerance", "pass"]
    assert rows[1] == ["x", "p", "0.500000000000", "1.00000000000", "0.100000000000", "False"]
    assert len(rows) == 3
    bare = ExperimentReport("y", {}, [0.25], None, "oracle", 0.0, True)
    assert list(csv.reader(io.StringIO(bare.to_csv())))[1][:3] == ["y", "tail", "0.250000000000"]


def test_born_jordan_msech_without_concentration():
    r = run_experiment("born-jordan-msech", {"concentration": False, "n_lambda": 11})
    assert r.passed and len(r.measured) == 11


def test_perturbation_identity():
    r = run_experiment("perturbation-identity")
    assert r.passed, r.checks


def test_wigner_gap_survey_small():
    r = run_experiment("wigner-gap-survey", {"n": 64, "numeric_ps": [2.0], "numeric_radii": [0.5]})
    assert r.passed, [c for c in r.checks if not c["pass"]]
    assert len(r.details["numeric"]) == 1
