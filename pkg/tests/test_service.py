"""HTTP endpoint checks via the in-process test client."""

import json

import pytest
from fastapi.testclient import TestClient

from logspec import __version__
from logspec.coeffs import OperatorParams, alpha_coefficients
from logspec.service import app

client = TestClient(app)


@pytest.fixture(autouse=True)
def isolated_cache(monkeypatch, tmp_path):
    monkeypatch.setenv("LOGSPEC_CACHE", str(tmp_path / "cache"))


def post(path, payload):
    return client.post(path, json=payload)


def test_healthz():
    resp = client.get("/healthz")
    assert resp.status_code == 200
    assert resp.json() == {"status": "ok", "version": __version__}


def test_coeffs_matches_library():
    resp = post("/coeffs", {"operator": {"N": 1, "m": 2}})
    assert resp.status_code == 200
    body = resp.json()
    expected = alpha_coefficients(OperatorParams(N=1, m=2)).values
    assert body["alphas"] == pytest.approx(expected, rel=1e-15)
    assert len(body["kappa1_taylor"]) == 7
    assert body["structural"]["bm"] == pytest.approx(5.0)


def test_coeffs_taylor_order_extends_to_order_m():
    resp = post("/coeffs", {"operator": {"N": 1, "m": 8}, "taylor_order": 2})
    assert resp.status_code == 200
    assert len(resp.json()["kappa1_taylor"]) == 9


def test_coeffs_validation_is_422():
    resp = post("/coeffs", {"operator": {"N": 5, "m": 1}})
    assert resp.status_code == 422


def test_spectrum_round_trip_and_cache_flag():
    payload = {
        "operator": {"N": 1, "m": 2},
        "domain": {"kind": "interval", "a": 0.0, "b": 1.0},
        "h": 1.0 / 32,
        "k": 5,
    }
    first = post("/spectrum", payload)
    assert first.status_code == 200
    body = first.json()
    assert len(body["eigenvalues"]) == 5
    assert body["cache_hit"] is False
    assert body["domain"]["descriptor"] == "interval(0,1)"
    second = post("/spectrum", payload)
    assert second.json()["cache_hit"] is True
    assert second.json()["eigenvalues"] == body["eigenvalues"]


def test_spectrum_domain_validation():
    resp = post(
        "/spectrum",
        {
            "operator": {"N": 2, "m": 1},
            "domain": {"kind": "disk", "radius": 1.0},
            "h": 0.25,
            "k": 2,
        },
    )
    assert resp.status_code == 422
    assert "center" in resp.json()["detail"]


def test_eval_op_rows_and_route_agreement():
    resp = post(
        "/eval-op",
        {
            "operator": {"N": 1, "m": 1},
            "points": [[0.0], [0.25]],
        },
    )
    assert resp.status_code == 200
    rows = resp.json()["rows"]
    assert len(rows) == 2
    for row in rows:
        assert row["abs_diff"] < 1e-6
    # frozen elsewhere: the order-1 Gaussian value at the origin
    assert rows[0]["kernel_value"] == pytest.approx(-1.2703628454614826, rel=1e-9)


def test_eval_op_single_route():
    resp = post(
        "/eval-op",
        {
            "operator": {"N": 1, "m": 1},
            "points": [[0.1]],
            "route": "fourier",
        },
    )
    row = resp.json()["rows"][0]
    assert row["kernel_value"] is None
    assert row["abs_diff"] is None
    assert row["fourier_value"] is not None


def test_eval_op_dimension_mismatch():
    resp = post(
        "/eval-op",
        {"operator": {"N": 2, "m": 1}, "points": [[0.1]]},
    )
    assert resp.status_code == 422
    assert "coordinates" in resp.json()["detail"]


def test_bounds_over_spectrum_payload():
    spectrum = post(
        "/spectrum",
        {
            "operator": {"N": 1, "m": 2},
            "domain": {"kind": "interval", "a": 0.0, "b": 1.0},
            "h": 1.0 / 32,
            "k": 6,
        },
    ).json()
    resp = post(
        "/bounds",
        {"suites": ["berezin", "eig-lower"], "spectrum": spectrum},
    )
    assert resp.status_code == 200
    body = resp.json()
    assert body["all_pass"] is True
    certs = body["certificates"]
    assert len(certs) == 56
    assert {c["suite"] for c in certs} == {"berezin", "eig-lower"}
    assert all(c["verdict"] in ("pass", "not-applicable") for c in certs)


def test_bounds_requires_spectrum_or_flag():
    resp = post("/bounds", {"suites": ["berezin"]})
    assert resp.status_code == 422
    assert "spectrum" in resp.json()["detail"]


def test_bounds_rejects_malformed_spectrum():
    resp = post("/bounds", {"suites": ["berezin"], "spectrum": {"bogus": 1}})
    assert resp.status_code == 422
    assert "invalid" in resp.json()["detail"]


def test_bounds_formulas_only():
    resp = post(
        "/bounds",
        {
            "suites": ["alternating", "root-lower", "ball"],
            "formulas_only": True,
            "operator": {"N": 2, "m": 3},
            "r0": 0.5,
        },
    )
    assert resp.status_code == 200
    body = resp.json()
    assert body["all_pass"] is True
    assert any(c["name"] == "ball-lower" for c in body["certificates"])


def test_bounds_formulas_only_needs_operator():
    resp = post("/bounds", {"suites": ["alternating"], "formulas_only": True})
    assert resp.status_code == 422


def test_report_endpoint_runs_experiment(tmp_path):
    config = {
        "operator": {"N": 1, "m": 2},
        "domain": {"kind": "interval", "a": 0.0, "b": 1.0},
        "ladder": [1.0 / 16, 1.0 / 32],
        "k": 6,
        "bound_suites": ["counting"],
        "output_dir": str(tmp_path / "out"),
        "cache_dir": str(tmp_path / "cache"),
    }
    resp = post("/report", {"config": config})
    assert resp.status_code == 200
    body = resp.json()
    assert body["all_pass"] is True
    assert body["schema_version"] == 1
    assert (tmp_path / "out" / "weyl_ratios.csv").exists()


def test_report_rejects_unknown_keys(tmp_path):
    config = {
        "operator": {"N": 1, "m": 2},
        "domain": {"kind": "interval", "a": 0.0, "b": 1.0},
        "ladder": [1.0 / 16],
        "k": 2,
        "outputdir": str(tmp_path),
    }
    resp = post("/report", {"config": config})
    assert resp.status_code == 422
    detail = resp.json()["detail"]
    assert detail["keys"] == ["outputdir"]


def test_demo_composition_endpoint():
    resp = post(
        "/demo-composition",
        {"domain": {"kind": "interval", "a": 0.0, "b": 1.0}, "h": 1.0 / 32, "k": 4},
    )
    assert resp.status_code == 200
    rows = resp.json()["rows"]
    assert [r["k"] for r in rows] == [1, 2, 3, 4]
    for row in rows:
        assert row["difference"] == pytest.approx(
            row["lambda1"] ** 2 - row["lambda2"], abs=1e-12
        )


def test_request_schema_enforced_by_pydantic():
    resp = post("/spectrum", {"operator": {"N": 1, "m": 1}})
    assert resp.status_code == 422
