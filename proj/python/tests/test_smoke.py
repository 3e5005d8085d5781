import math

import numpy as np
import pytest

import eqp


def test_diagonal_distance():
    d, m_ab, m_ba = eqp.dist(np.diag([0.7, 0.3]).astype(complex), np.diag([0.5, 0.5]).astype(complex))
    assert d == pytest.approx(0.4, abs=1e-12)
    assert m_ab == pytest.approx(0.6, abs=1e-12)
    assert m_ba == pytest.approx(5 / 7, abs=1e-12)


def test_depolarizing_contraction_matches_closed_form():
    phi = eqp.parse_map("depolarizing(0.5)")
    s = 0.5
    assert eqp.contraction_coeff(phi) == pytest.approx(2 * s / (1 + s * s), abs=1e-6)


def test_perron_matches_spectral_radius():
    phi = eqp.parse_map("kraus_scaled(0.7, amplitude_damping(0.4))")
    lam, r = eqp.perron(phi)
    assert lam == pytest.approx(eqp.spectral_radius(phi), rel=1e-8)
    assert np.trace(r).real == pytest.approx(1.0)
    image = phi.apply(r)
    assert np.allclose(image, lam * r, atol=1e-10)


def test_superop_is_column_major():
    phi = eqp.parse_map("amplitude_damping(0.3)")
    x = np.array([[0.6, 0.2 - 0.1j], [0.2 + 0.1j, 0.4]])
    via_superop = (phi.superop() @ x.reshape(-1, order="F")).reshape(2, 2, order="F")
    assert np.allclose(via_superop, phi.apply(x))


def test_ks_accepts_normal_sample():
    rng = np.random.default_rng(3)
    stat, p = eqp.ks_normality(rng.normal(0.0, 2.0, 500).tolist(), 2.0)
    assert 0.0 <= stat <= 1.0
    assert p > 0.001


def test_bad_driver_kind_names_pointer():
    with pytest.raises(eqp.ConfigError, match="/driver/kind"):
        eqp.normalize_config({"experiment": "simulate", "driver": {"kind": "bogus"}})


def test_config_round_trip_is_stable():
    cfg = eqp.normalize_config({"experiment": "lln", "seeds": [1, 2]})
    assert eqp.normalize_config(cfg) == cfg


def test_metric_selftest_run(tmp_path):
    report = eqp.run_experiment({"experiment": "metric-selftest"}, tmp_path)
    assert all(v["pass"] for v in report["verdicts"])
    assert [m["file"] for m in report["manifest"]] == ["metric_selftest.csv"]
    assert (tmp_path / "report.txt").read_text().startswith("eqp report: metric-selftest")
    assert math.isfinite(report["wall_clock_seconds"])
