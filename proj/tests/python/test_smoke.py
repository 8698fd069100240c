import math

import pytest

import dbnapprox as dba


def test_upsilon_known_values():
    assert dba.upsilon(1.0) == pytest.approx(1.0, abs=1e-8)
    assert dba.upsilon(2.0) == pytest.approx(1.0, abs=1e-8)
    assert dba.upsilon(4.0) == pytest.approx(3.0 ** 0.25, abs=1e-6)


def test_parent_norms():
    # Standard gaussian in d dimensions: (2 pi)^(-d/2 (1 - 1/q)) q^(-d/(2q)).
    for d in (1, 2):
        for q in (1.0, 2.0, 4.0):
            expected = (2.0 * math.pi) ** (-0.5 * d * (1.0 - 1.0 / q)) * q ** (-d / (2.0 * q))
            assert dba.parent_norm(f"gaussian {d}", q) == pytest.approx(expected, rel=1e-12)
    assert dba.parent_norm("truncated_exponential 1 1 1", 1.0) == pytest.approx(1.0, rel=1e-12)


def test_synthesize_rbm_matches_requested_masses():
    weights = [0.5, 0.3, 0.2]
    rep = dba.synthesize_rbm(weights, 1e-4)
    assert rep["deviation"] <= 1e-4
    for got, want in zip(rep["unit_probs"], weights):
        assert got == pytest.approx(want, abs=1e-4)
    again = dba.rbm_unit_marginals(rep["rbm"])
    assert again["unit_probs"] == pytest.approx(rep["unit_probs"], abs=0.0)


def test_pipeline_and_network_roundtrip():
    res = dba.approximate_lq(
        "standard_gaussian 1", "gaussian 1", q=2.0, m=16, epsilon=0.4,
        seed=7, lo=[-9.0], hi=[9.0], points=256, greedy_iterations=8,
    )
    assert res["triangle_holds"]
    assert res["measured_error"] <= res["paper_bound"]

    text = res["network"]
    assert dba.network_roundtrip(text) == text

    info = dba.network_info(text)
    assert info["m"] == 16
    assert info["dim"] == 1
    assert 0.0 <= info["deficiency"] < 1e-3

    # the network tracks the sigma-smoothed target, N(0, 1 + sigma^2) here
    smoothed_peak = 1.0 / math.sqrt(2.0 * math.pi * (1.0 + res["sigma"] ** 2))
    mid = dba.network_eval(text, [[0.0]])[0]
    assert mid == pytest.approx(smoothed_peak, rel=0.2)

    l2 = dba.measure(text, "standard_gaussian 1", "gaussian 1", "l2",
                     [-9.0], [9.0], points=256)
    assert l2["value"] == pytest.approx(res["measured_error"], rel=1e-9)


def test_network_sampling_is_deterministic():
    res = dba.approximate_lq(
        "standard_gaussian 1", "gaussian 1", q=2.0, m=4, epsilon=0.9,
        seed=3, lo=[-9.0], hi=[9.0], points=128, greedy_iterations=0,
    )
    a = dba.network_sample(res["network"], seed=11, count=64)
    b = dba.network_sample(res["network"], seed=11, count=64)
    assert a == b
    xs = [p[0] for p in a]
    assert -6.0 < sum(xs) / len(xs) < 6.0


def test_counterexample_rows():
    rows = dba.counterexample([1, 4, 16])
    assert [r["m"] for r in rows] == [1, 4, 16]
    for row in rows:
        assert row["integral"] == pytest.approx(1.0, abs=1e-8)
        assert row["sup_gap"] >= 0.4
    l2 = [r["l2"] for r in rows]
    assert l2 == sorted(l2, reverse=True)


def test_run_config_writes_csv(tmp_path):
    out = tmp_path / "norms.csv"
    cfg = "\n".join([
        "experiment = norms",
        "parent = gaussian 1",
        "q_values = 1 2",
        "seed = 1",
        f"output = {out}",
    ])
    res = dba.run_config(cfg)
    assert res["exit_code"] == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "# dbnapprox-csv v1"
    assert len(lines) == 2 + 4  # schema + header + (norm, upsilon) rows per q
