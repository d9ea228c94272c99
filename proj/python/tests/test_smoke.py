import math

import numpy as np
import pytest

import carate


def test_sample_shapes_and_determinism():
    s = carate.sample("dgp3", 50, seed=4)
    assert s["z"].shape == (50, 5)
    assert s["y0"].shape == (50,)
    again = carate.sample("dgp3", 50, seed=4)
    assert np.array_equal(s["y1"], again["y1"])
    assert carate.builtin_dgps() == ["dgp1", "dgp2", "dgp3", "dgp4"]
    assert carate.true_ate("dgp2") == pytest.approx(0.505)


def test_strata_and_spbr_counts():
    labels = carate.strata_labels(np.array([-1.0, -0.1, 0.0, 0.5, 1.0]))
    assert labels.tolist() == [1, 3, 3, 4, 5]
    labels = carate.strata_labels(carate.sample("dgp1", 1000, seed=2)["z"])
    a = carate.assign(labels, "spbr", proportions="varying", seed=3)
    pi = [0.3, 0.4, 0.5, 0.6, 0.7]
    for s in range(1, 6):
        members = labels == s
        assert a[members].sum() == math.floor(pi[s - 1] * members.sum() + 1e-9)


def test_estimate_matches_pipeline():
    s = carate.sample("dgp1", 2000, seed=5)
    labels = carate.strata_labels(s["z"])
    a = carate.assign(labels, seed=6)
    y = np.where(a == 1, s["y1"], s["y0"])
    est = carate.estimate(y, a, s["z"], dgp="dgp1", seed=7)
    assert list(est) == ["aipw_infeasible", "aipw_feasible", "sat", "imp"]
    assert all(math.isfinite(v) and abs(v) < 0.5 for v in est.values())
    no_truth = carate.estimate(y, a, s["z"], stratum=labels, seed=7)
    assert "aipw_infeasible" not in no_truth
    assert no_truth["sat"] == est["sat"]


def test_bounds_ordering():
    b = carate.bounds("dgp3", draws=50000, seed=3)
    assert b["v_star"] < b["v_sat"]
    assert 0.45 < b["v_star"] / b["v_sat"] < 0.65


def test_simulate_is_reproducible():
    config = "[population]\ndgp = dgp1\n[harness]\nn = 300\nreps = 8\nbound_draws = 20000\n"
    csv1, table = carate.simulate(config, seed=11)
    csv2, _ = carate.simulate(config, seed=11, jobs=2)
    assert csv1 == csv2
    assert csv1.splitlines()[0].startswith("dgp,strata,proportions")
    assert len(csv1.splitlines()) == 5
    assert "dgp1" in table


def test_errors_map_to_value_error():
    with pytest.raises(ValueError):
        carate.sample("dgp9", 10)
    with pytest.raises(ValueError, match="<config>:2:"):
        carate.simulate("[harness]\nbogus = 1\n")
    with pytest.raises(ValueError):
        carate.strata_labels(np.array([2.0]))
