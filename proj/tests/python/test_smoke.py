import json
import math

import numpy as np
import pytest

import mbaccel


def test_schedule_values():
    assert mbaccel.ag_p(1, 783) == pytest.approx(0.1990014985518477, rel=1e-14)
    assert mbaccel.ag_p_log_ratio(16, 1000) == pytest.approx(math.log(16) / (2 * math.log(999)))
    eta = mbaccel.sgd_eta(H=1.0, b=4, n=100, L_star=0.0, w_star_norm=2.0)
    assert 0 < eta <= 0.5
    g = mbaccel.ag_gamma(H=1.0, b=4, n=100, L_star=0.0, w_star_norm=2.0, p=0.5)
    assert 0 < g <= 0.25


def test_bounds_and_regimes():
    b = mbaccel.evaluate_bounds(H=1.0, b=8, n=1000, L_star=0.0, w_star_norm=1.0)
    assert b["sgd"] > 0 and b["ag"] > 0
    assert mbaccel.max_serial_batch(0.1, 0.01) == pytest.approx((10.0, 100.0))
    r = mbaccel.classify_regime("sgd", 16, 1e6, 0.0, 0.01)
    assert r["regime"] == "1/eps"
    assert any("no non-constant parallel speedup" in n for n in r["notes"])
    report = mbaccel.bounds(H=1.0, b=4, n=100, L_star=0.0, w_star_norm=1.0)
    assert report["bounds"]["sgd"] == pytest.approx(
        mbaccel.evaluate_bounds(H=1.0, b=4, n=100, L_star=0.0, w_star_norm=1.0)["sgd"])


def test_train_separable():
    data, w_star = mbaccel.synthesize(2048, 20, margin=1.5, noise=0.0, seed=3)
    assert len(data) == 2048 and data.dimension == 20
    assert w_star.shape == (20,)
    assert mbaccel.mean_loss(data, w_star) == 0.0
    H = mbaccel.estimate_H(data)
    eta = mbaccel.sgd_eta(H=H, b=1, n=2048, L_star=0.0, w_star_norm=float(np.linalg.norm(w_star)))
    w = mbaccel.run("sgd", data, b=1, n=2048, step=eta, radius=float(np.linalg.norm(w_star)))
    assert mbaccel.mean_loss(data, w) < 0.01
    w1 = mbaccel.run("ag", data, b=16, n=128, step=0.05, p=0.5, workers=1)
    w4 = mbaccel.run("ag", data, b=16, n=128, step=0.05, p=0.5, workers=4)
    assert np.array_equal(w1, w4)


def test_libsvm_round_trip_and_errors():
    data, _ = mbaccel.synthesize(50, 6, seed=9)
    text = data.to_libsvm()
    back = mbaccel.parse_libsvm(text)
    assert back.to_libsvm() == text
    assert np.array_equal(back.to_dense(), data.to_dense())
    with pytest.raises(mbaccel.ParseError) as err:
        mbaccel.parse_libsvm("+1 1:1\n-1 2:x\n")
    assert err.value.line == 2
    with pytest.raises(ValueError):
        mbaccel.run("sgd", data, b=3, n=100, step=0.1)


def test_experiment_csv():
    spec = {"data": {"synthesize": {"m": 1024, "d": 10, "margin": 1.5, "noise": 0.0}},
            "algorithms": ["sgd", "ag"], "batch_sizes": [1, 8], "fixed_m": 256,
            "seeds": [1, 2], "deterministic": True}
    csv = mbaccel.run_experiment("sweep-b", json.dumps(spec))
    lines = csv.strip().splitlines()
    assert lines[0].startswith("algorithm,b,n,p,p_role,seed")
    assert len(lines) == 1 + 2 * 2 * 2
    assert csv == mbaccel.run_experiment("sweep-b", json.dumps(spec))


def test_verify():
    report = mbaccel.verify(trials=2000, seed=5)
    assert report["passed"] is True
