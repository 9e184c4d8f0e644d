import math

import numpy as np
import pytest

import lrdlab


def test_regimes_and_constants():
    assert lrdlab.classify(0.3, 2) == lrdlab.Regime.LRD
    assert lrdlab.classify(0.3, 3) == lrdlab.Regime.SRD
    assert lrdlab.hermite_hurst(0.4, 2) == pytest.approx(0.8)
    assert lrdlab.b_const(1, 0.3) == pytest.approx(0.365704587700903, rel=1e-12)
    with pytest.raises(ValueError):
        lrdlab.CovarianceModel.power_law(0.5)


def test_expansion_roundtrip():
    e = lrdlab.expand(lambda x: lrdlab.hermite_poly(3, x), 8)
    assert e.rank() == 3
    assert e.coefficients[3] == pytest.approx(1.0, abs=1e-8)


def test_sampler_and_batch():
    model = lrdlab.CovarianceModel.power_law(0.2)
    s = lrdlab.CirculantSampler(model, 100)
    assert np.array_equal(s.sample(1), s.sample(1))
    limit = lrdlab.LimitModel(
        [lrdlab.ComponentSpec(lrdlab.HermiteExpansion.hermite(1), "X")], model
    )
    b = lrdlab.run_batch(limit, 128, [0.5, 1.0], 10, 3)
    assert b.shape == (10, 1, 2)
    assert np.array_equal(b, lrdlab.run_batch(limit, 128, [0.5, 1.0], 10, 3, threads=2))


def test_hermite_process_and_chaos():
    spec = lrdlab.HermiteProcessSpec(k=2, h0=0.8, resolution=24)
    paths = lrdlab.simulate(spec, [0.5, 1.0], R=5, seed=2)
    assert paths.shape == (5, 2)
    assert lrdlab.contraction_positivity(1, 2, 0.4, 16) > 0
    f = lrdlab.ChaosKernel(2, [1.0, 0.5], np.array([0.0, 1.0, 1.0, 0.0]), True)
    assert lrdlab.product_formula_check(f, f) < 1e-10
    assert lrdlab.contract(f, f, 2).norm() == pytest.approx(f.norm() ** 2)
    assert math.isfinite(lrdlab.partial_sum_contraction_norm(3, 2, 1, lrdlab.CovarianceModel.power_law(0.3), 32))


def test_run_command(tmp_path):
    config = {
        "model": {"kind": "power_law", "d": 0.3},
        "components": [{"label": "L", "builtin": "H2"}, {"label": "S", "builtin": "H3"}],
    }
    report, failures = lrdlab.run("classify", config, out=str(tmp_path))
    assert failures == []
    assert [c["regime"] for c in report["components"]] == ["LRD", "SRD"]
    assert (tmp_path / "classify.csv").exists()
    with pytest.raises(ValueError):
        lrdlab.run("classify", {"model": {"kind": "power_law", "d": 0.7}, "components": []})
