import warnings

import numpy as np
import pytest

from jointinv.data import DataError, Scaler, SectionGrid
from jointinv.evaluation import ConstantTargetError, Validation, evaluate, heldout_r2, predict_section, r2
from jointinv.model import build_network, forward
from jointinv.trainer import TrainConfig, train_single

from oracles import r2_reference


def test_r2_examples():
    y = np.array([1.0, 2.0, 3.0])
    assert r2(y, y) == 1.0
    assert r2(y, np.full(3, 2.0)) == 0.0
    assert r2(y, [1.0, 2.0, 2.0]) == 0.5
    # SS_tot = 0.5, SS_res = 4 + 1 = 5
    assert r2([0.0, 1.0], [2.0, 2.0]) == -9.0


def test_r2_errors():
    with pytest.raises(ConstantTargetError):
        r2([1.0, 1.0], [1.0, 2.0])
    with pytest.raises(DataError):
        r2([1.0, 2.0], [1.0])
    with pytest.raises(DataError):
        r2([1.0], [1.0])


def test_r2_matches_reference(rng):
    y, yh = rng.normal(size=30), rng.normal(size=30)
    assert r2(y, yh) == pytest.approx(r2_reference(y, yh), abs=1e-12)


def test_r2_affine_invariance(rng):
    y = rng.normal(size=50)
    yh = y + 0.3 * rng.normal(size=50)
    for a, b in ((2.0, 1.0), (-3.5, 7.0), (1e-3, -2.0)):
        assert abs(r2(a * y + b, a * yh + b) - r2(y, yh)) < 1e-9


def test_evaluate_average_and_picks(rng):
    truth = SectionGrid(rng.normal(size=(20, 6)))
    pred = SectionGrid(truth.values + 0.2 * rng.normal(size=(20, 6)))
    rep = evaluate(pred, truth, trace_picks=[1, 4])
    assert abs(rep.average - np.mean(rep.per_trace)) < 1e-12
    assert rep.picks == [1, 4] and len(rep.overlays) == 2
    np.testing.assert_array_equal(rep.overlays[1][0], truth.values[:, 4])
    assert evaluate(truth, truth).average == 1.0
    with pytest.raises(DataError):
        evaluate(SectionGrid(np.ones((3, 3))), truth)


def test_evaluate_skips_constant_traces(rng):
    v = rng.normal(size=(10, 4))
    v[:, 2] = 5.0
    with pytest.warns(UserWarning):
        rep = evaluate(SectionGrid(v + 0.1), SectionGrid(v))
    assert rep.skipped == [2] and np.isnan(rep.per_trace[2])
    assert np.isfinite(rep.average)


def test_evaluate_exclude(rng):
    truth = SectionGrid(rng.normal(size=(10, 5)))
    pred = SectionGrid(truth.values + rng.normal(size=(10, 5)))
    rep = evaluate(pred, truth, exclude=[0, 3])
    assert rep.average == pytest.approx(np.mean(rep.per_trace[[1, 2, 4]]), abs=1e-15)


def test_predict_section_shape_and_determinism(tiny_cfg, rng):
    net = build_network(tiny_cfg, 0)
    seis = SectionGrid(rng.normal(size=(12, 70)), dz=3.0)
    sc = (Scaler(0.1, 2.0), Scaler(5000.0, 300.0))
    a = predict_section(net, seis, sc)
    b = predict_section(net, seis, sc, chunk=7)
    assert a.values.shape == (12, 70) and a.dz == 3.0
    assert np.array_equal(a.values, b.values)
    with pytest.raises(DataError):
        predict_section(net, seis, sc, m=5)


def test_predict_section_matches_single_patch(tiny_cfg, rng):
    from jointinv.data import extract_patch
    net = build_network(tiny_cfg, 3)
    seis = SectionGrid(rng.normal(size=(12, 9)))
    sc = (Scaler(0.0, 1.5), Scaler(100.0, 10.0))
    pred = predict_section(net, seis, sc)
    j = 0
    y, _ = forward(net, sc[0].transform(extract_patch(seis, j, 3)))
    np.testing.assert_allclose(pred.values[:, j], sc[1].inverse(y.data), rtol=0, atol=1e-10)


def test_overfit_well_is_recovered(tiny_cfg, tiny_scenario):
    v1, _, d1, _ = tiny_scenario
    from jointinv.data import Dataset
    one = Dataset(d1.X[:1], d1.Y[:1], d1.well_indices[:1], d1.scaler_x, d1.scaler_y)
    net, _ = train_single(build_network(tiny_cfg, 0), one, TrainConfig(epochs=800, lr=1e-2, weight_decay=0))
    pred = predict_section(net, v1.seismic, (d1.scaler_x, d1.scaler_y))
    w = d1.well_indices[0]
    assert r2(v1.impedance.values[:, w], pred.values[:, w]) > 0.99


def test_heldout_excludes_wells(tiny_cfg, tiny_scenario):
    v1, _, d1, _ = tiny_scenario
    val = Validation(v1.seismic, v1.impedance, (d1.scaler_x, d1.scaler_y), d1.well_indices)
    assert not set(val.heldout()) & set(d1.well_indices)
    net = build_network(tiny_cfg, 0)
    pred = predict_section(net, v1.seismic, val.scalers)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        expect = np.mean([r2(v1.impedance.values[:, j], pred.values[:, j]) for j in val.heldout()])
    assert heldout_r2(net, val) == pytest.approx(expect, abs=1e-12)


def test_report_csv(tmp_path, rng):
    truth = SectionGrid(rng.normal(size=(10, 3)))
    rep = evaluate(truth, truth)
    rep.to_csv(tmp_path / "r.csv")
    lines = (tmp_path / "r.csv").read_text().splitlines()
    assert lines[0] == "trace,r2" and len(lines) == 4
    assert rep.summary()["n_scored"] == 3
