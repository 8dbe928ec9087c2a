import json

import numpy as np
import pytest

import proportion_svm as ps


def test_toy_accuracies():
    assert ps.run_toy() == {"alter": 1.0, "conv": 1.0, "invcal": 0.0}


def test_toy_dataset_shape():
    x, y, bags, props = ps.toy_dataset()
    assert x.shape == (20, 2)
    assert len(y) == 20
    assert [len(b) for b in bags] == [10, 10]
    assert props == [0.6, 0.4]


@pytest.mark.parametrize("train", [ps.train_alter, ps.train_conv, ps.train_invcal])
def test_train_predict_roundtrip(train):
    x, y, bags, props = ps.toy_dataset()
    model = train(x, bags, props)
    pred = model.predict(x)
    assert set(pred) <= {-1, 1}
    back = ps.Model.from_json(model.to_json())
    np.testing.assert_array_equal(back.decision_function(x), model.decision_function(x))


def test_optimize_bag_prefers_proportion():
    labels, obj = ps.optimize_bag([2.0, 1.0, -1.0, -2.0], 0.5, 100.0)
    assert labels == [1, 1, -1, -1]
    assert obj == pytest.approx(0.0)


def test_bag_error():
    assert ps.bag_error([1, -1, 1, 1], [[0, 1], [2, 3]], [0.5, 0.0]) == pytest.approx(1.0)


def test_bad_input_raises():
    with pytest.raises(ValueError):
        ps.train_alter(np.zeros((2, 1)), [[0, 1]], [0.5], C=-1.0)
    with pytest.raises(ValueError):
        ps.run_benchmark("bogus = 1\n")


def test_benchmark_is_deterministic():
    cfg = "dataset = toy\nmethods = invcal\nbag_sizes = 2\nfolds = 2\ntrials = 1\nseed = 3\n"
    a = ps.run_benchmark(cfg)
    assert a == ps.run_benchmark(cfg)
    assert json.loads(a)["aggregates"][0]["method"] == "invcal"
