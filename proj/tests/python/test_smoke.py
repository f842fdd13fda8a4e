"""End-to-end smoke tests of the python bindings."""

import math

import numpy as np
import pytest

import woesb

SCHEMA_TEXT = """y response
amount continuous_nonlinear_constrained
hour continuous_cyclic period=24
age continuous_linear
country categorical treatment=swoe
"""


def make_csv(n, seed):
    rng = np.random.default_rng(seed)
    amount = np.exp(rng.normal(5.2, 1.1, n))
    hour = rng.uniform(0, 24, n)
    age = rng.normal(40, 12, n)
    country = rng.integers(0, 8, n)
    eta = (
        -1.2
        + 1.4 * np.exp(-((np.log(amount) - 5.2) ** 2) / 0.6)
        + np.sin(2 * np.pi * (hour - 3) / 24)
        + 0.5 * (country % 3 - 1)
    )
    y = (rng.uniform(0, 1, n) < 1 / (1 + np.exp(-eta))).astype(int)
    lines = ["y,amount,hour,age,country"]
    for i in range(n):
        lines.append(
            f"{y[i]},{amount[i]:.6f},{hour[i]:.6f},{age[i]:.6f},C{country[i]}"
        )
    return "\n".join(lines) + "\n"


@pytest.fixture(scope="module")
def fitted():
    schema = woesb.Schema.parse(SCHEMA_TEXT)
    ds = woesb.parse_csv(make_csv(400, 7), schema)
    model = woesb.fit(
        ds,
        schema,
        grid_cat=[0.005],
        grid_unconstrained=[0.002],
        grid_constrained=[0.002],
    )
    return schema, ds, model


def test_schema_roundtrip():
    schema = woesb.Schema.parse(SCHEMA_TEXT)
    again = woesb.Schema.parse(schema.to_text())
    assert again.to_text() == schema.to_text()


def test_dataset_shape(fitted):
    _, ds, _ = fitted
    assert len(ds) == 400
    assert ds.rejected == 0
    assert ds.columns == ["amount", "hour", "age", "country"]
    assert set(ds.response) == {0, 1}


def test_fit_predict(fitted):
    _, ds, model = fitted
    p = model.predict(ds)
    assert isinstance(p, np.ndarray)
    assert p.shape == (400,)
    assert np.all((p > 0) & (p < 1))
    assert model.design_names[0] == "(Intercept)"
    assert model.train_n == 400
    assert math.isfinite(model.aic)


def test_transform_matches_design(fitted):
    _, ds, model = fitted
    X = model.transform(ds)
    assert X.shape == (400, len(model.design_names))
    assert np.all(X[:, 0] == 1.0)


def test_json_roundtrip_bit_identical(fitted):
    _, ds, model = fitted
    clone = woesb.load_model_json(model.to_json())
    assert clone.to_json() == model.to_json()
    assert np.array_equal(model.predict(ds), clone.predict(ds))


def test_save_load_file(fitted, tmp_path):
    _, ds, model = fitted
    path = tmp_path / "model.json"
    model.save(str(path))
    loaded = woesb.load_model(str(path))
    assert np.array_equal(model.predict(ds), loaded.predict(ds))


def test_coefficients_table(fitted):
    _, _, model = fitted
    rows = model.coefficients()
    assert len(rows) == len(model.design_names)
    assert rows[0]["term"] == "(Intercept)"
    assert all(row["std_error"] > 0 for row in rows)


def test_evaluate_bundle(fitted):
    _, ds, model = fitted
    report = model.evaluate(ds)
    assert report["n"] == 400
    assert 0.5 < report["auc"] <= 1.0
    assert 0.0 <= report["h"] <= 1.0
    assert report["severity_ratio"] == pytest.approx(
        report["pi1"] / report["pi0"]
    )
    fixed = model.evaluate(ds, severity_ratio=1.0)
    assert fixed["severity_ratio"] == 1.0


def test_unseen_policy(fitted):
    schema, _, model = fitted
    probe = woesb.parse_csv(
        "y,amount,hour,age,country\n1,100,12,40,ZZ\n0,200,3,30,C1\n", schema
    )
    p = model.predict(probe)  # default policy falls back to overall log-odds
    assert p.shape == (2,)
    with pytest.raises(Exception, match="unseen"):
        model.predict(probe, unseen="error")


def test_cross_validate_deterministic():
    schema = woesb.Schema.parse(SCHEMA_TEXT)
    ds = woesb.parse_csv(make_csv(300, 11), schema)
    kwargs = dict(
        folds=3,
        seed=5,
        grid_cat=[0.005],
        grid_unconstrained=[0.002],
        grid_constrained=[0.002],
    )
    a = woesb.cross_validate(ds, schema, **kwargs)
    b = woesb.cross_validate(ds, schema, **kwargs)
    assert [r["fold"] for r in a] == [1, 2, 3]
    assert a == b


def test_metric_pins():
    assert woesb.auc([1, 2, 2, 3], [0, 1, 0, 1]) == 0.875
    assert woesb.weighted_brier([0.5] * 4, [0, 0, 1, 1]) == 0.5
    assert woesb.h_measure([1, 2, 3, 4], [0, 0, 1, 1]) == 1.0
    assert woesb.h_measure([2, 2, 2, 2], [0, 0, 1, 1]) == 0.0
    report = woesb.evaluate([0.2, 0.4, 0.7, 0.9], [0, 0, 1, 1])
    assert report["auc"] == 1.0


def test_kmeans_weighted():
    assignment, centers, wcss = woesb.kmeans_weighted(
        [0.0, 0.0, 10.0, 10.0, 10.0], [1.0] * 5, 2
    )
    assert assignment == [0, 0, 1, 1, 1]
    assert centers == [0.0, 10.0]
    assert wcss == 0.0


def test_bad_inputs_raise():
    with pytest.raises(Exception):
        woesb.Schema.parse("no response line\n")
    schema = woesb.Schema.parse(SCHEMA_TEXT)
    ds = woesb.parse_csv(make_csv(60, 3), schema)
    with pytest.raises(Exception, match="ascending"):
        woesb.fit(ds, schema, grid_cat=[0.2, 0.1])
