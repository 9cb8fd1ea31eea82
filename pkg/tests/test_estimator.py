"""The fit/predict facade must agree with the underlying model functions."""

from __future__ import annotations

import warnings

import numpy as np
import pytest
from sklearn.base import clone

from scrambench.controls import CONTROL_IDS, MaturityLevel
from scrambench.estimator import DefenseGapRiskModel
from scrambench.forecast import forecast_from_maturity, marginal_control_ranking

from .helpers import (
    K_DEFAULT_REFERENCE,
    REFERENCE_AVG_LOSS,
    REFERENCE_FREQUENCY,
    make_response,
    plain_aggregate,
    uniform_maturity,
)


@pytest.fixture(scope="module")
def fitted(reference_responses):
    return DefenseGapRiskModel().fit(reference_responses)


def test_fit_exposes_calibrated_state(fitted):
    assert fitted.n_ == 83
    assert fitted.k_ == pytest.approx(K_DEFAULT_REFERENCE, abs=1e-12)
    assert fitted.frequency_ == pytest.approx(REFERENCE_FREQUENCY)
    assert fitted.avg_loss_usd_ == REFERENCE_AVG_LOSS
    assert set(fitted.weights_) == set(CONTROL_IDS)
    assert set(fitted.group_averages_) == set(CONTROL_IDS)


def test_predict_matches_forecast_function(fitted):
    profiles = [
        uniform_maturity(MaturityLevel.PARTIALLY_IMPLEMENTED),
        uniform_maturity(MaturityLevel.FULLY_IMPLEMENTED),
        {**uniform_maturity(), "1a": MaturityLevel.NOT_IMPLEMENTED},
    ]
    predicted = fitted.predict(profiles)
    assert predicted.shape == (3,)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # saturated profiles sit past the band
        for value, profile in zip(predicted, profiles):
            expected = forecast_from_maturity(fitted.params_, profile).annual_risk_usd
            assert value == pytest.approx(expected, rel=1e-12)


def test_decision_function_matches_forecast_x(fitted):
    profile = {**uniform_maturity(), "5b": MaturityLevel.FULLY_IMPLEMENTED}
    (x,) = fitted.decision_function([profile])
    assert x == pytest.approx(forecast_from_maturity(fitted.params_, profile).x, abs=1e-15)


def test_profiles_accept_plain_level_integers(fitted):
    as_enum = uniform_maturity(MaturityLevel.LARGELY_IMPLEMENTED)
    as_int = {cid: 2 for cid in CONTROL_IDS}
    assert fitted.predict([as_int])[0] == fitted.predict([as_enum])[0]


def test_rank_improvements_delegates(fitted):
    profile = uniform_maturity(MaturityLevel.PARTIALLY_IMPLEMENTED)
    via_estimator = fitted.rank_improvements(profile)
    direct = marginal_control_ranking(fitted.params_, profile)
    assert [r.control_id for r in via_estimator] == [r.control_id for r in direct]
    assert via_estimator[0].control_id == "5b"


def test_fit_from_combined_aggregate(reference_responses, fitted):
    aggregate = plain_aggregate(reference_responses)
    from_aggregate = DefenseGapRiskModel().fit(aggregate)
    assert from_aggregate.k_ == fitted.k_
    assert from_aggregate.weights_ == fitted.weights_
    profile = [uniform_maturity()]
    assert from_aggregate.predict(profile)[0] == fitted.predict(profile)[0]


def test_hyperparameters_flow_through(reference_responses):
    model = DefenseGapRiskModel(exponent=4.0, w_loss=0.9, years=5)
    model.fit(reference_responses)
    assert model.k_ == 4.0
    assert model.params_.w_loss == 0.9
    assert model.params_.years == 5
    # years stretches the window, scaling frequency down accordingly.
    assert model.frequency_ == pytest.approx(4 / (83 * 5))


def test_sklearn_param_protocol(reference_responses):
    model = DefenseGapRiskModel(band=0.25)
    params = model.get_params()
    assert params == {"years": 3, "w_loss": 0.85, "band": 0.25, "headroom": 1.5, "exponent": None}
    copy = clone(model)
    assert copy.get_params() == params
    assert not hasattr(copy, "params_")
    copy.set_params(exponent=2.0).fit(reference_responses)
    assert copy.k_ == 2.0


def test_unfitted_model_refuses_to_predict():
    model = DefenseGapRiskModel()
    with pytest.raises(RuntimeError, match="not fitted"):
        model.predict([uniform_maturity()])


def test_incomplete_profile_is_rejected(fitted):
    profile = dict(uniform_maturity())
    del profile["7a"]
    with pytest.raises(ValueError, match="7a"):
        fitted.predict([profile])


def test_fit_rejects_empty_and_lossless_cohorts():
    with pytest.raises(ValueError):
        DefenseGapRiskModel().fit([])
    lossless = [make_response(f"m{i}") for i in range(5)]
    with pytest.raises(ValueError):
        DefenseGapRiskModel().fit(lossless)


def test_predict_is_vectorized(fitted):
    rng = np.random.default_rng(3)
    profiles = []
    for _ in range(50):
        levels = rng.integers(0, 4, size=22)
        profiles.append({cid: int(lvl) for cid, lvl in zip(CONTROL_IDS, levels)})
    values = fitted.predict(profiles)
    assert values.shape == (50,)
    assert (values > 0).all()
