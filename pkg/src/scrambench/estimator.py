"""Estimator-style facade over the benchmark and gap model.

For callers who live in the fit/predict world, this wraps the pipeline's
modeling slice behind the familiar conventions: constructor keywords are
hyperparameters, ``fit`` consumes a plaintext response collection (or an
already combined aggregate), fitted state lands in trailing-underscore
attributes, and ``predict`` maps maturity profiles to annual risk in USD.

The secure-aggregation transport deliberately stays outside this class;
fitting from raw responses is a plaintext convenience for analysis and
testing.  Production deployments fit from a combined AggregateReport.
"""

from __future__ import annotations

from typing import Dict, List, Mapping, Optional, Sequence, Union

import numpy as np
from sklearn.base import BaseEstimator

from .benchmark import allocate_losses, compute_benchmarks
from .controls import CONTROL_IDS, MaturityLevel, ParticipantResponse
from .forecast import forecast, marginal_control_ranking
from .gap_model import ControlWeights, ModelParams, build_model_params, net_weighted_deviation
from .secure_agg import AggregateReport, encode_response

MaturityProfile = Mapping[str, Union[MaturityLevel, int]]


class DefenseGapRiskModel(BaseEstimator):
    """Annual cyber-risk forecaster calibrated on a cohort of responses.

    Parameters mirror the pipeline configuration: observation window in
    years, the loss-group weight share, the anchor band and headroom for the
    curve fit, and an optional fixed exponent that bypasses the fit.
    """

    def __init__(
        self,
        years: int = 3,
        w_loss: float = 0.85,
        band: float = 0.30,
        headroom: float = 1.5,
        exponent: Optional[float] = None,
    ):
        self.years = years
        self.w_loss = w_loss
        self.band = band
        self.headroom = headroom
        self.exponent = exponent

    # -- fitting -------------------------------------------------------------

    def fit(self, X: Union[Sequence[ParticipantResponse], AggregateReport], y=None) -> "DefenseGapRiskModel":
        """Calibrate on a response collection or a combined aggregate."""
        if isinstance(X, AggregateReport):
            aggregate = X
        else:
            aggregate = self._plaintext_aggregate(list(X))
        bench = compute_benchmarks(aggregate, years=self.years)
        params = build_model_params(
            bench,
            w_loss=self.w_loss,
            band=self.band,
            headroom=self.headroom,
            exponent=self.exponent,
        )
        self.params_ = params
        self.k_ = params.k
        self.frequency_ = params.frequency
        self.avg_loss_usd_ = params.avg_loss_usd
        self.weights_ = dict(params.weights)
        self.group_averages_ = dict(params.group_averages)
        self.n_ = params.n
        return self

    @staticmethod
    def _plaintext_aggregate(responses: List[ParticipantResponse]) -> AggregateReport:
        slots: Optional[List[int]] = None
        for resp in responses:
            vec = encode_response(resp, allocate_losses(resp))
            if slots is None:
                slots = list(vec.slots)
            else:
                for i, v in enumerate(vec.slots):
                    slots[i] += v
        if slots is None:
            raise ValueError("fit needs at least one response")
        return AggregateReport(computation_id="estimator", cohort="all", n=len(responses), slots=tuple(slots))

    # -- prediction ----------------------------------------------------------

    def _check_fitted(self) -> ModelParams:
        if not hasattr(self, "params_"):
            raise RuntimeError("this model is not fitted yet; call fit first")
        return self.params_

    def _to_maturity(self, profile: MaturityProfile) -> Dict[str, MaturityLevel]:
        missing = [cid for cid in CONTROL_IDS if cid not in profile]
        if missing:
            raise ValueError(f"maturity profile missing controls: {', '.join(missing)}")
        return {cid: MaturityLevel(int(profile[cid])) for cid in CONTROL_IDS}

    def decision_function(self, X: Sequence[MaturityProfile]) -> np.ndarray:
        """Net weighted deviation x for each profile."""
        params = self._check_fitted()
        weights = ControlWeights(weights=params.weights, w_loss=params.w_loss, loss_group=params.loss_group)
        return np.array([
            net_weighted_deviation(self._to_maturity(profile), params.group_averages, weights)
            for profile in X
        ])

    def predict(self, X: Sequence[MaturityProfile]) -> np.ndarray:
        """Expected annual loss in USD for each maturity profile."""
        params = self._check_fitted()
        xs = self.decision_function(X)
        return params.frequency * params.avg_loss_usd * np.exp(-params.k * xs)

    def rank_improvements(self, profile: MaturityProfile):
        """Marginal one-step ranking for a single profile."""
        params = self._check_fitted()
        return marginal_control_ranking(params, self._to_maturity(profile))
