"""Checking fast-rate conditions for statistical learning problems."""

from .conditions import (
    ConditionKind,
    ConditionReport,
    SearchFamily,
    Verdict,
    VFunction,
    check_bernstein,
    check_condition,
    check_jrt2,
    max_eta,
)
from .core import DecisionProblem, FiniteSupport, Loss, Model, PredictorMixture, Sampler
from .learners import aggregating_algorithm, erm, online_to_batch, rate_experiment, substitution
from .problems import RECIPES, build

__all__ = [
    "ConditionKind",
    "ConditionReport",
    "DecisionProblem",
    "FiniteSupport",
    "Loss",
    "Model",
    "PredictorMixture",
    "RECIPES",
    "Sampler",
    "SearchFamily",
    "VFunction",
    "Verdict",
    "aggregating_algorithm",
    "build",
    "check_bernstein",
    "check_condition",
    "check_jrt2",
    "erm",
    "max_eta",
    "online_to_batch",
    "rate_experiment",
    "substitution",
]
