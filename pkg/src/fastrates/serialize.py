"""JSON round-tripping of decision problems."""

from __future__ import annotations

import json
from typing import Any

import numpy as np

from .core import DecisionProblem, FiniteSupport, Model, Sampler, make_sampler
from .losses import make_loss


def _plain(x):
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_plain(v) for v in x]
    if isinstance(x, np.generic):
        return x.item()
    return x


def distribution_to_dict(P) -> dict:
    if isinstance(P, FiniteSupport):
        return {"finite": {"outcomes": _plain(P.outcomes), "probs": [float(p) for p in P.probs]}}
    if isinstance(P, Sampler):
        return {"sampler": {"name": P.name, "params": _plain(P.params)}}
    raise TypeError(f"cannot serialise {type(P).__name__}")


def distribution_from_dict(d: dict):
    if set(d) == {"finite"}:
        f = d["finite"]
        return FiniteSupport(tuple(f["outcomes"]), np.asarray(f["probs"], dtype=float))
    if set(d) == {"sampler"}:
        s = d["sampler"]
        return make_sampler(s["name"], s.get("params", {}))
    raise ValueError(f"distribution entry must have exactly one of 'finite' or 'sampler': {d}")


def _model_from_list(items: list) -> Model:
    if all(isinstance(v, (int, float)) for v in items):
        return Model.scalar(items)
    if all(isinstance(v, list) and all(isinstance(x, (int, float)) for x in v) for v in items):
        return Model.vectors(items)
    return Model(tuple(items))


def problem_to_dict(problem: DecisionProblem) -> dict:
    ds: Any = problem.decision_set
    if isinstance(ds, Model):
        ds = {"predictors": _plain(ds.predictors)}
    return {
        "name": problem.name,
        "loss": {"name": problem.loss.name, "params": _plain(problem.loss.params)},
        "P": [distribution_to_dict(P) for P in problem.p_family],
        "F": _plain(problem.model.predictors),
        "F_D": ds,
    }


def problem_from_dict(d: dict) -> DecisionProblem:
    unknown = set(d) - {"name", "loss", "P", "F", "F_D"}
    if unknown:
        raise ValueError(f"unknown problem keys: {sorted(unknown)}")
    loss = make_loss(d["loss"]["name"], d["loss"].get("params", {}))
    family = tuple(distribution_from_dict(p) for p in d["P"])
    model = _model_from_list(d["F"])
    ds = d.get("F_D", "model")
    if isinstance(ds, dict):
        ds = _model_from_list(ds["predictors"])
    return DecisionProblem(loss, family, model, ds, d.get("name", ""))


def dumps(problem: DecisionProblem) -> str:
    return json.dumps(problem_to_dict(problem), indent=2, sort_keys=True)


def loads(text: str) -> DecisionProblem:
    return problem_from_dict(json.loads(text))
