"""Worked example problems with known constants.

Each constructor returns a :class:`DecisionProblem` whose ``facts`` mapping
records the constants the generic checkers should reproduce.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.special import gamma as gamma_fn

from .core import (
    CONVEX_HULL,
    DecisionProblem,
    FiniteSupport,
    Model,
    gaussian,
    gaussian_mixture,
    simplex_grid,
    student_t,
)
from .losses import absolute, brier as brier_loss, gaussian_log_loss, squared, zero_one

ETA_CAP = 1e6


def bernoulli_eta_max(p: float) -> float:
    """Largest eta with ``p exp(-eta) + (1 - p) exp(eta) <= 1`` for the better label."""
    p = max(p, 1 - p)
    if p == 1:
        return ETA_CAP
    return math.log(p / (1 - p))


def bernoulli_01(
    delta: float = 0.25,
    grid: int = 5,
    n_experts: int = 2,
    p: float | Sequence[float] | None = None,
) -> DecisionProblem:
    """Binary labels under 0/1 loss with label noise bounded away from 1/2.

    The family holds ``grid`` values of ``P(Z=1)`` in ``[1/2 + delta, 1]`` and
    their mirror images.  ``p`` replaces the family by explicit values.
    With ``n_experts > 2`` the model holds randomized classifiers predicting 1
    with probabilities ``linspace(0, 1, n_experts)``.
    """
    if not 0 <= delta <= 0.5:
        raise ValueError("delta must lie in [0, 1/2]")
    if p is not None:
        ps = [float(x) for x in np.atleast_1d(p)]
    else:
        if grid < 1:
            raise ValueError("grid must be positive")
        upper = np.linspace(0.5 + delta, 1.0, grid)
        ps = sorted(set(np.round(np.concatenate([1 - upper, upper]), 15).tolist()))
    family = tuple(FiniteSupport.bernoulli(q) for q in ps)
    model = Model.scalar(np.linspace(0.0, 1.0, n_experts))
    eta = min(bernoulli_eta_max(q) for q in ps)
    facts = {
        "eta_max": eta,
        "eta_max_of_p": bernoulli_eta_max,
        "ps": ps,
        "stochastically_mixable": False,
    }
    loss = zero_one() if n_experts == 2 else absolute()
    return DecisionProblem(loss, family, model, "model", "bernoulli01", facts)


def bounded_squared(
    B: float = 1.0,
    z_grid: Sequence[float] | None = None,
    f_grid: Sequence[float] | None = None,
) -> DecisionProblem:
    """Squared loss with outcomes and predictions in ``[-B, B]``.

    The family holds the point masses on ``z_grid``; decisions range over the
    convex hull of ``f_grid``.
    """
    z_grid = np.linspace(-B, B, 9) if z_grid is None else np.asarray(z_grid, dtype=float)
    f_grid = np.linspace(-B, B, 9) if f_grid is None else np.asarray(f_grid, dtype=float)
    if np.abs(z_grid).max() > B + 1e-12 or np.abs(f_grid).max() > B + 1e-12:
        raise ValueError("grids must lie in [-B, B]")
    family = tuple(FiniteSupport.point(float(z)) for z in z_grid)
    facts = {"classical_mixable_eta": 1 / B**2, "exp_concave_eta": 1 / (4 * B**2)}
    return DecisionProblem(squared(B), family, Model.scalar(f_grid), CONVEX_HULL, "sqbounded", facts)


def subgaussian_location(
    sigma2: float = 1.0,
    mean_range: Sequence[float] = (-1.0, 0.0, 1.0),
    f_grid: Sequence[float] | None = None,
    mixture_M: float | None = None,
    point_masses: bool = False,
) -> DecisionProblem:
    """Squared loss under Gaussian location families.

    By default the family is ``N(m, sigma2)`` for ``m`` in ``mean_range``.
    ``mixture_M`` replaces it by the equal mixture of ``N(-M, 1)`` and
    ``N(M, 1)``, whose variance proxy is ``1 + M**2``.  ``point_masses``
    replaces it by point masses at the means.
    """
    means = [float(m) for m in mean_range]
    if mixture_M is not None:
        family = (gaussian_mixture([-mixture_M, mixture_M], var=1.0),)
        sigma2 = 1.0 + mixture_M**2
        means = [0.0]
    elif point_masses:
        family = tuple(FiniteSupport.point(m) for m in means)
    else:
        family = tuple(gaussian(m, sigma2) for m in means)
    grid = np.union1d(np.linspace(min(means) - 1, max(means) + 1, 21), means) if f_grid is None else f_grid
    facts = {"central_eta": math.inf if point_masses else 1 / sigma2, "sigma2": sigma2}
    return DecisionProblem(squared(), family, Model.scalar(grid), "model", "subgauss", facts)


def normal_location_logloss(
    nu_grid: Sequence[float] = (0.0,),
    mu_grid: Sequence[float] | None = None,
) -> DecisionProblem:
    """Log loss of unit-variance Gaussian densities with means ``mu_grid``.

    Data come from ``N(nu, 1)`` for ``nu`` in ``nu_grid``.
    """
    mu = np.linspace(-4.0, 4.0, 1601) if mu_grid is None else np.asarray(mu_grid, dtype=float)
    family = tuple(gaussian(nu, 1.0) for nu in nu_grid)
    facts = {
        "central_eta": 1.0,
        "erm_excess": lambda n: 1.0 / (2.0 * n),
        "bernstein_beta1_fails_beyond": lambda B: math.sqrt(32.0 * B),
    }
    return DecisionProblem(gaussian_log_loss(), family, Model.scalar(mu), CONVEX_HULL, "normloc", facts)


def student5_constants(c1: float = 1.0) -> dict:
    """Tail and moment constants of the Student t law with 5 degrees of freedom.

    For ``|z| >= c1`` the density is at least ``c2 / z**6`` because
    ``1 + z**2/5 <= z**2 (1/5 + 1/c1**2)``; the fourth moment is 25.
    """
    norm = gamma_fn(3.0) / (math.sqrt(5 * math.pi) * gamma_fn(2.5))
    c2 = norm * (0.2 + 1.0 / c1**2) ** -3
    return {"df": 5.0, "c1": c1, "c2": c2, "fourth_moment": 25.0, "density_norm": norm}


def heavy_tail_squared(A: float = 26.0, c1: float = 1.0, c2: float | None = None, f_grid: Sequence[float] | None = None) -> DecisionProblem:
    """Squared loss on ``[-1, 1]`` under a Student t law with 5 degrees of freedom.

    The law has polynomial tails, so no exponential moment of the excess loss
    is finite, yet its fourth moment is below ``A``.
    """
    const = student5_constants(c1)
    if c2 is not None and c2 > const["c2"]:
        raise ValueError(f"the density is only guaranteed above {const['c2']} / z**6")
    if const["fourth_moment"] >= A:
        raise ValueError("the fourth moment must be below A")
    grid = np.linspace(-1.0, 1.0, 21) if f_grid is None else np.asarray(f_grid, dtype=float)
    facts = {
        "central_eta": 0.0,
        "bernstein_coef": 4 * math.sqrt(A) + 1,
        "A": A,
        "c1": c1,
        "c2": const["c2"] if c2 is None else c2,
    }
    return DecisionProblem(squared(), (student_t(5.0),), Model.scalar(grid), "model", "heavytail", facts)


def brier(num_outcomes: int = 2, resolution: int = 10, family: str = "points") -> DecisionProblem:
    """Brier score with forecasts on a grid of the probability simplex.

    ``family="points"`` uses the point masses on the outcomes, so stochastic
    checks coincide with pointwise ones.
    """
    if num_outcomes < 2:
        raise ValueError("need at least two outcomes")
    F = simplex_grid(num_outcomes, resolution)
    if family == "points":
        laws = tuple(FiniteSupport.point(z) for z in range(num_outcomes))
    else:
        laws = tuple(FiniteSupport(tuple(range(num_outcomes)), row) for row in F)
    facts = {"classical_mixable_eta": 1.0}
    return DecisionProblem(brier_loss(num_outcomes), laws, Model.vectors(F), CONVEX_HULL, "brier", facts)


@dataclass(frozen=True)
class ProblemRecipe:
    name: str
    builder: Callable[..., DecisionProblem]
    description: str

    def build(self, **params) -> DecisionProblem:
        return self.builder(**params)


RECIPES = {
    "bernoulli01": ProblemRecipe("bernoulli01", bernoulli_01, "0/1 loss on noisy binary labels"),
    "sqbounded": ProblemRecipe("sqbounded", bounded_squared, "squared loss on a bounded interval"),
    "subgauss": ProblemRecipe("subgauss", subgaussian_location, "squared loss under Gaussian location"),
    "normloc": ProblemRecipe("normloc", normal_location_logloss, "Gaussian log loss, location model"),
    "heavytail": ProblemRecipe("heavytail", heavy_tail_squared, "squared loss under a heavy-tailed law"),
    "brier": ProblemRecipe("brier", brier, "Brier score on simplex forecasts"),
}


def build(name: str, **params) -> DecisionProblem:
    if name not in RECIPES:
        raise KeyError(f"unknown problem {name!r}; choose from {sorted(RECIPES)}")
    return RECIPES[name].build(**params)
