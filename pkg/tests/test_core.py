import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fastrates import core, losses, problems
from fastrates.core import (
    CONVEX_HULL,
    DecisionProblem,
    FiniteSupport,
    Model,
    PredictorMixture,
    best_predictor,
    excess_loss_moments,
    gaussian,
    mix_loss,
    mix_loss_values,
    risk,
    risk_with_ci,
)
from fastrates.errors import (
    AllInfiniteRisk,
    ConditionalNotInFamily,
    EmbeddingMissing,
    UndefinedExpectation,
)

HALF_LOG_2PI = 0.5 * math.log(2 * math.pi)


def bern(p):
    return FiniteSupport.bernoulli(p)


# ------------------------------------------------------------------ risk


def test_bernoulli_zero_one_risk():
    assert risk(bern(0.75), 1.0, losses.zero_one()) == pytest.approx(0.25, abs=1e-15)


def test_point_mass_risk_is_the_loss():
    loss = losses.squared()
    assert risk(FiniteSupport.point(0.3), -0.2, loss) == loss(-0.2, 0.3)


def test_gaussian_log_loss_risk_closed_form():
    # cross-entropy of N(mu, 1) under N(nu, 1)
    oracle = HALF_LOG_2PI + 0.5 + 0.5
    assert risk(gaussian(0, 1), 1.0, losses.gaussian_log_loss()) == pytest.approx(oracle, abs=1e-12)
    assert oracle == pytest.approx(1.9189, abs=5e-5)


def test_gaussian_log_loss_risk_by_monte_carlo():
    z = np.random.default_rng(1).normal(size=200_000)
    mc = np.mean(HALF_LOG_2PI + 0.5 * (z - 1.0) ** 2)
    assert mc == pytest.approx(1.9189385332, abs=0.01)


def test_risk_with_ci_is_exact_for_quadratic_losses():
    value, ci = risk_with_ci(gaussian(0.5, 2.0), 0.0, losses.squared())
    assert ci == 0.0
    assert value == pytest.approx(0.5 * (2.0 + 0.25))


def test_risk_infinite_on_positive_mass():
    ll = losses.log_loss(2)
    assert risk(bern(0.5), (1.0, 0.0), ll) == math.inf
    assert risk(bern(0.0), (1.0, 0.0), ll) == 0.0


def test_finite_support_validation():
    with pytest.raises(ValueError):
        FiniteSupport((0, 1), np.array([0.5, 0.6]))
    with pytest.raises(ValueError):
        FiniteSupport((0, 1), np.array([-0.1, 1.1]))


# --------------------------------------------------------- best predictor


def test_best_predictor_bernoulli():
    prob = problems.bernoulli_01(p=0.75)
    fid, r = best_predictor(prob.p_family[0], prob.model, prob.loss)
    assert (fid, r) == (1, pytest.approx(0.25))


def test_best_predictor_single_model():
    fid, _ = best_predictor(bern(0.3), Model.scalar([0.4]), losses.absolute())
    assert fid == 0


def test_best_predictor_gaussian_log_loss():
    fid, r = best_predictor(gaussian(0, 1), Model.scalar([-1, 0, 1]), losses.gaussian_log_loss())
    assert fid == 1
    assert r == pytest.approx(HALF_LOG_2PI + 0.5, abs=1e-12)


def test_best_predictor_ties_take_lowest_id():
    prob = problems.bernoulli_01(p=0.5)
    assert best_predictor(prob.p_family[0], prob.model, prob.loss)[0] == 0


def test_all_infinite_risk():
    ll = losses.log_loss(2)
    with pytest.raises(AllInfiniteRisk):
        best_predictor(bern(0.5), Model(((1.0, 0.0), (0.0, 1.0))), ll)


def test_decision_problem_requires_a_best_predictor():
    ll = losses.log_loss(2)
    with pytest.raises(AllInfiniteRisk):
        DecisionProblem(ll, (bern(0.5),), Model(((1.0, 0.0),)), "model")


# --------------------------------------------------------------- mix loss


def test_mix_loss_point_mass_is_the_loss():
    assert mix_loss_values(np.array([0.0, 1.0]), np.array([0.4, 2.0]), 3.0) == pytest.approx(2.0)


def test_mix_loss_with_infinite_loss():
    assert mix_loss_values(np.array([0.5, 0.5]), np.array([0.0, np.inf]), 1.0) == pytest.approx(math.log(2))


def test_mix_loss_two_losses():
    direct = -math.log((1 + math.exp(-1)) / 2)
    brute = -math.log(0.5 * math.exp(-0.0) + 0.5 * math.exp(-1.0))
    got = mix_loss_values(np.array([0.5, 0.5]), np.array([0.0, 1.0]), 1.0)
    assert got == pytest.approx(direct, abs=1e-15)
    assert got == pytest.approx(brute, abs=1e-15)
    assert got == pytest.approx(0.3799, abs=5e-5)


def test_mix_loss_through_model():
    prob = problems.bernoulli_01(p=0.75)
    m = mix_loss(PredictorMixture.uniform(2), 1, 1.0, prob.loss, prob.model)
    assert m == pytest.approx(-math.log((1 + math.exp(-1)) / 2))


@given(
    st.lists(st.floats(0, 50), min_size=1, max_size=6),
    st.floats(0.01, 20),
    st.integers(0, 2**31),
)
def test_mix_loss_between_min_and_mean(ls, eta, seed):
    losses_ = np.array(ls)
    w = np.random.default_rng(seed).dirichlet(np.ones(len(ls)))
    m = mix_loss_values(w, losses_, eta)
    assert m >= losses_.min() - 1e-9
    assert m <= float(w @ losses_) + 1e-9


@given(st.lists(st.floats(0, 10), min_size=2, max_size=5), st.floats(0.05, 5), st.floats(0.05, 5))
def test_mix_loss_nonincreasing_in_eta(ls, a, b):
    w = np.full(len(ls), 1 / len(ls))
    lo, hi = sorted((a, b))
    assert mix_loss_values(w, np.array(ls), hi) <= mix_loss_values(w, np.array(ls), lo) + 1e-9


# --------------------------------------------------------- excess moments


def test_excess_moments_of_comparator_vanish():
    loss = losses.zero_one()
    m = excess_loss_moments(bern(0.75), 1.0, 1.0, loss)
    assert (m.mean, m.variance) == (0.0, 0.0)
    for eta in (0.0, 0.5, 7.0):
        assert m.cgf(eta) == 0.0


def test_excess_moments_bernoulli():
    m = excess_loss_moments(bern(0.75), 0.0, 1.0, losses.zero_one())
    assert m.mean == pytest.approx(0.5)
    assert m.variance == pytest.approx(0.75)
    # 0.75 e^{-eta} + 0.25 e^{eta} = 1 at eta = ln 3
    assert m.cgf(math.log(3)) == pytest.approx(0.0, abs=1e-14)


@pytest.mark.parametrize("mu,nu", [(1.5, 0.5), (-2.0, 0.0), (0.3, -1.0)])
def test_excess_moments_normal_location(mu, nu):
    m = excess_loss_moments(gaussian(nu, 1), mu, nu, losses.gaussian_log_loss())
    assert m.exact
    assert m.mean == pytest.approx((mu * mu + nu * nu) / 2 - mu * nu)
    assert m.variance == pytest.approx((mu - nu) ** 2)


def test_excess_moments_undefined():
    ll = losses.log_loss(2)
    with pytest.raises(UndefinedExpectation):
        excess_loss_moments(bern(0.5), (1.0, 0.0), (0.5, 0.5), ll)


# ----------------------------------------------------------- decision sets


def test_hull_grid_of_collinear_vectors_is_a_line():
    prob = problems.brier(resolution=4)
    D = prob.decisions(11)
    assert D.line() is not None
    # the grid plus the model points that fall between grid points
    assert len(D) == 13
    assert set(prob.model.predictors) <= set(D.predictors)


def test_convex_hull_requires_embedding():
    prob = DecisionProblem(losses.zero_one(), (bern(0.3),), Model((0.0, 1.0)), CONVEX_HULL)
    with pytest.raises(EmbeddingMissing):
        prob.decisions(5)


def test_all_grid_decisions():
    prob = DecisionProblem(losses.absolute(), (bern(0.3),), Model.scalar([0, 1]), "all-grid(5)")
    assert np.allclose(sorted(prob.decisions(0).predictors), [0, 0.25, 0.5, 0.75, 1])


def test_rng_streams_are_independent_of_order():
    a = core.rng_for(5, 1, 64).random(3)
    core.rng_for(5, 0, 64).random(10)
    assert np.array_equal(a, core.rng_for(5, 1, 64).random(3))


# ------------------------------------------------------- conditional lifting


def _joint(px, cond):
    outs, probs = [], []
    for x, (w, q) in enumerate(zip(px, cond)):
        outs += [(x, 0), (x, 1)]
        probs += [w * (1 - q), w * q]
    return FiniteSupport(tuple(outs), np.array(probs))


def test_lifting_single_x_is_isomorphic():
    base = problems.bernoulli_01(p=[0.25, 0.75])
    lifted = core.lift_conditional(base, [0], [_joint([1.0], [0.75])])
    assert len(lifted.model) == len(base.model)
    r = [risk(lifted.p_family[0], f, lifted.loss) for f in lifted.model.predictors]
    assert r == pytest.approx([risk(base.p_family[1], f, base.loss) for f in base.model.predictors])


def test_lifted_risk_is_average_of_conditional_risks():
    base = problems.bernoulli_01(p=[0.2, 0.7])
    P = _joint([0.4, 0.6], [0.2, 0.7])
    lifted = core.lift_conditional(base, [0, 1], [P])
    for f in lifted.model.predictors:
        brute = 0.4 * risk(bern(0.2), f[0], base.loss) + 0.6 * risk(bern(0.7), f[1], base.loss)
        assert risk(P, f, lifted.loss) == pytest.approx(brute, abs=1e-15)


def test_lifting_rejects_conditionals_outside_the_family():
    base = problems.bernoulli_01(p=[0.2, 0.7])
    with pytest.raises(ConditionalNotInFamily):
        core.lift_conditional(base, [0, 1], [_joint([0.5, 0.5], [0.2, 0.5])])


def test_lifted_mean_substitution_is_pointwise():
    base = problems.bounded_squared(1.0, z_grid=[-1, 1], f_grid=[-1, 1])
    lifted = core.lift_conditional(
        base, [0, 1], [FiniteSupport(((0, -1.0), (1, 1.0)), np.array([0.5, 0.5]))]
    )
    psi = core.lift_substitution(lambda w: float(w @ np.array([-1.0, 1.0])), 2, 2)
    w = np.zeros(len(lifted.model))
    # mass split between (-1, -1) and (1, 1): both conditional means are 0.2
    w[lifted.model.predictors.index((-1.0, -1.0))] = 0.4
    w[lifted.model.predictors.index((1.0, 1.0))] = 0.6
    assert psi(w) == pytest.approx((0.2, 0.2))
