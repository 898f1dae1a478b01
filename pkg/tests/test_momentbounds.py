import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fastrates import momentbounds as mb, problems
from fastrates.errors import (
    InfeasibleInstance,
    PreconditionViolated,
    SupportViolation,
)
from fastrates.momentbounds import Feasibility, MomentProblemInstance


# ------------------------------------------------------------------ kappa


def test_kappa_values():
    assert mb.kappa(0.0) == 0.5
    assert mb.kappa(1.0) == pytest.approx(math.e - 2, abs=1e-15)
    assert mb.kappa(-1.0) == pytest.approx(1 / math.e, abs=1e-15)
    assert mb.kappa(2.0) == pytest.approx((math.e**2 - 3) / 4, abs=1e-15)
    assert mb.kappa(-2.0) == pytest.approx((math.exp(-2) + 1) / 4, abs=1e-15)


def test_kappa_branches_agree_at_switch():
    x = mb.TAYLOR_SWITCH
    for v in (x, -x):
        direct = (math.expm1(v) - v) / (v * v)
        taylor = 0.5 + v / 6 + v * v / 24 + v**3 / 120
        assert abs(direct - taylor) < 1e-11


def test_kappa_is_increasing_on_a_dense_grid():
    xs = np.linspace(-20, 20, 200_001)
    assert np.all(np.diff(mb.kappa(xs)) > 0)


# -------------------------------------------------------- moment sandwich


def test_sandwich_constant_variable():
    assert mb.moment_taylor_gap([0.3], [1.0], 1.0) == (0.0, 0.0, 0.0)


def test_sandwich_rademacher():
    gap, lo, hi = mb.moment_taylor_gap([-1.0, 1.0], [0.5, 0.5], 1.0)
    assert gap == pytest.approx(math.log(math.cosh(1.0)), abs=1e-15)
    assert gap == pytest.approx(0.4338, abs=5e-5)
    assert (lo, hi) == (pytest.approx(0.2838, abs=5e-5), pytest.approx(1.0973, abs=5e-5))


def test_sandwich_rejects_wide_support():
    with pytest.raises(SupportViolation):
        mb.moment_taylor_gap([-2.0, 1.0], [0.5, 0.5], 1.0)


@given(
    st.lists(st.floats(-1, 1), min_size=1, max_size=6),
    st.integers(0, 2**31),
    st.floats(0.01, 1.0),
    st.sampled_from([0.25, 1.0, 4.0]),
)
def test_sandwich_survives_shrinking(vals, seed, c, a):
    x = np.array(vals) * a
    p = np.random.default_rng(seed).dirichlet(np.ones(len(x)))
    mb.moment_taylor_gap(x, p, a)
    mb.moment_taylor_gap(c * x, p, a)


# ------------------------------------------------------ Cramer-Chernoff


def test_chernoff_comparator_against_itself():
    prob = problems.bernoulli_01(p=0.75)
    assert mb.cramer_chernoff(prob, 1, 1, 0.7, 0.0, 10) == 1.0


def test_chernoff_bernoulli_value():
    prob = problems.bernoulli_01(p=0.75)
    eta = math.log(3) / 2
    # W = loss(0) - loss(1) is +1 w.p. 0.75 and -1 w.p. 0.25
    cgf = math.log(0.75 * math.exp(-eta) + 0.25 * math.exp(eta))
    assert cgf < 0
    got = mb.cramer_chernoff(prob, 0, 1, eta, 0.0, 10)
    assert got == pytest.approx(math.exp(10 * cgf), rel=1e-12)
    assert got == pytest.approx(0.2373, abs=5e-5)


def _misranking_probability(p, n):
    # Pr(empirical 0/1 risk of f=0 <= that of f=1) = Pr(#ones <= n/2)
    return sum(math.comb(n, k) * p**k * (1 - p) ** (n - k) for k in range(n + 1) if k <= n - k)


@pytest.mark.parametrize("n", range(1, 13))
@pytest.mark.parametrize("p", [0.6, 0.75, 0.9])
def test_chernoff_dominates_enumeration(p, n):
    prob = problems.bernoulli_01(p=p)
    brute = 0.0
    for seq in itertools.product((0, 1), repeat=n):
        if sum(seq) <= n - sum(seq):
            brute += math.prod(p if z else 1 - p for z in seq)
    assert brute == pytest.approx(_misranking_probability(p, n), abs=1e-14)
    for eta in (0.1, 0.5, 1.0, 2.0):
        assert mb.cramer_chernoff(prob, 0, 1, eta, 0.0, n) >= brute - 1e-15


# ---------------------------------------------------------- feasibility


def test_feasibility_examples():
    assert mb.feasible_moment(1.0, 0.1) is Feasibility.INTERIOR
    assert mb.feasibility_threshold(1.0) == pytest.approx(0.46212, abs=5e-6)
    assert mb.feasible_moment(1.0, math.tanh(0.5)) is Feasibility.BOUNDARY
    assert mb.feasible_moment(0.1, 0.5) is Feasibility.INFEASIBLE
    assert mb.feasibility_threshold(0.1) == pytest.approx(0.04996, abs=5e-6)


@given(st.floats(1e-3, 30))
def test_feasibility_threshold_hyperbolic_identity(eta):
    direct = (math.cosh(eta) - 1) / math.sinh(eta)
    assert mb.feasibility_threshold(eta) == pytest.approx(direct, abs=1e-12)


def test_cgf_bound_examples():
    assert mb.cgf_half_eta_bound(1.0, 0.1) == pytest.approx(-0.021, abs=1e-15)
    assert mb.cgf_half_eta_bound(4.0, 0.1) == pytest.approx(-0.021, abs=1e-15)
    assert mb.cgf_half_eta_bound(1.0, 0.1, V=2.0) == pytest.approx(-0.0105, abs=1e-15)


def test_cgf_bound_rejects_infeasible():
    with pytest.raises(InfeasibleInstance):
        mb.cgf_half_eta_bound(0.1, 0.5)


# ------------------------------------------------------------ LP oracle


def test_oracle_below_closed_form():
    inst = MomentProblemInstance(1.0, 0.1)
    got = mb.moment_lp_oracle(inst, 2001)
    assert got <= math.exp(inst.bound())
    assert math.exp(-0.021) == pytest.approx(0.97922, abs=5e-6)
    assert got == pytest.approx(0.97835, abs=5e-5)


def test_oracle_near_extremal_case():
    inst = MomentProblemInstance(1.0, 0.9 * math.tanh(0.5))
    assert mb.moment_lp_oracle(inst, 2001) <= math.exp(inst.bound())


def test_oracle_tends_to_one_for_small_mean():
    inst = MomentProblemInstance(1.0, 1e-6)
    assert mb.moment_lp_oracle(inst, 2001) == pytest.approx(1.0, abs=1e-5)
    assert math.exp(inst.bound()) == pytest.approx(1.0, abs=1e-6)


def test_oracle_methods_agree_on_a_small_grid():
    # the LP route and exhaustive enumeration of three-atom supports
    inst = MomentProblemInstance(2.0, 0.3)
    lp = mb.moment_lp_oracle(inst, 81, "lp")
    atoms = mb.moment_lp_oracle(inst, 81, "atoms")
    assert lp == pytest.approx(atoms, abs=1e-9)


def test_oracle_errors():
    with pytest.raises(InfeasibleInstance):
        mb.moment_lp_oracle(MomentProblemInstance(0.1, 0.5), 101)
    with pytest.raises(ValueError):
        mb.moment_lp_oracle(MomentProblemInstance(1.0, 0.05), 2)


@pytest.mark.parametrize("seed", range(5))
def test_oracle_within_grid_spacing(seed):
    rng = np.random.default_rng(seed)
    eta = rng.uniform(0.05, 8.0)
    a = rng.uniform(0.01, 0.95) * math.tanh(eta / 2)
    inst = MomentProblemInstance(eta, a)
    assert mb.moment_lp_oracle(inst, 401) <= math.exp(inst.bound()) + 10 * 2 / 400


# --------------------------------------------------------- certificates


def test_certificate_constants():
    sqe = math.sqrt(math.e)
    assert mb.certificate_c2(1.0) == pytest.approx(sqe - math.e / 2, abs=1e-15)
    assert mb.certificate_c2(1.0) == pytest.approx(0.28958, abs=5e-6)
    # the large-eta branch meets the small-eta one at eta = 1
    assert 0.5 - 0.5 * (sqe - 1) ** 2 == pytest.approx(sqe - math.e / 2, abs=1e-15)
    assert mb.certificate_c2(0.5) == mb.certificate_c2(1.0)


@pytest.mark.parametrize("eta", [0.05, 0.5, 1.0, 1.5, 3.0, 10.0])
def test_certificate_structure(eta):
    cert = mb.dual_certificate_for(eta)
    c2 = cert.c2
    assert cert.d0 == pytest.approx(-cert.d2 - 1)
    assert cert.d1 == pytest.approx(-eta * (0.5 - c2))
    s = np.linspace(-1, 1, 10_001)
    u = 1 + c2 * np.expm1(eta * s) - np.exp(0.5 * eta * s) + eta * (0.5 - c2) * s
    assert np.allclose(u, cert.slack(s), atol=1e-12)
    assert u.min() >= -1e-9


@pytest.mark.parametrize("eta", [0.1, 0.7, 1.0, 2.5, 6.0])
def test_certificate_weak_duality(eta):
    cert = mb.dual_certificate_for(eta)
    for frac in (0.01, 0.3, 0.7, 0.99):
        a = frac * math.tanh(eta / 2)
        assert cert.objective(a) >= -math.exp(mb.cgf_half_eta_bound(eta, a)) - 1e-12
        # and the certificate bounds the oracle from the other side
        assert -cert.objective(a) >= mb.moment_lp_oracle(MomentProblemInstance(eta, a), 401) - 1e-9


# ------------------------------------------------------------ rate bounds


def test_finite_class_bound_value():
    got = mb.finite_class_bound(1.0, 1.0, 10, 0.05, 1000)
    assert got == pytest.approx(5 * (math.log(20) + math.log(10)) / 1000, rel=1e-15)
    assert got == pytest.approx(0.026491, abs=1e-6)


def test_finite_class_bound_scaling():
    assert mb.finite_class_bound(1, 1, 10, 0.05, 2000) == pytest.approx(mb.finite_class_bound(1, 1, 10, 0.05, 1000) / 2)
    assert mb.finite_class_bound(1, 1, 1, 1 - 1e-12, 10) < 1e-11
    # the max(V, 1/eta) factor
    assert mb.finite_class_bound(0.5, 0.25, 3, 0.1, 7) == pytest.approx(5 * 4 * math.log(30) / 7)


def test_rate_inputs_validation():
    with pytest.raises(ValueError):
        mb.RateBoundInputs(1, 1, 2, 1.0, 5)
    with pytest.raises(ValueError):
        mb.RateBoundInputs(1, 1, 2, 0.1, 0)


def test_vc_type_bound():
    first, second = mb.vc_type_branches(1, 1, 1, 1, 0.5, 5)
    assert first == pytest.approx(8 * (math.log(5) + math.log(4)))
    assert mb.vc_type_bound(1, 1, 1, 1, 0.5, 5) == pytest.approx(max(first, second) / 5 + 0.2)
    vals = [mb.vc_type_bound(1, 1, 2, 1, 0.1, n) for n in (10, 100, 1000, 10**4, 10**5)]
    assert all(b > a for a, b in zip(vals[1:], vals))
    for n in (10, 100, 1000):
        assert mb.vc_type_bound(1, 1, 2, 1, 0.1, n) > mb.finite_class_bound(1, 1, 2 * n, 0.1, n)


def test_vc_type_preconditions():
    for args in [(1, 1, 1, 1, 0.5, 4), (1, 1, 1, 1, 0.6, 5), (0.5, 1, 1, 1, 0.1, 5), (1, 1, 0.5, 1, 0.1, 5)]:
        with pytest.raises(PreconditionViolated):
            mb.vc_type_bound(*args)


def test_intermediate_rate_constant_v():
    eta, c = 0.5, 1.0
    y = 5 * (math.log(20) + math.log(4)) / 100
    got = mb.intermediate_rate_bound(lambda x: eta, 4, 0.05, 100, c, 1.0)
    assert got == pytest.approx(y / eta, rel=1e-12)


@pytest.mark.parametrize("beta,exponent", [(0.0, -0.5), (0.5, -2 / 3), (1.0, -1.0)])
def test_intermediate_rate_exponents(beta, exponent):
    ns = np.array([1e3, 1e4, 1e5, 1e6])
    rates = [mb.intermediate_rate_bound(lambda x: x ** (1 - beta), 5, 0.05, int(n), 1.0, 0.1) for n in ns]
    slope = np.polyfit(np.log(ns), np.log(rates), 1)[0]
    assert slope == pytest.approx(exponent, abs=1e-9)


def test_intermediate_rate_gate():
    # v(w) = 1 exceeds 1 / (c V) = 0.5, so the bound does not apply
    assert mb.intermediate_rate_bound(lambda x: 1.0, 4, 0.05, 100, 1.0, 2.0) is None


def test_optimize_eta_rate_quadratic():
    eta, rate = mb.optimize_eta_rate(lambda e: e * e, 2, 100)
    eta_true = (math.log(2) / 200) ** (1 / 3)
    assert eta == pytest.approx(eta_true, rel=1e-5)
    assert rate == pytest.approx(math.log(2) / (eta_true * 100) + eta_true**2, rel=1e-9)
    assert rate == pytest.approx(0.0687, abs=5e-5)


def test_optimize_eta_rate_zero_eps_hits_the_grid_max():
    eta, rate = mb.optimize_eta_rate(lambda e: 0.0, 3, 50)
    assert eta == pytest.approx(1e3)
    assert rate == pytest.approx(math.log(3) / (1e3 * 50))
