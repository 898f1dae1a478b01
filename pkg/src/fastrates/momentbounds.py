"""Exponential-moment inequalities and fast-rate bound formulas.

Contents: the kappa function, the variance sandwich for log-moment gaps,
Cramer-Chernoff tail bounds, the half-eta cumulant bound together with a grid
oracle for the underlying moment problem and its dual certificates, and the
finite-class, VC-type and intermediate rate formulas.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq, linprog, minimize_scalar
from scipy.special import logsumexp

from .core import excess_loss_moments
from .errors import (
    CertificateInvalid,
    InfeasibleInstance,
    InfiniteMoment,
    NoFeasibleAtomTriple,
    PreconditionViolated,
    SandwichViolation,
    SupportViolation,
)

# Constant in the half-eta cumulant bound; sits just below (sqrt(e) - 1)^2 / 2.
CGF_CONSTANT = 0.21
HALF_SQRT_E_GAP = 0.5 * (math.sqrt(math.e) - 1.0) ** 2
BOUNDARY_TOL = 1e-12
TAYLOR_SWITCH = 1e-4


def kappa(x):
    """``(exp(x) - x - 1) / x**2``, continuous at 0 with value 1/2."""
    x_arr = np.asarray(x, dtype=float)
    small = np.abs(x_arr) <= TAYLOR_SWITCH
    safe = np.where(small, 1.0, x_arr)
    direct = (np.expm1(safe) - safe) / (safe * safe)
    taylor = 0.5 + x_arr / 6 + x_arr**2 / 24 + x_arr**3 / 120
    out = np.where(small, taylor, direct)
    return float(out) if out.ndim == 0 else out


def moment_taylor_gap(values: Sequence[float], probs: Sequence[float], a: float, slack: float = 1e-12):
    """Return ``(gap, lower, upper)`` for X supported in ``[-a, a]``.

    ``gap = E X + log E exp(-X)`` and the bounds are ``kappa(-2a) Var X`` and
    ``kappa(2a) Var X``.  Raises :class:`SandwichViolation` if the gap falls
    outside the bounds by more than ``slack``.
    """
    x = np.asarray(values, dtype=float)
    p = np.asarray(probs, dtype=float)
    if np.abs(x[p > 0]).max() > a + 1e-12:
        raise SupportViolation(f"support exceeds [-{a}, {a}]")
    keep = p > 0
    x, p = x[keep], p[keep] / p[keep].sum()
    mean = float(p @ x)
    var = float(p @ (x - mean) ** 2)
    # shift by the mean before exponentiating: gap = log E exp(-(X - EX))
    gap = float(logsumexp(-(x - mean), b=p))
    lower, upper = kappa(-2 * a) * var, kappa(2 * a) * var
    if gap < lower - slack or gap > upper + slack:
        raise SandwichViolation(f"gap {gap} outside [{lower}, {upper}]")
    return gap, lower, upper


def cramer_chernoff(problem, f, fstar, eta: float, t: float, n: int, p_index: int = 0) -> float:
    """Chernoff bound on the probability that ``f`` looks no worse than ``fstar``.

    Bounds Pr(empirical risk of f <= empirical risk of fstar + t) after ``n``
    draws from the ``p_index``-th law by ``exp(eta n t + n cgf(eta))``.
    ``f`` and ``fstar`` are model ids.
    """
    if eta <= 0:
        raise ValueError("eta must be positive")
    P = problem.p_family[p_index]
    preds = problem.model.predictors
    mom = excess_loss_moments(P, preds[f], preds[fstar], problem.loss)
    lam = mom.cgf(eta)
    if not math.isfinite(lam):
        raise InfiniteMoment("the excess loss has no finite exponential moment")
    return math.exp(eta * n * t + n * lam)


# ----------------------------------------------------------- moment problem


class Feasibility(enum.Enum):
    INTERIOR = "Interior"
    BOUNDARY = "Boundary"
    INFEASIBLE = "Infeasible"


def feasibility_threshold(eta_star: float) -> float:
    """``(cosh eta - 1) / sinh eta``, evaluated as ``tanh(eta / 2)``."""
    return math.tanh(eta_star / 2)


def feasible_moment(eta_star: float, a_over_n: float) -> Feasibility:
    """Classify whether some S in [-1, 1] has mean ``-a_over_n`` and E exp(eta S) = 1."""
    if eta_star <= 0 or a_over_n <= 0:
        raise ValueError("eta_star and a_over_n must be positive")
    thr = feasibility_threshold(eta_star)
    if abs(a_over_n - thr) <= BOUNDARY_TOL:
        return Feasibility.BOUNDARY
    return Feasibility.INTERIOR if a_over_n < thr else Feasibility.INFEASIBLE


def cgf_half_eta_bound(eta_star: float, a_over_n: float, V: float = 1.0) -> float:
    """Upper bound on ``log E exp(-(eta/2) W)`` for W in ``[-V, V]``.

    Applies when W has mean ``a_over_n`` and ``E exp(-eta_star W) = 1``.
    """
    if feasible_moment(V * eta_star, a_over_n / V) is Feasibility.INFEASIBLE:
        raise InfeasibleInstance(f"no variable on [-{V}, {V}] meets the constraints")
    return -CGF_CONSTANT * min(V * eta_star, 1.0) * a_over_n / V


@dataclass(frozen=True)
class MomentProblemInstance:
    eta_star: float
    a_over_n: float
    range_v: float = 1.0

    def __post_init__(self):
        if self.eta_star <= 0 or self.a_over_n <= 0 or self.range_v <= 0:
            raise ValueError("instance parameters must be positive")

    @property
    def feasibility(self) -> Feasibility:
        return feasible_moment(self.range_v * self.eta_star, self.a_over_n / self.range_v)

    def bound(self) -> float:
        return cgf_half_eta_bound(self.eta_star, self.a_over_n, self.range_v)


def _support_value(s: np.ndarray, inst: MomentProblemInstance):
    """Solve for weights on atoms ``s`` and return ``(value, weights)`` or None."""
    A = np.vstack([np.ones_like(s), s, np.exp(inst.eta_star * s)])
    b = np.array([1.0, -inst.a_over_n, 1.0])
    w, *_ = np.linalg.lstsq(A, b, rcond=None)
    if (w < -1e-10).any() or np.abs(A @ w - b).max() > 1e-9:
        return None
    w = np.clip(w, 0, None)
    return float(w @ np.exp(0.5 * inst.eta_star * s)), w


def moment_lp_oracle(inst: MomentProblemInstance, grid_size: int = 2001, method: str = "lp") -> float:
    """Largest ``E exp(eta S / 2)`` over laws on a uniform grid of ``[-V, V]``.

    Constraints: ``E S = -a/n`` and ``E exp(eta S) = 1``.  With ``method="atoms"``
    every support of at most three grid points is solved exactly, which costs
    ``grid_size**3 / 6`` small solves.  With ``method="lp"`` a linear program
    over the whole grid picks the optimal support (a basic solution has at most
    three atoms), which is then re-solved exactly.
    """
    if grid_size < 3:
        raise ValueError("grid_size must be at least 3")
    if inst.feasibility is Feasibility.INFEASIBLE:
        raise InfeasibleInstance("moment constraints cannot be met")
    s = np.linspace(-inst.range_v, inst.range_v, grid_size)
    if method == "atoms":
        return _atoms_oracle(s, inst)
    if method != "lp":
        raise ValueError(f"unknown method {method!r}")
    g = np.exp(inst.eta_star * s)
    res = linprog(
        -np.exp(0.5 * inst.eta_star * s),
        A_eq=np.vstack([np.ones_like(s), s, g]),
        b_eq=[1.0, -inst.a_over_n, 1.0],
        bounds=(0, None),
        method="highs",
    )
    if res.status != 0:
        raise NoFeasibleAtomTriple(f"no feasible law on a {grid_size}-point grid ({res.message})")
    support = np.flatnonzero(res.x > 1e-12)
    polished = _support_value(s[support], inst) if len(support) <= 3 else None
    if polished is None:
        return float(-res.fun)
    return max(polished[0], float(-res.fun))


def _atoms_oracle(s: np.ndarray, inst: MomentProblemInstance) -> float:
    eta = inst.eta_star
    k = len(s)
    best = -math.inf
    b = np.array([1.0, -inst.a_over_n, 1.0])
    for i in range(k):
        j, l = np.triu_indices(k - i - 1, 1)
        j, l = j + i + 1, l + i + 1
        if len(j) == 0:
            continue
        atoms = np.stack([np.full_like(j, i), j, l], axis=1)
        x = s[atoms]
        A = np.stack([np.ones_like(x), x, np.exp(eta * x)], axis=1)
        w = np.linalg.solve(A, np.broadcast_to(b, (len(x), 3))[..., None])[..., 0]
        ok = (w >= -1e-12).all(axis=1)
        if ok.any():
            vals = (np.clip(w[ok], 0, None) * np.exp(0.5 * eta * x[ok])).sum(axis=1)
            best = max(best, float(vals.max()))
    if best == -math.inf:
        raise NoFeasibleAtomTriple("no support of three grid points is feasible")
    return best


@dataclass(frozen=True)
class DualCertificate:
    """Coefficients ``(d0, d1, d2)`` of a minorant ``d0 + d1 s + d2 exp(eta s)``.

    The minorant lies below ``-exp(eta s / 2)`` on ``[-1, 1]``, so
    ``d0 - (a/n) d1 + d2`` lower-bounds ``-E exp(eta S / 2)``.
    """

    eta: float
    d0: float
    d1: float
    d2: float

    @property
    def c2(self) -> float:
        return -self.d2

    def slack(self, s):
        """Gap between the objective integrand and the minorant; nonnegative on [-1, 1]."""
        s = np.asarray(s, dtype=float)
        return -np.exp(0.5 * self.eta * s) - (self.d0 + self.d1 * s + self.d2 * np.exp(self.eta * s))

    def objective(self, a_over_n: float) -> float:
        return self.d0 - a_over_n * self.d1 + self.d2


def certificate_c2(eta: float) -> float:
    if eta <= 1:
        return math.sqrt(math.e) - math.e / 2
    return 0.5 - HALF_SQRT_E_GAP / eta


def dual_certificate_for(eta: float, grid: int = 10_000, tol: float = 1e-9) -> DualCertificate:
    """Closed-form dual certificate for the half-eta moment problem."""
    if eta <= 0:
        raise ValueError("eta must be positive")
    c2 = certificate_c2(eta)
    cert = DualCertificate(eta, c2 - 1.0, -eta * (0.5 - c2), -c2)
    worst = float(cert.slack(np.linspace(-1, 1, grid)).min())
    if worst < -tol:
        raise CertificateInvalid(f"certificate slack {worst} < 0 at eta={eta}")
    return cert


# ---------------------------------------------------------------- rate bounds


@dataclass(frozen=True)
class RateBoundInputs:
    V: float
    eta_star: float
    N: int
    delta: float
    n: int
    K: float | None = None
    C: float | None = None

    def __post_init__(self):
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if self.n < 1:
            raise ValueError("n must be at least 1")


def finite_class_bound(V: float, eta_star: float, N: int, delta: float, n: int) -> float:
    """High-probability excess-risk bound for ERM over ``N`` predictors."""
    if N < 1 or not 0 < delta < 1:
        raise ValueError("need N >= 1 and delta in (0, 1)")
    return 5 * max(V, 1 / eta_star) * (math.log(1 / delta) + math.log(N)) / n


def vc_type_branches(V: float, eta_star: float, K: float, C: float, delta: float, n: int) -> tuple[float, float]:
    """The two terms inside the maximum of the VC-type bound, before dividing by n."""
    if n < 5 or delta > 0.5 or V < 1 or K < 1 or delta <= 0:
        raise PreconditionViolated("need n >= 5, 0 < delta <= 1/2, V >= 1, K >= 1")
    first = 8 * max(V, 1 / eta_star) * (C * math.log(K * n) + math.log(2 / delta))
    clog = C * math.log(2 * K * n)
    second = 2 * V * (1080 * clog + 90 * math.sqrt(math.log(2 / delta) * clog) + math.log(2 * math.e / delta))
    return first, second


def vc_type_bound(V: float, eta_star: float, K: float, C: float, delta: float, n: int) -> float:
    """Excess-risk bound for classes with polynomial covering numbers."""
    return max(vc_type_branches(V, eta_star, K, C, delta, n)) / n + 1 / n


def intermediate_rate_bound(v, N: int, delta: float, n: int, c: float, V: float) -> float | None:
    """Rate ``w(5 (log(1/delta) + log N) / (c n))`` with ``w`` inverting ``x v(x)``.

    Returns None when ``v(w) > 1 / (c V)``, where the bound does not apply.
    """
    y = 5 * (math.log(1 / delta) + math.log(N)) / (c * n)
    if y <= 0:
        return 0.0

    def g(x):
        return x * float(v(x)) - y

    hi = 1.0
    while g(hi) < 0:
        hi *= 2
        if hi > 1e300:
            raise ValueError("x v(x) never reaches the target")
    lo = hi / 2
    while lo > 1e-300 and g(lo) > 0:
        lo /= 2
    x = brentq(g, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    if float(v(x)) > 1 / (c * V) * (1 + 1e-12):
        return None
    return x


def optimize_eta_rate(
    eps_of_eta: Callable[[float], float],
    N: int,
    n: int,
    eta_min: float = 1e-8,
    eta_max: float = 1e3,
    grid: int = 400,
) -> tuple[float, float]:
    """Minimise ``log N / (eta n) + eps(eta)`` over eta; returns ``(eta, rate)``."""

    def rate(log_eta):
        eta = math.exp(log_eta)
        return math.log(N) / (eta * n) + float(eps_of_eta(eta))

    logs = np.linspace(math.log(eta_min), math.log(eta_max), grid)
    vals = np.array([rate(t) for t in logs])
    i = int(np.argmin(vals))
    if i == 0 or i == grid - 1:
        return math.exp(logs[i]), float(vals[i])
    res = minimize_scalar(rate, bounds=(logs[i - 1], logs[i + 1]), method="bounded", options={"xatol": 1e-12})
    if res.fun <= vals[i]:
        return math.exp(res.x), float(res.fun)
    return math.exp(logs[i]), float(vals[i])
