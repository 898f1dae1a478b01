"""Decision problems, distributions, risk, mix loss and excess-loss moments.

Losses take values in (-inf, +inf]; ``+inf`` is allowed, NaN and ``-inf`` are
rejected.  We use the convention exp(-eta * inf) = 0 throughout.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np
from scipy.special import logsumexp

from .errors import (
    AllInfiniteRisk,
    ConditionalNotInFamily,
    EmbeddingMissing,
    UndefinedExpectation,
)

PROB_TOL = 1e-12
EXACT_TOL = 1e-9
Z95 = 1.959963984540054
DEFAULT_MC_SIZE = 20000

CONVEX_HULL = "convex-hull-of-model"
MODEL = "model"


def as_extreal(x) -> float:
    """Validate a loss value: finite or +inf."""
    x = float(x)
    if math.isnan(x) or x == -math.inf:
        raise UndefinedExpectation(f"loss value {x} is not in (-inf, +inf]")
    return x


def _check_values(values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if np.isnan(values).any() or np.isneginf(values).any():
        raise UndefinedExpectation("integrand contains NaN or -inf")
    return values


def rng_for(seed: int, *index: int) -> np.random.Generator:
    """Generator for the sub-stream addressed by ``(seed, index)``."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=tuple(int(i) for i in index)))


# ---------------------------------------------------------------- losses


@dataclass(frozen=True)
class Mixture:
    """A mixture of actions, used as a decision under log loss."""

    weights: tuple
    actions: tuple


@dataclass(frozen=True, eq=False)
class Loss:
    """A loss ``fn(action, outcome)``.

    ``quadratic`` optionally gives coefficients ``(c2, c1, c0)`` with
    ``loss(a, z) = c2 z**2 + c1 z + c0`` for real outcomes; it lets risks and
    exponential moments under parametric samplers be computed exactly.
    ``matrix_fn`` is an optional vectorised evaluator over arrays of scalar
    actions and outcomes.  ``domain`` describes the full action space for
    ``all-grid`` decision sets: ``("interval", lo, hi)`` or ``("simplex", k)``.
    """

    name: str
    fn: Callable[[Any, Any], float]
    declared_range: tuple | None = None
    params: dict = field(default_factory=dict)
    quadratic: Callable[[Any], tuple] | None = None
    matrix_fn: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None
    domain: tuple | None = None

    def __call__(self, action, z) -> float:
        return float(self.fn(action, z))

    def matrix(self, actions: Sequence, outcomes: Sequence) -> np.ndarray:
        """Loss table with one row per action and one column per outcome."""
        if self.matrix_fn is not None:
            try:
                a = np.asarray(actions, dtype=float)
                z = np.asarray(outcomes, dtype=float)
            except (TypeError, ValueError):
                a = z = None
            if a is not None and a.ndim == 1 and z.ndim == 1:
                return _check_values(self.matrix_fn(a, z))
        out = np.empty((len(actions), len(outcomes)))
        for i, a in enumerate(actions):
            for j, z in enumerate(outcomes):
                out[i, j] = self.fn(a, z)
        return _check_values(out)


# ---------------------------------------------------------- distributions


@dataclass(frozen=True, eq=False)
class FiniteSupport:
    """A distribution on finitely many outcomes."""

    outcomes: tuple
    probs: np.ndarray
    name: str = ""

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        outcomes = tuple(_freeze(o) for o in self.outcomes)
        if probs.ndim != 1 or len(probs) != len(outcomes) or len(probs) == 0:
            raise ValueError("outcomes and probs must be nonempty and of equal length")
        if (probs < 0).any() or not np.isfinite(probs).all():
            raise ValueError("probabilities must be nonnegative")
        if abs(math.fsum(probs) - 1.0) > PROB_TOL:
            raise ValueError(f"probabilities sum to {math.fsum(probs)!r}, not 1")
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "outcomes", outcomes)

    @classmethod
    def point(cls, z, name: str = "") -> "FiniteSupport":
        return cls((z,), np.array([1.0]), name)

    @classmethod
    def bernoulli(cls, p: float) -> "FiniteSupport":
        return cls((0, 1), np.array([1.0 - p, p]), f"bernoulli({p})")

    def positive(self) -> tuple[tuple, np.ndarray]:
        """Outcomes with positive probability and their probabilities."""
        keep = self.probs > 0
        return tuple(o for o, k in zip(self.outcomes, keep) if k), self.probs[keep]

    def sample_indices(self, n: int, seed: int, index: int = 0) -> np.ndarray:
        return rng_for(seed, index).choice(len(self.probs), size=n, p=self.probs)

    def sample(self, n: int, seed: int, index: int = 0) -> list:
        return [self.outcomes[i] for i in self.sample_indices(n, seed, index)]

    @property
    def mean(self) -> float:
        return float(np.dot(self.probs, np.asarray(self.outcomes, dtype=float)))


@dataclass(frozen=True, eq=False)
class Sampler:
    """A parametric distribution on the real line.

    ``draw(rng, n)`` produces ``n`` draws.  ``mean``, ``var`` and ``cgf``
    (``t -> log E exp(t Z)``, possibly ``+inf``) are exact oracles when known.
    """

    name: str
    params: dict
    draw: Callable[[np.random.Generator, int], np.ndarray]
    mean: float | None = None
    var: float | None = None
    cgf: Callable[[float], float] | None = None
    mc_size: int = DEFAULT_MC_SIZE

    def sample(self, n: int, seed: int, index: int = 0) -> np.ndarray:
        return np.asarray(self.draw(rng_for(seed, index), n), dtype=float)

    @property
    def second_moment(self) -> float | None:
        if self.mean is None or self.var is None:
            return None
        return self.var + self.mean**2


def gaussian(mean: float = 0.0, var: float = 1.0) -> Sampler:
    sd = math.sqrt(var)
    return Sampler(
        "gaussian",
        {"mean": float(mean), "var": float(var)},
        lambda rng, n: rng.normal(mean, sd, size=n),
        mean=float(mean),
        var=float(var),
        cgf=lambda t: mean * t + 0.5 * var * t * t,
    )


def gaussian_mixture(means: Sequence[float], weights: Sequence[float] | None = None, var: float = 1.0) -> Sampler:
    means = np.asarray(means, dtype=float)
    w = np.full(len(means), 1.0 / len(means)) if weights is None else np.asarray(weights, dtype=float)
    sd = math.sqrt(var)
    m = float(w @ means)

    def draw(rng, n):
        comp = rng.choice(len(w), size=n, p=w)
        return means[comp] + sd * rng.standard_normal(n)

    return Sampler(
        "gaussian_mixture",
        {"means": means.tolist(), "weights": w.tolist(), "var": float(var)},
        draw,
        mean=m,
        var=float(var + w @ (means - m) ** 2),
        cgf=lambda t: float(logsumexp(t * means + 0.5 * var * t * t, b=w)),
    )


def student_t(df: float, loc: float = 0.0) -> Sampler:
    """Student t law; every exponential moment except at 0 diverges."""
    return Sampler(
        "student_t",
        {"df": float(df), "loc": float(loc)},
        lambda rng, n: loc + rng.standard_t(df, size=n),
        mean=float(loc) if df > 1 else None,
        var=df / (df - 2.0) if df > 2 else None,
        cgf=lambda t: t * loc if t == 0 else math.inf,
    )


SAMPLERS = {"gaussian": gaussian, "gaussian_mixture": gaussian_mixture, "student_t": student_t}


def make_sampler(name: str, params: dict) -> Sampler:
    if name not in SAMPLERS:
        raise ValueError(f"unknown sampler {name!r}")
    return SAMPLERS[name](**params)


Distribution = FiniteSupport | Sampler


def outcome_table(P, mc_size: int | None = None, seed: int = 0, index: int = 0):
    """Return ``(outcomes, weights, exact)`` representing expectations under P.

    Finite laws give their positive-mass support; samplers give an equally
    weighted Monte Carlo sample drawn from the ``(seed, index)`` stream.
    """
    if isinstance(P, FiniteSupport):
        outs, probs = P.positive()
        return outs, probs, True
    m = mc_size or P.mc_size
    return P.sample(m, seed, index), np.full(m, 1.0 / m), False


def _freeze(x):
    if isinstance(x, list):
        return tuple(_freeze(v) for v in x)
    if isinstance(x, np.ndarray):
        return tuple(x.tolist())
    return x


# ----------------------------------------------------------------- model


@dataclass(frozen=True, eq=False)
class Model:
    """A finite list of predictors with an optional vector embedding."""

    predictors: tuple
    embedding: np.ndarray | None = None
    from_vector: Callable[[np.ndarray], Any] | None = None

    def __post_init__(self):
        preds = tuple(_freeze(p) for p in self.predictors)
        if len(preds) < 1:
            raise ValueError("a model needs at least one predictor")
        object.__setattr__(self, "predictors", preds)
        if self.embedding is not None:
            emb = np.asarray(self.embedding, dtype=float)
            if emb.ndim == 1:
                emb = emb[:, None]
            if emb.shape[0] != len(preds):
                raise ValueError("embedding must have one row per predictor")
            emb.setflags(write=False)
            object.__setattr__(self, "embedding", emb)

    def __len__(self) -> int:
        return len(self.predictors)

    @classmethod
    def scalar(cls, values: Sequence[float]) -> "Model":
        vals = [float(v) for v in values]
        return cls(tuple(vals), np.asarray(vals)[:, None])

    @classmethod
    def vectors(cls, rows: Sequence[Sequence[float]]) -> "Model":
        emb = np.asarray(rows, dtype=float)
        return cls(tuple(tuple(r) for r in emb.tolist()), emb)

    def action_from_vector(self, v: np.ndarray):
        """Turn an embedding-space point into an action."""
        if self.from_vector is not None:
            return self.from_vector(np.asarray(v, dtype=float))
        v = np.asarray(v, dtype=float).ravel()
        return float(v[0]) if v.size == 1 else tuple(v.tolist())

    def mean_action(self, weights: np.ndarray):
        if self.embedding is None:
            raise EmbeddingMissing("mean substitution needs an embedding")
        return self.action_from_vector(np.asarray(weights, dtype=float) @ self.embedding)

    def line(self):
        """``(origin, direction, coords)`` if the embedding is collinear, else None."""
        if self.embedding is None:
            return None
        emb = self.embedding
        origin = emb[0]
        centered = emb - origin
        spread = np.abs(centered).max()
        if spread == 0:
            return None
        _, s, vt = np.linalg.svd(centered, full_matrices=False)
        if len(s) > 1 and s[1] > 1e-10 * s[0]:
            return None
        direction = vt[0]
        return origin, direction, centered @ direction


@dataclass(frozen=True)
class PredictorMixture:
    """A probability vector over model ids."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or (w < 0).any() or abs(math.fsum(w) - 1.0) > PROB_TOL:
            raise ValueError("mixture weights must be a probability vector")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @classmethod
    def uniform(cls, n: int) -> "PredictorMixture":
        return cls(np.full(n, 1.0 / n))

    @classmethod
    def point(cls, n: int, i: int) -> "PredictorMixture":
        w = np.zeros(n)
        w[i] = 1.0
        return cls(w)


# -------------------------------------------------------- decision problem


@dataclass(frozen=True, eq=False)
class DecisionProblem:
    """A loss, a family of distributions, a model and a decision set.

    ``decision_set`` is ``"model"``, ``"convex-hull-of-model"``,
    ``"all-grid(<resolution>)"`` or an explicit :class:`Model`.
    ``facts`` holds known ground-truth constants for recipes.
    """

    loss: Loss
    p_family: tuple
    model: Model
    decision_set: Any = MODEL
    name: str = ""
    facts: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "p_family", tuple(self.p_family))
        if not self.p_family:
            raise ValueError("the distribution family is empty")
        for P in self.p_family:
            best_predictor(P, self.model, self.loss)

    def decisions(self, resolution: int = 201) -> Model:
        """A finite grid of playable decisions."""
        ds = self.decision_set
        if isinstance(ds, Model):
            return ds
        if ds == MODEL:
            return self.model
        if ds == CONVEX_HULL:
            return hull_grid(self.model, resolution)
        if isinstance(ds, str) and ds.startswith("all-grid"):
            res = resolution
            if "(" in ds:
                res = int(ds[ds.index("(") + 1 : ds.index(")")])
            return domain_grid(self.loss, res)
        raise ValueError(f"unknown decision set {ds!r}")

    def outcome_space(self) -> tuple | None:
        """Outcomes of all finite-support laws in first-seen order, or None if any law is a sampler."""
        seen = {}
        for P in self.p_family:
            if not isinstance(P, FiniteSupport):
                return None
            for o in P.outcomes:
                seen.setdefault(o, None)
        return tuple(seen)

    def allows(self, action, tol: float = 1e-9) -> bool:
        """Whether ``action`` lies in the decision set."""
        ds = self.decision_set
        if ds == MODEL or isinstance(ds, Model):
            preds = self.model.predictors if ds == MODEL else ds.predictors
            return any(_same_action(action, p, tol) for p in preds)
        if ds == CONVEX_HULL:
            if isinstance(action, Mixture):
                return True
            emb = self.model.embedding
            if emb is None:
                return False
            v = np.atleast_1d(np.asarray(action, dtype=float)).ravel()
            if emb.shape[1] == 1:
                return emb.min() - tol <= v[0] <= emb.max() + tol
            return True
        return True


def _same_action(a, b, tol) -> bool:
    try:
        return bool(np.allclose(np.asarray(a, dtype=float), np.asarray(b, dtype=float), atol=tol, rtol=0))
    except (TypeError, ValueError):
        return a == b


def simplex_grid(k: int, m: int) -> np.ndarray:
    """All probability vectors of length ``k`` with entries in multiples of 1/m."""
    rows = []
    for cuts in itertools.combinations(range(m + k - 1), k - 1):
        prev, parts = -1, []
        for c in cuts:
            parts.append(c - prev - 1)
            prev = c
        parts.append(m + k - 2 - prev)
        rows.append(parts)
    return np.asarray(rows, dtype=float) / m


def hull_grid(model: Model, resolution: int) -> Model:
    """Grid over the convex hull of the model's embedding."""
    if model.embedding is None:
        raise EmbeddingMissing("convex-hull decisions need an embedding")
    line = model.line()
    if line is not None:
        origin, direction, coords = line
        ts = np.union1d(np.linspace(coords.min(), coords.max(), resolution), coords)
        # drop near-duplicates left by rounding so neighbouring grid points are distinct
        ts = ts[np.concatenate([[True], np.diff(ts) > 1e-12 * max(1.0, float(np.ptp(ts)))])]
        emb = origin[None, :] + ts[:, None] * direction[None, :]
        # model points keep their exact embedding
        idx = np.searchsorted(ts, coords)
        hit = (idx < len(ts)) & (np.abs(ts[np.minimum(idx, len(ts) - 1)] - coords) <= 1e-12 * max(1.0, float(np.ptp(ts))))
        emb[idx[hit]] = model.embedding[hit]
    else:
        n = len(model)
        m = 1
        while simplex_grid(n, m + 1).shape[0] <= resolution:
            m += 1
        emb = simplex_grid(n, m) @ model.embedding
    acts = tuple(model.action_from_vector(r) for r in emb)
    return Model(acts, emb, model.from_vector)


def domain_grid(loss: Loss, resolution: int) -> Model:
    if loss.domain is None:
        raise ValueError(f"loss {loss.name!r} does not declare its action domain")
    if loss.domain[0] == "interval":
        return Model.scalar(np.linspace(loss.domain[1], loss.domain[2], resolution))
    if loss.domain[0] == "simplex":
        k = int(loss.domain[1])
        m = 1
        while simplex_grid(k, m + 1).shape[0] <= resolution:
            m += 1
        return Model.vectors(simplex_grid(k, m))
    raise ValueError(f"unknown domain {loss.domain!r}")


# ------------------------------------------------------------------ risk


def _quadratic_risk(P: Sampler, action, loss: Loss) -> float | None:
    if loss.quadratic is None or P.second_moment is None or isinstance(action, Mixture):
        return None
    c2, c1, c0 = loss.quadratic(action)
    return c2 * P.second_moment + c1 * P.mean + c0


def expect(values: np.ndarray, weights: np.ndarray) -> float:
    """Expectation of a table of extended reals; ``inf`` on positive mass gives ``inf``."""
    values = _check_values(values)
    pos = weights > 0
    if np.isposinf(values[pos]).any():
        return math.inf
    return float(np.dot(weights[pos], values[pos]))


def risk_with_ci(P, f, loss: Loss, mc_size: int | None = None, seed: int = 0) -> tuple[float, float]:
    """Risk of action ``f`` under ``P`` and the 95% CI half-width (0 if exact)."""
    if isinstance(P, Sampler):
        exact = _quadratic_risk(P, f, loss)
        if exact is not None:
            return exact, 0.0
    outs, w, is_exact = outcome_table(P, mc_size, seed)
    vals = loss.matrix([f], outs)[0]
    value = expect(vals, w)
    if is_exact or not math.isfinite(value):
        return value, 0.0
    return value, Z95 * float(np.std(vals, ddof=1)) / math.sqrt(len(vals))


def risk(P, f, loss: Loss, mc_size: int | None = None, seed: int = 0) -> float:
    """Expected loss of action ``f`` under ``P``."""
    return risk_with_ci(P, f, loss, mc_size, seed)[0]


def risks(P, model: Model, loss: Loss, mc_size: int | None = None, seed: int = 0) -> np.ndarray:
    """Risks of every predictor; samplers share one Monte Carlo sample."""
    if isinstance(P, Sampler) and loss.quadratic is not None and P.second_moment is not None:
        return np.array([_quadratic_risk(P, a, loss) for a in model.predictors])
    outs, w, _ = outcome_table(P, mc_size, seed)
    L = loss.matrix(model.predictors, outs)
    return np.array([expect(row, w) for row in L])


def argmin_lowest(values: np.ndarray, rel_tol: float = 1e-12) -> int:
    """Index of the minimum, counting near-ties as ties and taking the lowest id."""
    values = np.asarray(values, dtype=float)
    m = values.min()
    if not math.isfinite(m):
        return int(np.argmin(values))
    return int(np.flatnonzero(values <= m + rel_tol * max(1.0, abs(m)))[0])


def best_predictor(P, model: Model, loss: Loss, mc_size: int | None = None, seed: int = 0) -> tuple[int, float]:
    """Risk minimiser over the model, ties broken by lowest id."""
    r = risks(P, model, loss, mc_size, seed)
    if not np.isfinite(r).any():
        raise AllInfiniteRisk("no predictor has finite risk")
    i = argmin_lowest(r)
    return i, float(r[i])


# -------------------------------------------------------------- mix loss


def mix_loss_values(weights, losses, eta: float, axis: int = -1):
    """Mix loss of loss vectors, reducing over ``axis``.

    ``-(1/eta) log sum_f w_f exp(-eta * loss_f)``, stable under large losses
    and with exp(-eta * inf) = 0.
    """
    if eta <= 0:
        raise ValueError("eta must be positive")
    losses = np.asarray(losses, dtype=float)
    weights = np.broadcast_to(np.asarray(weights, dtype=float), losses.shape)
    with np.errstate(divide="ignore"):
        logw = np.log(weights)
    a = np.where(weights > 0, -eta * losses + logw, -np.inf)
    return -logsumexp(a, axis=axis) / eta


def mix_loss(pi: PredictorMixture, z, eta: float, loss: Loss, model: Model) -> float:
    """Mix loss of the mixture ``pi`` over ``model`` at outcome ``z``."""
    vals = loss.matrix(model.predictors, [z])[:, 0]
    return float(mix_loss_values(pi.weights, vals, eta))


# ------------------------------------------------------ excess-loss moments


@dataclass(frozen=True)
class MomentSummary:
    """Mean, variance and cumulant generating function of an excess loss W.

    ``cgf(eta)`` is ``log E exp(-eta W)``; ``mgf(eta)`` its exponential.
    """

    mean: float
    variance: float
    second_moment: float
    ci_halfwidth: float
    exact: bool
    _cgf: Callable[[float], float] = field(repr=False)

    def cgf(self, eta: float) -> float:
        if eta == 0:
            return 0.0
        return float(self._cgf(eta))

    def mgf(self, eta: float) -> float:
        if eta == 0:
            return 1.0
        c = self.cgf(eta)
        return math.inf if c == math.inf else math.exp(c)


def _table_moments(w: np.ndarray, p: np.ndarray, exact: bool) -> MomentSummary:
    if not np.isfinite(w).all():
        raise UndefinedExpectation("excess loss is infinite on positive mass")
    mean = float(np.dot(p, w))
    var = max(float(np.dot(p, (w - mean) ** 2)), 0.0)
    half = 0.0 if exact else Z95 * math.sqrt(var / len(w))
    if np.all(w == w[0]):
        c = float(w[0])
        return MomentSummary(c, 0.0, c * c, 0.0, exact, lambda eta: -eta * c)
    logp = np.log(p)
    return MomentSummary(
        mean, var, var + mean * mean, half, exact, lambda eta: float(logsumexp(-eta * w + logp))
    )


def excess_loss_moments(P, f, fstar, loss: Loss, mc_size: int | None = None, seed: int = 0) -> MomentSummary:
    """Moments of ``W = loss(f, Z) - loss(fstar, Z)`` for actions ``f`` and ``fstar``."""
    if (
        isinstance(P, Sampler)
        and loss.quadratic is not None
        and P.second_moment is not None
        and not isinstance(f, Mixture)
        and not isinstance(fstar, Mixture)
    ):
        a2, a1, a0 = np.subtract(loss.quadratic(f), loss.quadratic(fstar))
        if abs(a2) < 1e-15:
            mean = a1 * P.mean + a0
            var = a1 * a1 * P.var
            cgf = P.cgf

            def lam(eta):
                if cgf is None:
                    raise UndefinedExpectation("sampler has no exact cumulant generating function")
                if a1 == 0:
                    return -eta * a0
                return -eta * a0 + cgf(-eta * a1)

            return MomentSummary(float(mean), float(var), float(var + mean * mean), 0.0, True, lam)
    outs, p, exact = outcome_table(P, mc_size, seed)
    L = loss.matrix([f, fstar], outs)
    return _table_moments(L[0] - L[1], p, exact)


# ---------------------------------------------------------- conditional lifting


def _conditional(P: FiniteSupport, x) -> tuple[float, dict]:
    mass, cond = 0.0, {}
    for (xx, y), p in zip(P.outcomes, P.probs):
        if xx == x and p > 0:
            mass += p
            cond[y] = cond.get(y, 0.0) + p
    return mass, {y: v / mass for y, v in cond.items()} if mass > 0 else {}


def _matches(cond: dict, Q, tol: float) -> bool:
    if not isinstance(Q, FiniteSupport):
        return False
    q = {}
    for o, p in zip(Q.outcomes, Q.probs):
        q[o] = q.get(o, 0.0) + p
    keys = set(q) | set(cond)
    return all(abs(q.get(k, 0.0) - cond.get(k, 0.0)) <= tol for k in keys)


def lift_conditional(unconditional: DecisionProblem, x_space: Sequence, joint_family: Sequence, tol: float = 1e-9) -> DecisionProblem:
    """Lift a problem on outcomes ``y`` to one on pairs ``(x, y)``.

    Predictors of the lifted problem are tuples giving one base action per
    element of ``x_space``; their loss at ``(x, y)`` is the base loss of the
    component for ``x``.
    """
    xs = tuple(x_space)
    pos = {x: i for i, x in enumerate(xs)}
    for k, P in enumerate(joint_family):
        if not isinstance(P, FiniteSupport):
            raise ConditionalNotInFamily("joint laws must have finite support")
        for x in xs:
            mass, cond = _conditional(P, x)
            if mass > 0 and not any(_matches(cond, Q, tol) for Q in unconditional.p_family):
                raise ConditionalNotInFamily(f"law {k}: conditional at x={x!r} is not in the family")
    base = unconditional.model
    lifted_model = _lift_model(base, len(xs))
    base_loss = unconditional.loss

    def fn(action, z):
        x, y = z
        return base_loss(action[pos[x]], y)

    loss = Loss(f"lifted({base_loss.name})", fn, base_loss.declared_range, {"base": base_loss.name})
    ds = unconditional.decision_set
    if isinstance(ds, Model):
        ds = _lift_model(ds, len(xs))
    return DecisionProblem(loss, tuple(joint_family), lifted_model, ds, f"lifted({unconditional.name})")


def _lift_model(base: Model, k: int) -> Model:
    ids = list(itertools.product(range(len(base)), repeat=k))
    preds = tuple(tuple(base.predictors[i] for i in t) for t in ids)
    emb = None
    if base.embedding is not None:
        emb = np.asarray([np.concatenate([base.embedding[i] for i in t]) for t in ids])
    d = None if base.embedding is None else base.embedding.shape[1]

    def from_vector(v):
        return tuple(base.action_from_vector(c) for c in np.split(np.asarray(v), k)) if d else None

    return Model(preds, emb, from_vector if emb is not None else None)


def lift_substitution(psi: Callable[[np.ndarray], Any], base_size: int, num_x: int) -> Callable[[np.ndarray], tuple]:
    """Apply a base substitution to the per-``x`` marginals of a lifted mixture."""
    ids = np.asarray(list(itertools.product(range(base_size), repeat=num_x)))

    def lifted(weights):
        w = np.asarray(weights, dtype=float)
        out = []
        for j in range(num_x):
            marg = np.bincount(ids[:, j], weights=w, minlength=base_size)
            out.append(psi(marg / marg.sum()))
        return tuple(out)

    return lifted
