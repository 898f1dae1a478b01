"""Empirical risk minimisation, the Aggregating Algorithm and rate experiments."""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np
from scipy import stats
from scipy.special import logsumexp

from .core import (
    DecisionProblem,
    FiniteSupport,
    Loss,
    Mixture,
    Model,
    PredictorMixture,
    Sampler,
    argmin_lowest,
    best_predictor,
    hull_grid,
    mix_loss_values,
    risk,
    risks,
    rng_for,
)
from .errors import AllInfiniteEmpiricalRisk, EmbeddingMissing, SubstitutionOutsideDecisionSet


@dataclass(frozen=True)
class Sample:
    """Observed outcomes and the stream they were drawn from."""

    outcomes: tuple
    seed: int | None = None
    source: Any = None

    @classmethod
    def draw(cls, P, n: int, seed: int, index: int = 0) -> "Sample":
        outs = P.sample(n, seed, index)
        return cls(tuple(outs.tolist() if isinstance(outs, np.ndarray) else outs), seed, index)

    def __len__(self) -> int:
        return len(self.outcomes)


def _quadratic_coefs(loss: Loss, model: Model) -> np.ndarray | None:
    if loss.quadratic is None:
        return None
    try:
        return np.array([loss.quadratic(a) for a in model.predictors], dtype=float)
    except (TypeError, ValueError):
        return None


def _rowwise_argmin(emp: np.ndarray) -> np.ndarray:
    m = emp.min(axis=1, keepdims=True)
    tol = 1e-12 * np.maximum(1.0, np.abs(np.where(np.isfinite(m), m, 0.0)))
    return np.argmax(emp <= m + tol, axis=1)


def erm(sample: Sample, model: Model, loss: Loss) -> int:
    """Empirical risk minimiser over the model, ties broken by lowest id."""
    outs = sample.outcomes
    if len(outs) == 0:
        raise ValueError("empty sample")
    coefs = _quadratic_coefs(loss, model)
    if coefs is not None:
        z = np.asarray(outs, dtype=float)
        emp = coefs @ np.array([np.mean(z * z), np.mean(z), 1.0])
    else:
        uniq, counts = [], []
        index = {}
        for o in outs:
            if o not in index:
                index[o] = len(uniq)
                uniq.append(o)
                counts.append(0)
            counts[index[o]] += 1
        L = loss.matrix(model.predictors, uniq)
        c = np.asarray(counts, dtype=float)
        emp = np.where(np.isposinf(L).any(axis=1), np.inf, np.where(np.isposinf(L), 0, L) @ c / len(outs))
    if not np.isfinite(emp).any():
        raise AllInfiniteEmpiricalRisk("every predictor has infinite empirical risk")
    return argmin_lowest(emp)


# ------------------------------------------------------------- substitutions


@dataclass(frozen=True)
class Substitution:
    """Maps a weight vector over the model to a playable decision."""

    kind: str
    fn: Callable[[np.ndarray], Any]
    model: Model

    def __call__(self, weights) -> Any:
        w = np.asarray(weights.weights if isinstance(weights, PredictorMixture) else weights, dtype=float)
        top = int(np.argmax(w))
        if w[top] >= 1.0 - 1e-15:
            return self.model.predictors[top]
        return self.fn(w)


def substitution(
    kind: str,
    model: Model,
    loss: Loss | None = None,
    eta: float | None = None,
    outcomes: Sequence | None = None,
    decisions: Model | None = None,
    resolution: int = 1001,
) -> Substitution:
    """Build a substitution function.

    ``"mean"`` averages the embedding, ``"logloss-mean"`` plays the mixture
    density, and ``"grid-minimax"`` picks the candidate decision minimising
    ``max_z loss(d, z) - mix_loss(z)`` over a finite outcome space.
    """
    kind = kind.lower()
    if kind == "mean":
        if model.embedding is None:
            raise EmbeddingMissing("mean substitution needs an embedding")
        return Substitution(kind, model.mean_action, model)
    if kind == "logloss-mean":
        return Substitution(kind, lambda w: Mixture(tuple(float(x) for x in w), model.predictors), model)
    if kind == "grid-minimax":
        if loss is None or eta is None or outcomes is None:
            raise ValueError("grid-minimax needs a loss, eta and a finite outcome space")
        if decisions is None:
            decisions = hull_grid(model, resolution) if model.embedding is not None else model
        C = loss.matrix(decisions.predictors, list(outcomes))
        L = loss.matrix(model.predictors, list(outcomes))

        def fn(w):
            m = mix_loss_values(np.asarray(w)[:, None], L, eta, axis=0)
            return decisions.predictors[argmin_lowest((C - m[None, :]).max(axis=1))]

        return Substitution(kind, fn, model)
    raise ValueError(f"unknown substitution {kind!r}")


# ------------------------------------------------------- aggregating algorithm


@dataclass
class AARun:
    """Trajectory of one run of the Aggregating Algorithm."""

    eta: float
    weights: np.ndarray  # (n + 1, N); row t is the mixture after t rounds
    predictions: list
    losses: np.ndarray  # learner loss per round
    mix_losses: np.ndarray
    expert_losses: np.ndarray  # (N, n)
    prior: np.ndarray

    @property
    def weights_trajectory(self) -> list[PredictorMixture]:
        return [PredictorMixture(row / row.sum()) for row in self.weights]

    @property
    def cumulative_loss(self) -> float:
        return float(math.fsum(self.losses))

    @property
    def cumulative_mix_loss(self) -> float:
        return float(math.fsum(self.mix_losses))

    @property
    def expert_cumulative(self) -> np.ndarray:
        return self.expert_losses.sum(axis=1)

    def regret(self) -> float:
        return self.cumulative_loss - float(self.expert_cumulative.min())

    def mix_regret(self) -> float:
        return self.cumulative_mix_loss - float(self.expert_cumulative.min())


def aggregating_algorithm(
    stream: Sample | Sequence,
    model: Model,
    loss: Loss,
    eta: float,
    substitution: Callable[[np.ndarray], Any],
    prior: PredictorMixture | None = None,
    problem: DecisionProblem | None = None,
) -> AARun:
    """Run the Aggregating Algorithm on a stream of outcomes.

    Round t plays ``substitution(weights[t-1])`` and then multiplies each
    weight by ``exp(-eta * loss)``.  Decisions outside ``problem``'s decision
    set raise :class:`SubstitutionOutsideDecisionSet`.
    """
    if eta <= 0:
        raise ValueError("eta must be positive")
    outs = list(stream.outcomes if isinstance(stream, Sample) else stream)
    N = len(model)
    pi0 = PredictorMixture.uniform(N).weights if prior is None else np.asarray(prior.weights)
    L = loss.matrix(model.predictors, outs) if outs else np.zeros((N, 0))
    with np.errstate(divide="ignore"):
        logw = np.log(pi0)
    # log weights after t rounds, normalised row by row
    cum = np.concatenate([np.zeros((N, 1)), np.cumsum(np.where(np.isposinf(L), np.inf, L), axis=1)], axis=1)
    logW = logw[None, :] - eta * cum.T
    logW = np.where(np.isnan(logW), -np.inf, logW)
    norms = logsumexp(logW, axis=1, keepdims=True)
    W = np.exp(logW - norms)
    for t in range(1, W.shape[0]):
        if not np.isfinite(norms[t, 0]):
            W[t] = W[t - 1]
    n = len(outs)
    mix = np.empty(n)
    preds, learner = [], np.empty(n)
    for t in range(n):
        mix[t] = mix_loss_values(W[t], L[:, t], eta)
        a = substitution(W[t])
        if problem is not None and not problem.allows(a):
            raise SubstitutionOutsideDecisionSet(f"round {t}: decision {a!r} is not playable")
        preds.append(a)
        learner[t] = loss(a, outs[t])
    run = AARun(eta, W, preds, learner, mix, L, pi0)
    # telescoping: total mix loss = -(1/eta) log sum_f pi0_f exp(-eta L_f)
    if n:
        best = float(np.min(cum[:, -1] - np.where(pi0 > 0, np.log(np.where(pi0 > 0, pi0, 1)), -np.inf) / eta))
        total = run.cumulative_mix_loss
        if math.isfinite(best) and total > best + 1e-9 * max(1.0, abs(best)):
            raise AssertionError(f"mix loss {total} exceeds {best}")
    return run


# ------------------------------------------------------------ online to batch


@dataclass(frozen=True)
class BatchEstimator:
    """Estimator built from an online run.

    ``mode="uniform"`` plays the decision of a uniformly chosen round;
    ``mode="average"`` plays the average of the decisions.
    """

    mode: str
    decisions: tuple
    action: Any = None

    def expected_risk(self, P, loss: Loss) -> float:
        if self.mode == "average":
            return risk(P, self.action, loss)
        return float(np.mean([risk(P, a, loss) for a in self.decisions]))

    def sample(self, rng: np.random.Generator):
        if self.mode == "average":
            return self.action
        return self.decisions[int(rng.integers(len(self.decisions)))]


def online_to_batch(run: AARun, mode: str = "uniform") -> BatchEstimator:
    decisions = tuple(run.predictions)
    if mode == "uniform":
        return BatchEstimator("uniform", decisions)
    if mode != "average":
        raise ValueError(f"unknown mode {mode!r}")
    try:
        arr = np.asarray(decisions, dtype=float)
    except (TypeError, ValueError):
        raise EmbeddingMissing("averaging needs decisions that are real vectors") from None
    mean = arr.mean(axis=0)
    action = float(mean) if mean.ndim == 0 else tuple(mean.tolist())
    return BatchEstimator("average", decisions, action)


@dataclass(frozen=True)
class ExpectedRegret:
    expected_regret: float
    expected_mix_regret: float
    eps: float
    bound: float
    n: int


def expected_regret_exact(
    problem: DecisionProblem,
    schedule: Sequence[int],
    eta: float,
    psi: Callable[[np.ndarray], Any],
    prior: PredictorMixture | None = None,
) -> ExpectedRegret:
    """Expected regret of the Aggregating Algorithm by enumerating outcome sequences.

    Round t draws from ``problem.p_family[schedule[t]]``, which must have
    finite support.  ``eps`` is the largest excess of the round's expected
    loss over its expected mix loss at any reachable state, and ``bound`` is
    ``log(1/prior) / eta + n * eps`` for the best expert.
    """
    model, loss = problem.model, problem.loss
    laws = [problem.p_family[k] for k in schedule]
    if not all(isinstance(P, FiniteSupport) for P in laws):
        raise ValueError("exact enumeration needs finite-support laws")
    N = len(model)
    pi0 = PredictorMixture.uniform(N).weights if prior is None else np.asarray(prior.weights)
    tables = [(P.positive(), loss.matrix(model.predictors, P.positive()[0])) for P in laws]
    totals = {"learner": 0.0, "mix": 0.0, "eps": -math.inf}

    def visit(t, logw, prob):
        if t == len(laws):
            return
        (outs, p), L = tables[t]
        w = np.exp(logw - logsumexp(logw))
        a = psi(w)
        la = np.array([loss(a, z) for z in outs])
        m = mix_loss_values(w[:, None], L, eta, axis=0)
        exp_learner, exp_mix = float(p @ la), float(p @ m)
        totals["learner"] += prob * exp_learner
        totals["mix"] += prob * exp_mix
        totals["eps"] = max(totals["eps"], exp_learner - exp_mix)
        for j in range(len(outs)):
            visit(t + 1, logw - eta * L[:, j], prob * p[j])

    with np.errstate(divide="ignore"):
        visit(0, np.log(pi0), 1.0)
    expert = np.zeros(N)
    for (outs, p), L in tables:
        expert += L @ p
    best = int(np.argmin(expert - np.log(np.where(pi0 > 0, pi0, 1e-300)) / eta))
    n = len(laws)
    return ExpectedRegret(
        totals["learner"] - float(expert.min()),
        totals["mix"] - float(expert.min()),
        totals["eps"],
        float(expert[best] - expert.min() - math.log(pi0[best]) / eta + n * max(totals["eps"], 0.0)),
        n,
    )


# ------------------------------------------------------------ rate experiments


@dataclass(frozen=True)
class ERM:
    name: str = "erm"


@dataclass(frozen=True)
class AAOnlineToBatch:
    eta: float
    substitution: str = "mean"
    mode: str = "uniform"
    resolution: int = 1001
    name: str = "aa-otb"


@dataclass
class RateCurve:
    """Worst-case mean excess risk against sample size."""

    ns: list
    excess: list
    stderr: list
    slope: float
    slope_ci: tuple
    learner: str = ""
    problem: str = ""
    seed: int = 0
    worst_p: list = field(default_factory=list)

    def to_csv(self, fh=None) -> str:
        """Write ``n, excess, stderr, learner, problem, seed`` rows; returns the text."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "excess", "stderr", "learner", "problem", "seed"])
        for n, e, s in zip(self.ns, self.excess, self.stderr):
            w.writerow([int(n), format(float(e), ".17g"), format(float(s), ".17g"), self.learner, self.problem, int(self.seed)])
        text = buf.getvalue()
        if fh is not None:
            fh.write(text)
        return text

    def summary(self) -> dict:
        return {
            "problem": self.problem,
            "learner": self.learner,
            "seed": int(self.seed),
            "ns": [int(n) for n in self.ns],
            "excess": [float(e) for e in self.excess],
            "stderr": [float(s) for s in self.stderr],
            "slope": None if math.isnan(self.slope) else float(self.slope),
            "slope_ci": [None if math.isnan(x) else float(x) for x in self.slope_ci],
        }


def fit_slope(ns: Sequence[int], excess: Sequence[float]) -> tuple[float, tuple]:
    """Least-squares slope of log excess on log n, with a 95% interval."""
    ns = np.asarray(ns, dtype=float)
    ex = np.asarray(excess, dtype=float)
    keep = ex > 0
    if keep.sum() < 2:
        return math.nan, (math.nan, math.nan)
    fit = stats.linregress(np.log(ns[keep]), np.log(ex[keep]))
    dof = int(keep.sum()) - 2
    if dof < 1:
        return float(fit.slope), (math.nan, math.nan)
    q = stats.t.ppf(0.975, dof) * fit.stderr
    return float(fit.slope), (float(fit.slope - q), float(fit.slope + q))


def _erm_excess(problem: DecisionProblem, P, n: int, reps: int, rng: np.random.Generator) -> np.ndarray:
    model, loss = problem.model, problem.loss
    R = risks(P, model, loss)
    rstar = R.min()
    coefs = _quadratic_coefs(loss, model)
    if isinstance(P, FiniteSupport):
        counts = rng.multinomial(n, P.probs, size=reps).astype(float)
        L = loss.matrix(model.predictors, P.outcomes)
        finite = np.where(np.isposinf(L), 0.0, L)
        emp = counts @ finite.T / n
        hit_inf = (counts @ np.isposinf(L).T.astype(float)) > 0
        emp = np.where(hit_inf, np.inf, emp)
        return R[_rowwise_argmin(emp)] - rstar
    if coefs is not None:
        out = np.empty(reps)
        block = max(1, 2_000_000 // max(n, 1))
        for s in range(0, reps, block):
            r = min(block, reps - s)
            z = P.draw(rng, r * n).reshape(r, n)
            mom = np.stack([np.mean(z * z, axis=1), z.mean(axis=1), np.ones(r)], axis=1)
            out[s : s + r] = R[_rowwise_argmin(mom @ coefs.T)] - rstar
        return out
    out = np.empty(reps)
    for r in range(reps):
        z = P.draw(rng, n)
        out[r] = R[erm(Sample(tuple(np.asarray(z).tolist())), model, loss)] - rstar
    return out


def _aa_excess(problem: DecisionProblem, P, n: int, reps: int, rng, learner: AAOnlineToBatch) -> np.ndarray:
    model, loss = problem.model, problem.loss
    _, rstar = best_predictor(P, model, loss)
    decisions = problem.decisions(learner.resolution) if learner.substitution == "grid-minimax" else None
    psi = substitution(learner.substitution, model, loss, learner.eta, problem.outcome_space(), decisions)
    out = np.empty(reps)
    for r in range(reps):
        z = P.draw(rng, n) if isinstance(P, Sampler) else [P.outcomes[i] for i in rng.choice(len(P.probs), size=n, p=P.probs)]
        stream = list(np.asarray(z).tolist()) if isinstance(P, Sampler) else z
        run = aggregating_algorithm(stream, model, loss, learner.eta, psi, problem=problem)
        out[r] = online_to_batch(run, learner.mode).expected_risk(P, loss) - rstar
    return out


def rate_experiment(
    problem: DecisionProblem,
    learner: ERM | AAOnlineToBatch | str = "erm",
    ns: Sequence[int] = (64, 128, 256, 512, 1024, 2048, 4096),
    reps: int = 2000,
    seed: int = 0,
    workers: int | None = None,
) -> RateCurve:
    """Mean excess risk over ``reps`` samples for each n, worst case over the family.

    Each (law, n) cell uses its own ``(seed, law, n)`` stream, so results do
    not depend on ``workers``.
    """
    if learner == "erm":
        learner = ERM()
    ns = [int(n) for n in ns]
    if any(b <= a for a, b in zip(ns, ns[1:])):
        raise ValueError("ns must be strictly increasing")
    cells = [(k, j) for k in range(len(problem.p_family)) for j in range(len(ns))]

    def run(cell):
        k, j = cell
        rng = rng_for(seed, k, ns[j])
        P = problem.p_family[k]
        if isinstance(learner, ERM):
            ex = _erm_excess(problem, P, ns[j], reps, rng)
        else:
            ex = _aa_excess(problem, P, ns[j], reps, rng, learner)
        return float(ex.mean()), float(ex.std(ddof=1) / math.sqrt(reps)) if reps > 1 else 0.0

    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(run, cells))
    else:
        results = [run(c) for c in cells]
    means = np.full((len(problem.p_family), len(ns)), -np.inf)
    errs = np.zeros_like(means)
    for (k, j), (m, s) in zip(cells, results):
        means[k, j], errs[k, j] = m, s
    worst = means.argmax(axis=0)
    excess = [float(means[worst[j], j]) for j in range(len(ns))]
    stderr = [float(errs[worst[j], j]) for j in range(len(ns))]
    slope, ci = fit_slope(ns, excess)
    return RateCurve(ns, excess, stderr, slope, ci, learner.name, problem.name, seed, [int(w) for w in worst])
