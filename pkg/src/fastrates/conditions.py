"""Numeric checkers for fast-rate conditions.

Each checker evaluates a defining inequality over a finite test family of
mixtures, distributions and decisions.  A refutation comes with an exact
witness; a pass only means no violation was found on the tested family.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import logsumexp

from .core import (
    CONVEX_HULL,
    EXACT_TOL,
    Z95,
    DecisionProblem,
    Model,
    PredictorMixture,
    Sampler,
    argmin_lowest,
    best_predictor,
    excess_loss_moments,
    outcome_table,
    rng_for,
    risks,
)
from .errors import (
    EmbeddingMissing,
    GammaShapeViolation,
    InfiniteMoment,
    ShapeViolation,
    UnsupportedKind,
)
from .momentbounds import kappa


class ConditionKind(str, enum.Enum):
    CENTRAL = "central"
    PPC = "ppc"
    PREDICTOR = "predictor"
    STOCH_MIX = "stochmix"
    STOCH_EXP_CONCAVE = "stochexpconcave"
    CLASSICAL_MIX = "classicalmix"
    JRT2 = "jrt2"


class Verdict(str, enum.Enum):
    HOLDS = "Holds"
    REFUTED = "RefutedOnTestedFamily"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class SearchFamily:
    """Finite stand-ins for the quantifiers over mixtures and decisions.

    Mixtures: the vertices, two-point mixtures on a lambda grid that is dense
    near 0 and near 1, and seeded Dirichlet draws.  Decisions: the decision
    set's grid at ``decision_grid`` points, refined by a scalar minimiser when
    the decisions lie on a line.
    """

    vertex_mixtures: bool = True
    pair_grid: int = 25
    dirichlet_draws: int = 32
    seed: int = 0
    decision_grid: int = 201
    refine: bool = True
    max_refined: int = 4096
    mc_size: int = 20000
    max_all_pairs: int = 24

    def __post_init__(self):
        if not (self.vertex_mixtures or self.pair_grid > 0 or self.dirichlet_draws > 0):
            raise ValueError("at least one mixture family must be enabled")
        if self.decision_grid < 2:
            raise ValueError("decision_grid must have at least two points")

    def lambdas(self) -> np.ndarray:
        if self.pair_grid <= 0:
            return np.empty(0)
        lam = np.union1d(np.geomspace(1e-6, 0.5, self.pair_grid), np.linspace(0, 1, self.pair_grid + 1)[1:-1])
        return np.union1d(lam, 1 - lam[lam < 0.5])

    def mixtures(self, n: int, anchors: Sequence[int] | None = None) -> np.ndarray:
        """Test mixtures over ``n`` predictors, one per row.

        Two-point mixtures use the given anchors, or all pairs for small ``n``
        (neighbouring ids plus pairs with the two end ids otherwise).
        """
        rows = []
        if self.vertex_mixtures or n == 1:
            rows.append(np.eye(n))
        lam = self.lambdas()
        if n > 1 and lam.size:
            if anchors is not None:
                pairs = {(a, f) for a in anchors for f in range(n) if f != a}
            elif n <= self.max_all_pairs:
                pairs = {(i, j) for i in range(n) for j in range(i + 1, n)}
            else:
                pairs = {(i, i + 1) for i in range(n - 1)}
                pairs |= {(0, j) for j in range(1, n)} | {(j, n - 1) for j in range(n - 1)}
            for i, j in sorted(pairs):
                block = np.zeros((lam.size, n))
                block[:, i] = 1 - lam
                block[:, j] = lam
                rows.append(block)
        if self.dirichlet_draws > 0 and n > 1:
            rows.append(rng_for(self.seed, 7919, n).dirichlet(np.ones(n), size=self.dirichlet_draws))
        return np.vstack(rows)


@dataclass
class Witness:
    p_index: int
    pi: np.ndarray
    f: Any

    def to_dict(self) -> dict:
        return {"p_index": int(self.p_index), "pi": [float(x) for x in self.pi], "f": _jsonable(self.f)}

    def __repr__(self) -> str:
        support = {int(i): round(float(self.pi[i]), 6) for i in np.flatnonzero(np.asarray(self.pi) > 0)}
        return f"Witness(p_index={self.p_index}, pi={support}, f={self.f!r})"


@dataclass
class ConditionReport:
    """Outcome of a condition check.

    ``worst_margin`` is the largest value of left side minus right side over
    the tested family, so a positive margin beyond the tolerance refutes.
    """

    kind: str
    eta: float
    eps: float
    verdict: Verdict
    worst_margin: float
    witness: Witness | None
    mc_ci: float | None = None
    infinite_moment: bool = False
    tested: int = 0
    implied: "ConditionReport | None" = None
    notes: dict = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return self.verdict is Verdict.HOLDS

    def to_dict(self) -> dict:
        out = {
            "kind": str(self.kind.value if isinstance(self.kind, enum.Enum) else self.kind),
            "eta": float(self.eta),
            "eps": float(self.eps),
            "verdict": self.verdict.value,
            "worst_margin": _json_float(self.worst_margin),
            "witness": None if self.witness is None else self.witness.to_dict(),
            "ci": None if self.mc_ci is None else float(self.mc_ci),
        }
        if self.infinite_moment:
            out["infinite_moment"] = True
        return out


def _json_float(x: float):
    x = float(x)
    if math.isfinite(x):
        return x
    return "inf" if x > 0 else "-inf"


def _jsonable(a):
    if isinstance(a, (np.integer,)):
        return int(a)
    if isinstance(a, (float, int, np.floating)):
        return _json_float(a)
    if isinstance(a, (tuple, list, np.ndarray)):
        return [_jsonable(v) for v in a]
    return repr(a)


def _verdict(margins: np.ndarray, cis: np.ndarray, tol: float) -> tuple[Verdict, int]:
    """Verdict and index of the witnessing cell."""
    margins = np.asarray(margins, dtype=float)
    cis = np.asarray(cis, dtype=float)
    low = np.where(np.isposinf(margins), np.inf, margins - cis)
    if (low > tol).any():
        return Verdict.REFUTED, int(np.argmax(low))
    high = margins + cis
    i = int(np.argmax(margins))
    if (high <= tol).all():
        return Verdict.HOLDS, i
    return Verdict.INCONCLUSIVE, int(np.argmax(high))


# ------------------------------------------------------------------ tables


@dataclass
class _Table:
    outcomes: Sequence
    weights: np.ndarray
    exact: bool
    L: np.ndarray  # model losses, one row per predictor
    fstar: int

    @property
    def logw(self) -> np.ndarray:
        return np.log(self.weights)

    def expect(self, values: np.ndarray) -> np.ndarray:
        """Expectation along the last axis, with inf on positive mass giving inf."""
        values = np.asarray(values, dtype=float)
        bad = np.isposinf(values).any(axis=-1)
        out = np.where(np.isposinf(values), 0.0, values) @ self.weights
        return np.where(bad, np.inf, out)

    def ci(self, values: np.ndarray) -> float:
        if self.exact:
            return 0.0
        values = np.asarray(values, dtype=float)
        if not np.isfinite(values).all():
            return math.inf
        return Z95 * float(np.std(values, ddof=1)) / math.sqrt(len(values))


def _tables(problem: DecisionProblem, search: SearchFamily, pointwise: bool = False) -> list[_Table]:
    loss, model = problem.loss, problem.model
    if pointwise:
        outcomes = problem.outcome_space()
        if outcomes is None:
            raise UnsupportedKind("pointwise checks need finite outcome spaces")
        out = []
        for z in outcomes:
            L = loss.matrix(model.predictors, [z])
            out.append(_Table([z], np.ones(1), True, L, argmin_lowest(L[:, 0])))
        return out
    out = []
    for k, P in enumerate(problem.p_family):
        outs, w, exact = outcome_table(P, search.mc_size, search.seed, k)
        L = loss.matrix(model.predictors, outs)
        fstar, _ = best_predictor(P, model, loss, search.mc_size, search.seed)
        out.append(_Table(outs, w, exact, L, fstar))
    return out


def _mix_rows(M: np.ndarray, L: np.ndarray, eta: float, chunk: int = 256):
    """Yield ``(start, mix)`` where ``mix[r, z]`` is the mix loss of row ``start + r``."""
    with np.errstate(divide="ignore"):
        logM = np.log(M)
    size = max(1, int(chunk * 2000 / max(L.shape[1], 1) / max(L.shape[0], 1)))
    for s in range(0, M.shape[0], size):
        a = -eta * L[None, :, :] + logM[s : s + size, :, None]
        a = np.where(np.isnan(a), -np.inf, a)
        yield s, -logsumexp(a, axis=1) / eta


def _mix_means(M: np.ndarray, t: _Table, eta: float) -> tuple[np.ndarray, np.ndarray | None]:
    """Expected mix loss for each mixture row, plus per-outcome values for MC tables."""
    means = np.empty(M.shape[0])
    keep = None if t.exact else np.empty((M.shape[0], len(t.weights)))
    for s, mix in _mix_rows(M, t.L, eta):
        means[s : s + mix.shape[0]] = t.expect(mix)
        if keep is not None:
            keep[s : s + mix.shape[0]] = mix
    return means, keep


def _dominant(pi: np.ndarray, exclude: int | None) -> int:
    w = np.array(pi, dtype=float)
    if exclude is not None and (w > 0).sum() > 1:
        w[exclude] = -1
    return int(np.argmax(w))


# ------------------------------------------------------------ check_condition


def check_condition(
    problem: DecisionProblem,
    kind: ConditionKind | str,
    eta: float,
    eps: float = 0.0,
    search: SearchFamily | None = None,
    tol: float = EXACT_TOL,
) -> ConditionReport:
    """Evaluate a condition at ``(eta, eps)`` on the search family."""
    if eta <= 0:
        raise ValueError("eta must be positive")
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    kind = ConditionKind(kind)
    search = search or SearchFamily()
    if kind is ConditionKind.CENTRAL:
        return _check_central(problem, eta, eps, search, tol)
    if kind is ConditionKind.PPC:
        return _check_ppc(problem, eta, eps, search, tol)
    if kind is ConditionKind.JRT2:
        raise UnsupportedKind("use check_jrt2, which needs the pairwise bound function")
    return _check_exists(problem, kind, eta, eps, search, tol)


def _central_exact(P, model: Model, loss, fstar: int, eta: float):
    if not (isinstance(P, Sampler) and loss.quadratic is not None and P.cgf is not None and P.second_moment is not None):
        return None
    vals = np.empty(len(model))
    for i, a in enumerate(model.predictors):
        mom = excess_loss_moments(P, a, model.predictors[fstar], loss)
        if not mom.exact:
            return None
        c = mom.cgf(eta)
        with np.errstate(over="ignore"):
            vals[i] = np.expm1(c)
    return vals


def _check_central(problem, eta, eps, search, tol) -> ConditionReport:
    model, loss = problem.model, problem.loss
    n = len(model)
    margins, cis, cells, mats = [], [], [], []
    infinite = False
    # work with E exp(...) - 1 so that margins stay accurate for tiny eta
    rhs = math.expm1(eta * eps) if eta * eps < 700 else math.inf
    for k, P in enumerate(problem.p_family):
        fstar, _ = best_predictor(P, model, loss, search.mc_size, search.seed)
        A = _central_exact(P, model, loss, fstar, eta)
        ci = np.zeros(n)
        if A is None:
            outs, w, exact = outcome_table(P, search.mc_size, search.seed, k)
            L = loss.matrix(model.predictors, outs)
            with np.errstate(invalid="ignore"):
                D = eta * (L[fstar][None, :] - L)
            D = np.where(np.isnan(D), -np.inf, D)
            A = np.expm1(D) @ w
            if not exact:
                ci = Z95 * np.exp(D).std(axis=1, ddof=1) / math.sqrt(len(w))
        infinite = infinite or bool(np.isposinf(A).any())
        M = search.mixtures(n, anchors=[fstar])
        with np.errstate(invalid="ignore"):
            vals = np.where(M > 0, M * A[None, :], 0.0).sum(axis=1)
            cvals = np.where(M > 0, M * ci[None, :], 0.0).sum(axis=1)
        margins.append(vals - rhs)
        cis.append(cvals)
        cells.extend((k, r, fstar) for r in range(M.shape[0]))
        mats.append(M)
    margins = np.concatenate(margins)
    cis = np.concatenate(cis)
    verdict, i = _verdict(margins, cis, tol)
    if verdict is Verdict.HOLDS:
        # on ties prefer a cell that actually tests some f other than the comparator
        tests_other = np.array([mats[k][r][f] < 1.0 for k, r, f in cells])
        near = (margins >= margins.max() - tol) & tests_other
        if near.any():
            i = int(np.flatnonzero(near)[np.argmax(margins[near])])
    k, r, fstar = cells[i]
    pi = mats[k][r]
    return ConditionReport(
        ConditionKind.CENTRAL,
        eta,
        eps,
        verdict,
        float(margins.max()),
        Witness(k, pi, _dominant(pi, fstar)),
        None if not cis.any() else float(cis[i]),
        infinite,
        len(margins),
    )


def _check_ppc(problem, eta, eps, search, tol) -> ConditionReport:
    tables = _tables(problem, search)
    n = len(problem.model)
    margins, cis, cells, mats = [], [], [], []
    for k, t in enumerate(tables):
        M = search.mixtures(n, anchors=[t.fstar])
        mats.append(M)
        star = t.L[t.fstar]
        em, per = _mix_means(M, t, eta)
        margins.append(float(t.expect(star)) - em - eps)
        if per is None:
            cis.append(np.zeros(M.shape[0]))
        else:
            cis.append(np.array([t.ci(star - row) for row in per]))
        cells.extend((k, r, t.fstar) for r in range(M.shape[0]))
    margins = np.concatenate(margins)
    cis = np.concatenate(cis)
    verdict, i = _verdict(margins, cis, tol)
    k, r, fstar = cells[i]
    pi = mats[k][r]
    mc = None if all(t.exact for t in tables) else float(cis[i])
    return ConditionReport(
        ConditionKind.PPC, eta, eps, verdict, float(margins.max()), Witness(k, pi, _dominant(pi, fstar)), mc, False, len(margins)
    )


def _check_exists(problem, kind, eta, eps, search, tol) -> ConditionReport:
    pointwise = kind is ConditionKind.CLASSICAL_MIX
    tables = _tables(problem, search, pointwise=pointwise)
    model, loss = problem.model, problem.loss
    M = search.mixtures(len(model))
    R = M.shape[0]
    exp_ce = kind is ConditionKind.STOCH_EXP_CONCAVE
    if exp_ce:
        if model.embedding is None:
            raise EmbeddingMissing("exp-concavity uses the mean of the mixture")
        D = Model(tuple(model.mean_action(row) for row in M))
    else:
        D = problem.decisions(search.decision_grid)
    predictor = kind is ConditionKind.PREDICTOR
    rhs = (math.exp(eta * eps) if eta * eps < 700 else math.inf) if predictor else eps

    # scores[k] has shape (R, |D|): left side for mixture r, decision d, law k
    scores = []
    for t in tables:
        LD = loss.matrix(D.predictors, t.outcomes)
        if predictor:
            scores.append(_predictor_scores(M, LD, t, eta))
        else:
            em, _ = _mix_means(M, t, eta)
            rd = t.expect(LD)
            if exp_ce:
                scores.append((rd - em)[:, None])
            else:
                scores.append(rd[None, :] - em[:, None])
    S = np.stack(scores)  # (K, R, |D|)
    worst_over_p = S.max(axis=0)
    if exp_ce:
        best_d = np.arange(R)
        best = worst_over_p[:, 0]
    else:
        best_d = np.array([argmin_lowest(row) for row in worst_over_p])
        best = worst_over_p[np.arange(R), best_d]
    actions = [D.predictors[d] for d in best_d]

    line = None if exp_ce else D.line()
    continuous = problem.decision_set == CONVEX_HULL or (
        isinstance(problem.decision_set, str) and problem.decision_set.startswith("all-grid")
    )
    if search.refine and line is not None and continuous:
        best, actions = _refine_on_line(tables, loss, M, eta, predictor, D, line, best, best_d, actions, rhs, tol, search)

    margins = best - rhs
    cis = np.zeros(R)
    any_mc = not all(t.exact for t in tables)
    if any_mc:
        for r in range(R):
            cis[r] = _cell_ci(tables, loss, M[r], actions[r], eta, predictor)
    verdict, i = _verdict(margins, cis, tol)
    # the law attaining the max for the chosen decision of the witness mixture
    per_p = [_cell_value(t, loss, M[i], actions[i], eta, predictor) for t in tables]
    k = int(np.argmax(per_p))
    return ConditionReport(
        kind,
        eta,
        eps,
        verdict,
        float(margins.max()),
        Witness(k, M[i], actions[i]),
        float(cis[i]) if any_mc else None,
        bool(np.isposinf(margins).any()),
        R,
    )


def _refine_on_line(tables, loss, M, eta, predictor, D, line, best, best_d, actions, rhs, tol, search):
    """Improve the grid decision of every failing mixture when decisions lie on a line.

    Vectorised zoom passes around the grid minimiser, then a bounded scalar
    search for rows that still fail by a small amount.
    """
    origin, direction, coords = line
    candidates = np.array([r for r in np.argsort(-best) if best[r] - rhs > tol][: search.max_refined], dtype=int)
    if candidates.size == 0:
        return best, actions
    lo_all, hi_all = coords.min(), coords.max()
    sorted_c = np.sort(coords)
    gaps = np.diff(sorted_c)
    spacing = float(gaps[gaps > 1e-12 * max(hi_all - lo_all, 1.0)].max(initial=hi_all - lo_all))
    centre = coords[best_d[candidates]].astype(float)
    width = np.full(candidates.size, spacing)
    value = best[candidates].copy()
    G = 33
    offsets = np.linspace(-1.0, 1.0, G)

    def to_action(t):
        return D.action_from_vector(origin + t * direction)

    active = np.arange(candidates.size)
    for _ in range(8):
        ts = np.clip(centre[active, None] + width[active, None] * offsets[None, :], lo_all, hi_all)
        acts = [to_action(t) for t in ts.ravel()]
        vals = _row_scores(tables, loss, M, eta, predictor, np.repeat(candidates[active], G), acts).reshape(-1, G)
        j = vals.argmin(axis=1)
        pick = vals[np.arange(active.size), j]
        improved = pick < value[active]
        value[active] = np.where(improved, pick, value[active])
        centre[active] = np.where(improved, ts[np.arange(active.size), j], centre[active])
        width[active] *= 2.0 / (G - 1)
        active = active[value[active] - rhs > tol]
        if active.size == 0:
            break
    best = best.copy()
    for c, r in enumerate(candidates):
        if value[c] < best[r]:
            best[r] = value[c]
            actions[r] = to_action(centre[c])
    # a final scalar search for near-boundary rows the zoom could not settle
    objective = _make_objective(tables, loss, M, eta, predictor)
    near = [c for c in active if value[c] - rhs < 1e-6][:64]
    for c in near:
        r = candidates[c]
        t0 = centre[c]
        lo, hi = max(-2 * width[c], lo_all - t0), min(2 * width[c], hi_all - t0)
        if hi <= lo:
            continue
        # offsets from the centre, since the solver's tolerance is relative to |x|
        res = minimize_scalar(lambda u, r=r: objective(r, to_action(t0 + u)), bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-15})
        if res.fun < best[r]:
            best[r] = res.fun
            actions[r] = to_action(t0 + res.x)
    return best, actions


def _row_scores(tables, loss, M, eta, predictor, rows, acts) -> np.ndarray:
    """Left side of the condition for each (mixture row, decision) pair, worst law."""
    out = np.full(len(acts), -np.inf)
    uniq, inverse = np.unique(rows, return_inverse=True)
    for t in tables:
        LD = loss.matrix(acts, t.outcomes)
        if predictor:
            with np.errstate(divide="ignore"):
                logM = np.log(M[rows])
            val = np.empty(len(acts))
            step = max(1, 4_000_000 // max(1, t.L.size))
            for s in range(0, len(acts), step):
                a = eta * LD[s : s + step, None, :] - eta * t.L[None, :, :] + t.logw[None, None, :]
                a = np.where(np.isnan(a), np.inf, a)
                b = logsumexp(a, axis=2) + logM[s : s + step]
                b = np.where(np.isnan(b), -np.inf, b)
                with np.errstate(over="ignore"):
                    val[s : s + step] = np.exp(logsumexp(b, axis=1))
        else:
            em, _ = _mix_means(M[uniq], t, eta)
            val = t.expect(LD) - em[inverse]
        out = np.maximum(out, val)
    return out


def _predictor_scores(M, LD, t: _Table, eta) -> np.ndarray:
    # logE[d, g] = log E exp(eta (loss_d - loss_g))
    a = eta * LD[:, None, :] - eta * t.L[None, :, :] + t.logw[None, None, :]
    a = np.where(np.isnan(a), np.inf, a)  # inf - inf: decision infinite where g is infinite
    logE = logsumexp(a, axis=2)
    with np.errstate(divide="ignore"):
        logM = np.log(M)
    out = np.empty((M.shape[0], LD.shape[0]))
    step = max(1, 4_000_000 // max(1, LD.shape[0] * t.L.shape[0]))
    for s in range(0, M.shape[0], step):
        b = logE[None, :, :] + logM[s : s + step, None, :]
        b = np.where(np.isnan(b), -np.inf, b)
        with np.errstate(over="ignore"):
            out[s : s + step] = np.exp(logsumexp(b, axis=2))
    return out


def _cell_values(t: _Table, loss, pi, action, eta, predictor) -> np.ndarray:
    ld = loss.matrix([action], t.outcomes)[0]
    if predictor:
        with np.errstate(over="ignore", invalid="ignore"):
            v = np.exp(eta * (ld[None, :] - t.L))
        v = np.where(np.isnan(v), np.inf, v)
        return np.where(pi[:, None] > 0, pi[:, None] * v, 0.0).sum(axis=0)
    mix = next(_mix_rows(pi[None, :], t.L, eta))[1][0]
    return ld - mix


def _cell_value(t, loss, pi, action, eta, predictor) -> float:
    return float(t.expect(_cell_values(t, loss, pi, action, eta, predictor)))


def _cell_ci(tables, loss, pi, action, eta, predictor) -> float:
    vals = [_cell_value(t, loss, pi, action, eta, predictor) for t in tables]
    t = tables[int(np.argmax(vals))]
    return t.ci(_cell_values(t, loss, pi, action, eta, predictor))


def _make_objective(tables, loss, M, eta, predictor):
    cache = {}

    def objective(r, action) -> float:
        best = -math.inf
        for k, t in enumerate(tables):
            if not predictor:
                if (k, r) not in cache:
                    cache[k, r] = float(t.expect(next(_mix_rows(M[r][None, :], t.L, eta))[1][0]))
                val = float(t.expect(loss.matrix([action], t.outcomes)[0])) - cache[k, r]
            else:
                val = _cell_value(t, loss, M[r], action, eta, True)
            best = max(best, val)
        return best

    return objective


def substitution_margin(problem: DecisionProblem, psi: Callable, mixtures: np.ndarray, eta: float) -> float:
    """Largest ``risk(P, psi(pi)) - E_P mix_loss(pi)`` over laws and the given mixtures."""
    search = SearchFamily()
    tables = _tables(problem, search)
    worst = -math.inf
    for pi in np.atleast_2d(mixtures):
        action = psi(pi)
        for t in tables:
            worst = max(worst, _cell_value(t, problem.loss, pi, action, eta, False))
    return worst


# ------------------------------------------------------------------ max_eta


def max_eta(
    problem: DecisionProblem,
    kind: ConditionKind | str,
    eps: float = 0.0,
    tol: float = 1e-8,
    search: SearchFamily | None = None,
    cap: float = 1e6,
) -> float:
    """Largest eta at which the condition holds on the search family.

    Inconclusive checks count as failures.  Returns 0 when the condition fails
    at every tested eta down to ``tol`` and ``cap`` when it never fails.
    """
    search = search or SearchFamily()

    kind = ConditionKind(kind)

    def holds(eta):
        # central margins shrink like eta**2, so the tolerance must follow them
        tol_eta = EXACT_TOL * min(1.0, eta) ** 2 if kind is ConditionKind.CENTRAL else EXACT_TOL
        return check_condition(problem, kind, eta, eps, search, tol_eta).holds

    if holds(1.0):
        lo, hi = 1.0, 2.0
        while holds(hi):
            lo = hi
            if hi >= cap:
                return cap
            hi = min(2 * hi, cap)
    else:
        hi, lo = 1.0, None
        eta = 0.5
        while eta >= tol:
            if holds(eta):
                lo = eta
                break
            hi = eta
            eta /= 2
        if lo is None:
            return 0.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if holds(mid):
            lo = mid
        else:
            hi = mid
    return lo


# ------------------------------------------------------------- rate functions


@dataclass(frozen=True)
class VFunction:
    """A nonnegative function of the excess risk.

    Parametric form: ``min(max(coef * x**exponent, slope_floor * x), cap)``.
    Tabulated form: monotone piecewise-linear interpolation through ``table``.
    """

    coef: float = 1.0
    exponent: float = 0.0
    cap: float = math.inf
    slope_floor: float = 0.0
    table: tuple | None = None

    @classmethod
    def constant(cls, value: float) -> "VFunction":
        return cls(value, 0.0)

    @classmethod
    def power(cls, coef: float, exponent: float, cap: float = math.inf) -> "VFunction":
        return cls(coef, exponent, cap)

    @classmethod
    def tabulated(cls, xs: Sequence[float], ys: Sequence[float]) -> "VFunction":
        xs, ys = np.asarray(xs, dtype=float), np.asarray(ys, dtype=float)
        if (np.diff(xs) <= 0).any():
            raise ShapeViolation("table abscissae must increase")
        return cls(table=(tuple(xs), tuple(ys)))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.table is not None:
            out = np.interp(x, self.table[0], self.table[1])
        else:
            with np.errstate(divide="ignore", invalid="ignore"):
                base = self.coef * np.power(x, self.exponent) if self.exponent != 0 else np.full_like(x, self.coef)
            out = np.minimum(np.maximum(base, self.slope_floor * x), self.cap)
        return float(out) if out.ndim == 0 else out

    def sup(self, upto: float | None = None) -> float:
        """Supremum over ``(0, upto]``, or over all x > 0 when ``upto`` is None."""
        if self.table is not None:
            xs, ys = np.asarray(self.table[0]), np.asarray(self.table[1])
            if upto is None:
                return float(ys.max())
            return max(float(self(upto)), float(ys[xs <= upto].max(initial=0.0)))
        if upto is not None:
            return float(self(upto))
        if self.exponent > 0 or self.slope_floor > 0:
            return self.cap
        return min(self.coef, self.cap)

    def scaled_ratio(self, c: float) -> "VFunction":
        """The function ``x -> c * x / self(x)``."""
        if self.table is not None:
            xs, ys = np.asarray(self.table[0]), np.asarray(self.table[1])
            with np.errstate(divide="ignore"):
                return VFunction.tabulated(xs, np.where(ys > 0, c * xs / ys, np.inf))
        return VFunction(
            c / self.coef,
            1.0 - self.exponent,
            c / self.slope_floor if self.slope_floor > 0 else math.inf,
            c / self.cap if math.isfinite(self.cap) else 0.0,
        )

    def with_cap(self, b: float) -> "VFunction":
        if self.table is not None:
            return VFunction.tabulated(self.table[0], np.minimum(self.table[1], b))
        return VFunction(self.coef, self.exponent, min(self.cap, b), self.slope_floor)


SHAPE_GRID = np.geomspace(1e-8, 1e4, 241)


def _check_bernstein_shape(u: VFunction, grid=SHAPE_GRID):
    vals = u(grid)
    if (vals <= 0).any():
        raise ShapeViolation("u must be positive on x > 0")
    if (np.diff(vals) < -1e-12 * np.abs(vals[1:])).any():
        raise ShapeViolation("u must be nondecreasing")
    ratio = vals / grid
    if (np.diff(ratio) > 1e-12 * ratio[:-1]).any():
        raise ShapeViolation("u(x)/x must be nonincreasing")


def _check_v_shape(v: VFunction, grid=SHAPE_GRID):
    vals = v(grid)
    if (vals <= 0).any():
        raise ShapeViolation("v must be positive on x > 0")
    if (np.diff(vals) < -1e-12 * np.abs(vals[1:])).any():
        raise ShapeViolation("v must be nondecreasing")
    ratio = grid / vals
    if (np.diff(ratio) < -1e-12 * ratio[1:]).any():
        raise ShapeViolation("x/v(x) must be nondecreasing")


def bernstein_to_v(u: VFunction, a: float, b: float) -> VFunction:
    """Rate function implied by a generalized Bernstein bound for losses in [0, a].

    ``v(x) = min(x / (kappa(2 b a) u(x)), b)``.
    """
    _check_bernstein_shape(u)
    return u.scaled_ratio(1.0 / kappa(2 * b * a)).with_cap(b)


def v_to_bernstein(v: VFunction, a: float) -> VFunction:
    """Generalized Bernstein function implied by a rate function for losses in [0, a].

    ``u(x) = 6 x / (kappa(-2 b a) v(x))`` with ``b`` the supremum of v over the
    excess-risk range ``(0, a]``.
    """
    _check_v_shape(v)
    b = v.sup(upto=a)
    if not math.isfinite(b) or b <= 0:
        raise ShapeViolation("v must be bounded and positive on (0, a]")
    return v.scaled_ratio(6.0 / kappa(-2 * b * a))


def check_bernstein(
    problem: DecisionProblem,
    u: VFunction,
    moment: str = "variance",
    tol: float = EXACT_TOL,
    search: SearchFamily | None = None,
) -> ConditionReport:
    """Check ``Var(W_f) <= u(E W_f)`` for every law and predictor.

    ``moment="second"`` uses ``E W_f**2`` in place of the variance.
    """
    if moment not in ("variance", "second"):
        raise ValueError("moment must be 'variance' or 'second'")
    _check_bernstein_shape(u)
    search = search or SearchFamily()
    model, loss = problem.model, problem.loss
    margins, cis, cells = [], [], []
    for k, P in enumerate(problem.p_family):
        fstar, _ = best_predictor(P, model, loss, search.mc_size, search.seed)
        for i, a in enumerate(model.predictors):
            mom = excess_loss_moments(P, a, model.predictors[fstar], loss, search.mc_size, search.seed)
            lhs = mom.variance if moment == "variance" else mom.second_moment
            margins.append(lhs - float(u(max(mom.mean, 0.0))) if i != fstar else 0.0)
            cis.append(0.0 if mom.exact else mom.ci_halfwidth * (1 + abs(mom.mean)))
            cells.append((k, i))
    margins, cis = np.asarray(margins), np.asarray(cis)
    verdict, j = _verdict(margins, cis, tol)
    k, i = cells[j]
    pi = np.zeros(len(model))
    pi[i] = 1.0
    return ConditionReport(
        "bernstein", math.nan, 0.0, verdict, float(margins.max()), Witness(k, pi, i),
        float(cis[j]) if cis.any() else None, False, len(margins),
    )


# ---------------------------------------------------------------- probes


def _exp_moment_matrix(problem, P, eta, search, resolution) -> np.ndarray:
    """``E_P sum_g pi_g exp(eta(loss_d - loss_g))`` pieces: matrix over (decision, g)."""
    outs, w, _ = outcome_table(P, search.mc_size, search.seed)
    D = problem.decisions(resolution)
    LD = problem.loss.matrix(D.predictors, outs)
    L = problem.loss.matrix(problem.model.predictors, outs)
    a = eta * LD[:, None, :] - eta * L[None, :, :] + np.log(w)[None, None, :]
    a = np.where(np.isnan(a), np.inf, a)
    return np.exp(logsumexp(a, axis=2))


def minimax_gap(
    problem: DecisionProblem,
    pi: PredictorMixture,
    eta: float,
    resolution: int = 201,
    search: SearchFamily | None = None,
) -> tuple[float, float]:
    """``(max_P min_f S(P, f), min_f max_P S(P, f))`` over the grids.

    ``S(P, f) = E_P sum_g pi_g exp(eta (loss_f - loss_g))``.
    """
    search = search or SearchFamily()
    w = np.asarray(pi.weights)
    S = []
    for P in problem.p_family:
        E = _exp_moment_matrix(problem, P, eta, search, resolution)
        S.append(np.where(w[None, :] > 0, E * w[None, :], 0.0).sum(axis=1))
    S = np.asarray(S)
    supinf = float(S.min(axis=1).max())
    infsup = float(S.max(axis=0).min())
    if math.isinf(supinf):
        raise InfiniteMoment("every decision has an infinite exponential moment")
    return supinf, infsup


@dataclass(frozen=True)
class UniquenessWitness:
    f: int
    risk_gap: float
    variance: float


def uniqueness_probe(problem: DecisionProblem, P, eps: float, delta: float) -> UniquenessWitness | None:
    """A predictor other than the risk minimiser that is nearly as good but differs.

    Returns the first ``f`` with risk gap at most ``delta`` and excess-loss
    variance at least ``eps``, or None.
    """
    model, loss = problem.model, problem.loss
    fstar, rstar = best_predictor(P, model, loss)
    r = risks(P, model, loss)
    for i, a in enumerate(model.predictors):
        if i == fstar or r[i] - rstar > delta:
            continue
        mom = excess_loss_moments(P, a, model.predictors[fstar], loss)
        if mom.variance >= eps:
            return UniquenessWitness(i, float(r[i] - rstar), mom.variance)
    return None


def check_jrt2(
    problem: DecisionProblem,
    gamma: Callable[[Any, Any], float],
    eta: float,
    search: SearchFamily | None = None,
    tol: float = EXACT_TOL,
) -> ConditionReport:
    """Check ``E exp(eta (loss_f - loss_g)) <= gamma(f, g)`` for all pairs and laws.

    ``gamma`` receives actions.  It must equal 1 on the diagonal and be
    concave in its second argument, which is tested at midpoints of the
    embedding.  When the check passes, the stochastic exp-concavity check at
    the same eta is attached as ``report.implied``.
    """
    search = search or SearchFamily()
    model, loss = problem.model, problem.loss
    preds = model.predictors
    for f in preds:
        if abs(gamma(f, f) - 1.0) > tol:
            raise GammaShapeViolation(f"gamma(f, f) = {gamma(f, f)} != 1")
    if model.embedding is not None:
        emb = model.embedding
        n = len(preds)
        for f in preds:
            for i in range(n):
                for j in range(i + 1, n):
                    mid = model.action_from_vector(0.5 * (emb[i] + emb[j]))
                    if gamma(f, mid) < 0.5 * (gamma(f, preds[i]) + gamma(f, preds[j])) - tol:
                        raise GammaShapeViolation("gamma is not concave in its second argument")
    G = np.array([[gamma(f, g) for g in preds] for f in preds])
    margins, cells = [], []
    for k, P in enumerate(problem.p_family):
        outs, w, _ = outcome_table(P, search.mc_size, search.seed, k)
        L = loss.matrix(preds, outs)
        a = eta * L[:, None, :] - eta * L[None, :, :] + np.log(w)[None, None, :]
        a = np.where(np.isnan(a), np.inf, a)
        E = np.exp(logsumexp(a, axis=2))
        margins.append((E - G).ravel())
        cells.extend((k, f, g) for f in range(len(preds)) for g in range(len(preds)))
    margins = np.concatenate(margins)
    verdict, i = _verdict(margins, np.zeros_like(margins), tol)
    k, f, g = cells[i]
    pi = np.zeros(len(preds))
    pi[g] = 1.0
    report = ConditionReport(ConditionKind.JRT2, eta, 0.0, verdict, float(margins.max()), Witness(k, pi, f), None, False, len(margins))
    if verdict is Verdict.HOLDS and model.embedding is not None:
        report.implied = check_condition(problem, ConditionKind.STOCH_EXP_CONCAVE, eta, 0.0, search, tol)
    return report
