"""Command-line front end.

Each subcommand reads an optional JSON config (``--config``), lets scalar
flags override it, validates the merged settings against a schema and
writes a JSON document to stdout or ``--output``.  ``FASTRATES_SEED``
overrides any configured seed.

Exit codes: 0 success or Holds, 2 config error, 3 Refuted, 4 Inconclusive,
5 infeasible moment instance.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import jsonschema

from . import conditions, learners, momentbounds, problems, schemas, serialize
from .errors import ConfigError, FastRatesError, InfeasibleInstance

EXIT_OK, EXIT_CONFIG, EXIT_REFUTED, EXIT_INCONCLUSIVE, EXIT_INFEASIBLE = 0, 2, 3, 4, 5
VERDICT_EXIT = {
    conditions.Verdict.HOLDS: EXIT_OK,
    conditions.Verdict.REFUTED: EXIT_REFUTED,
    conditions.Verdict.INCONCLUSIVE: EXIT_INCONCLUSIVE,
}


def _json_safe(x):
    """Replace non-finite floats with strings so the output is strict JSON."""
    if isinstance(x, float) and not math.isfinite(x):
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    if isinstance(x, dict):
        return {k: _json_safe(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_json_safe(v) for v in x]
    return x


def _emit(command: str, doc: dict, settings: dict) -> None:
    doc = _json_safe(doc)
    jsonschema.validate(doc, schemas.OUTPUTS[command])
    text = json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"
    path = settings.get("output_path")
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _parse_param(item: str):
    if "=" not in item:
        raise ConfigError(f"--param expects key=value, got {item!r}")
    key, raw = item.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip(), value


def _settings(command: str, args: argparse.Namespace, scalar_flags: tuple) -> dict:
    settings: dict = {}
    if args.config:
        try:
            settings = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        if not isinstance(settings, dict):
            raise ConfigError("config must be a JSON object")
    for name in scalar_flags:
        value = getattr(args, name, None)
        if value is not None:
            settings[name] = value
    params = dict(settings.get("params", {})) if isinstance(settings.get("params", {}), dict) else settings.get("params")
    for item in getattr(args, "param", None) or []:
        k, v = _parse_param(item)
        params[k] = v
    for short in ("p", "delta") if hasattr(args, "param") else ():
        value = getattr(args, short, None)
        if value is not None:
            params[short] = value
    if params:
        settings["params"] = params
    env_seed = os.environ.get("FASTRATES_SEED")
    if env_seed is not None:
        try:
            settings["seed"] = int(env_seed)
        except ValueError:
            raise ConfigError(f"FASTRATES_SEED must be an integer, got {env_seed!r}") from None
    try:
        jsonschema.validate(settings, schemas.CONFIGS[command])
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"invalid config: {exc.message}") from None
    return settings


def _problem(settings: dict):
    name = settings.get("problem")
    if name is None:
        raise ConfigError("no problem given")
    params = settings.get("params", {})
    if name in problems.RECIPES:
        try:
            return problems.build(name, **params)
        except TypeError as exc:
            raise ConfigError(f"bad parameters for {name}: {exc}") from None
    path = Path(name)
    if not path.is_file():
        raise ConfigError(f"unknown problem {name!r}; recipes are {sorted(problems.RECIPES)}")
    if params:
        raise ConfigError("parameters apply only to named recipes")
    try:
        return serialize.loads(path.read_text(encoding="utf-8"))
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"bad problem file: {exc}") from None


def _search(settings: dict) -> conditions.SearchFamily:
    kw = {k: settings[k] for k in ("pair_grid", "dirichlet_draws", "decision_grid", "mc_size") if k in settings}
    return conditions.SearchFamily(seed=settings.get("seed", 0), **kw)


def _threads(settings: dict) -> int:
    t = settings.get("threads", 1)
    if t == "auto":
        return os.cpu_count() or 1
    return int(t)


# ----------------------------------------------------------------- commands


def cmd_check(args) -> int:
    s = _settings("check", args, ("problem", "kind", "eta", "eps", "seed", "output_path", "threads", *_SEARCH_FLAGS))
    for key in ("kind", "eta"):
        if key not in s:
            raise ConfigError(f"missing {key}")
    problem = _problem(s)
    report = conditions.check_condition(problem, s["kind"], s["eta"], s.get("eps", 0.0), _search(s))
    _emit("check", report.to_dict(), s)
    return VERDICT_EXIT[report.verdict]


def cmd_max_eta(args) -> int:
    s = _settings("max-eta", args, ("problem", "kind", "eps", "tol", "seed", "output_path", "threads", *_SEARCH_FLAGS))
    if "kind" not in s:
        raise ConfigError("missing kind")
    problem = _problem(s)
    eps, tol = s.get("eps", 0.0), s.get("tol", 1e-8)
    value = conditions.max_eta(problem, s["kind"], eps, tol, _search(s))
    _emit("max-eta", {"problem": problem.name, "kind": s["kind"], "eps": eps, "tol": tol, "eta_max": value}, s)
    return EXIT_OK


def cmd_bound(args) -> int:
    s = _settings("bound", args, ("kind", "V", "eta_star", "N", "delta", "n", "K", "C", "c", "v_coef", "v_exponent", "output_path"))
    kind = s.get("kind", "finite")
    needed = {"finite": ("V", "eta_star", "N", "delta", "n"), "vc": ("V", "eta_star", "K", "C", "delta", "n"),
              "intermediate": ("v_coef", "v_exponent", "N", "delta", "n", "c", "V")}[kind]
    missing = [k for k in needed if k not in s]
    if missing:
        raise ConfigError(f"missing {', '.join(missing)} for a {kind} bound")
    inputs = {k: s[k] for k in needed}
    doc = {"kind": kind, "inputs": inputs}
    if kind == "finite":
        doc["bound"] = momentbounds.finite_class_bound(s["V"], s["eta_star"], s["N"], s["delta"], s["n"])
    elif kind == "vc":
        doc["bound"] = momentbounds.vc_type_bound(s["V"], s["eta_star"], s["K"], s["C"], s["delta"], s["n"])
    else:
        v = conditions.VFunction.power(s["v_coef"], s["v_exponent"])
        b = momentbounds.intermediate_rate_bound(v, s["N"], s["delta"], s["n"], s["c"], s["V"])
        doc["bound"], doc["applicable"] = b, b is not None
    _emit("bound", doc, s)
    return EXIT_OK


def cmd_moment(args) -> int:
    s = _settings("moment", args, ("eta_star", "a_over_n", "V", "grid_size", "output_path"))
    eta, a, V = s.get("eta_star"), s.get("a_over_n"), s.get("V", 1.0)
    if eta is None or a is None:
        raise ConfigError("missing eta_star or a_over_n")
    grid = s.get("grid_size", 2001)
    inst = momentbounds.MomentProblemInstance(eta, a, V)
    try:
        feas = inst.feasibility
        if feas == momentbounds.Feasibility.INFEASIBLE:
            raise InfeasibleInstance(f"mean {-a} is outside the feasible range at eta {eta}")
        bound = inst.bound()
        oracle = momentbounds.moment_lp_oracle(inst, grid)
    except InfeasibleInstance as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    doc = {
        "eta_star": eta, "a_over_n": a, "V": V, "feasibility": feas.value,
        "bound": bound, "exp_bound": math.exp(bound), "oracle": oracle, "grid_size": grid,
    }
    if V == 1.0:
        cert = momentbounds.dual_certificate_for(eta)
        doc["certificate"] = {"d0": cert.d0, "d1": cert.d1, "d2": cert.d2, "objective": cert.objective(a)}
    _emit("moment", doc, s)
    return EXIT_OK


def cmd_rates(args) -> int:
    s = _settings("rates", args, ("problem", "learner", "eta", "substitution", "mode", "ns", "reps", "seed",
                                  "csv_path", "output_path", "threads"))
    problem = _problem(s)
    name = s.get("learner", "erm")
    if name == "erm":
        learner = learners.ERM()
    else:
        if "eta" not in s:
            raise ConfigError("aa-otb needs eta")
        learner = learners.AAOnlineToBatch(s["eta"], s.get("substitution", "mean"), s.get("mode", "uniform"))
    ns = s.get("ns", [64, 128, 256, 512, 1024, 2048, 4096])
    seed = s.get("seed", 0)
    curve = learners.rate_experiment(problem, learner, ns, s.get("reps", 2000), seed, _threads(s))
    csv_path = s.get("csv_path")
    if csv_path:
        with open(csv_path, "w", encoding="utf-8", newline="") as fh:
            curve.to_csv(fh)
    doc = curve.summary()
    doc["csv"] = csv_path
    _emit("rates", doc, s)
    return EXIT_OK


def cmd_aa_sim(args) -> int:
    s = _settings("aa-sim", args, ("problem", "eta", "substitution", "n", "p_index", "seed", "output_path", "threads"))
    if "eta" not in s:
        raise ConfigError("missing eta")
    problem = _problem(s)
    k, n, seed, eta = s.get("p_index", 0), s.get("n", 1000), s.get("seed", 0), s["eta"]
    if k >= len(problem.p_family):
        raise ConfigError(f"p_index {k} out of range")
    P = problem.p_family[k]
    kind = s.get("substitution", "mean")
    outcomes = problem.outcome_space()
    decisions = problem.decisions(1001) if kind == "grid-minimax" else None
    psi = learners.substitution(kind, problem.model, problem.loss, eta, outcomes, decisions)
    stream = learners.Sample.draw(P, n, seed, k)
    run = learners.aggregating_algorithm(stream, problem.model, problem.loss, eta, psi, problem=problem)
    best = float(run.expert_cumulative.min())
    doc = {
        "problem": problem.name, "eta": eta, "n": n, "seed": seed, "p_index": k, "substitution": kind,
        "cumulative_loss": run.cumulative_loss, "cumulative_mix_loss": run.cumulative_mix_loss,
        "best_expert_loss": best, "regret": run.regret(), "mix_regret": run.mix_regret(),
        "mix_regret_bound": math.log(len(problem.model)) / eta,
    }
    _emit("aa-sim", doc, s)
    return EXIT_OK


# ------------------------------------------------------------------ parser

_SEARCH_FLAGS = ("pair_grid", "dirichlet_draws", "decision_grid", "mc_size")


def _threads_arg(text: str):
    if text == "auto":
        return "auto"
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("threads must be a count or 'auto'") from None


def _common(p: argparse.ArgumentParser, problem: bool = True) -> None:
    p.add_argument("--config", help="JSON config file; flags override its scalar entries")
    p.add_argument("--output", dest="output_path", help="write the JSON document here instead of stdout")
    if problem:
        p.add_argument("problem", nargs="?", help="recipe name or path to a problem JSON file")
        p.add_argument("--param", action="append", metavar="KEY=VALUE", help="recipe parameter (JSON value)")
        p.add_argument("--p", type=float, help="recipe parameter p")
        p.add_argument("--delta", type=float, help="recipe parameter delta")
        p.add_argument("--seed", type=int)
        p.add_argument("--threads", type=_threads_arg)


def _search_args(p: argparse.ArgumentParser) -> None:
    for flag in _SEARCH_FLAGS:
        p.add_argument("--" + flag.replace("_", "-"), dest=flag, type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fastrates", description="Check fast-rate conditions and run experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    kinds = [k.value for k in conditions.ConditionKind if k.value != "jrt2"]

    p = sub.add_parser("check", help="check one condition at one eta")
    _common(p)
    _search_args(p)
    p.add_argument("--kind", choices=kinds)
    p.add_argument("--eta", type=float)
    p.add_argument("--eps", type=float)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("max-eta", help="largest eta at which a condition holds")
    _common(p)
    _search_args(p)
    p.add_argument("--kind", choices=kinds)
    p.add_argument("--eps", type=float)
    p.add_argument("--tol", type=float)
    p.set_defaults(func=cmd_max_eta)

    p = sub.add_parser("bound", help="high-probability excess risk bounds")
    _common(p, problem=False)
    p.add_argument("--kind", choices=["finite", "vc", "intermediate"])
    p.add_argument("--V", type=float)
    p.add_argument("--eta-star", dest="eta_star", type=float)
    p.add_argument("--N", type=int)
    p.add_argument("--delta", type=float)
    p.add_argument("--n", type=int)
    p.add_argument("--K", type=float)
    p.add_argument("--C", type=float)
    p.add_argument("--c", type=float)
    p.add_argument("--v-coef", dest="v_coef", type=float)
    p.add_argument("--v-exponent", dest="v_exponent", type=float)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("moment", help="exponential moment bound with oracle and certificate")
    _common(p, problem=False)
    p.add_argument("--eta-star", dest="eta_star", type=float)
    p.add_argument("--a-over-n", dest="a_over_n", type=float)
    p.add_argument("--V", type=float)
    p.add_argument("--grid-size", dest="grid_size", type=int)
    p.set_defaults(func=cmd_moment)

    p = sub.add_parser("rates", help="excess risk against sample size")
    _common(p)
    p.add_argument("--learner", choices=["erm", "aa-otb"])
    p.add_argument("--eta", type=float)
    p.add_argument("--substitution", choices=["mean", "logloss-mean", "grid-minimax"])
    p.add_argument("--mode", choices=["uniform", "average"])
    p.add_argument("--ns", type=lambda t: [int(x) for x in t.split(",")], help="comma-separated sample sizes")
    p.add_argument("--reps", type=int)
    p.add_argument("--csv", dest="csv_path")
    p.set_defaults(func=cmd_rates)

    p = sub.add_parser("aa-sim", help="one run of the Aggregating Algorithm")
    _common(p)
    p.add_argument("--eta", type=float)
    p.add_argument("--substitution", choices=["mean", "logloss-mean", "grid-minimax"])
    p.add_argument("--n", type=int)
    p.add_argument("--p-index", dest="p_index", type=int)
    p.set_defaults(func=cmd_aa_sim)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FastRatesError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
