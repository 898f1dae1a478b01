"""JSON schemas for command configurations and command outputs."""

NUMBER_OR_INF = {"oneOf": [{"type": "number"}, {"enum": ["inf", "-inf"]}]}
NULLABLE_NUMBER = {"type": ["number", "null"]}

REPORT = {
    "type": "object",
    "required": ["kind", "eta", "eps", "verdict", "worst_margin", "witness", "ci"],
    "additionalProperties": False,
    "properties": {
        "kind": {"type": "string"},
        "eta": {"type": "number"},
        "eps": {"type": "number"},
        "verdict": {"enum": ["Holds", "RefutedOnTestedFamily", "Inconclusive"]},
        "worst_margin": NUMBER_OR_INF,
        "witness": {
            "type": ["object", "null"],
            "required": ["p_index", "pi", "f"],
            "additionalProperties": False,
            "properties": {
                "p_index": {"type": "integer", "minimum": 0},
                "pi": {"type": "array", "items": {"type": "number"}},
                "f": {},
            },
        },
        "ci": NULLABLE_NUMBER,
        "infinite_moment": {"type": "boolean"},
    },
}

MAX_ETA = {
    "type": "object",
    "required": ["problem", "kind", "eps", "tol", "eta_max"],
    "additionalProperties": False,
    "properties": {
        "problem": {"type": "string"},
        "kind": {"type": "string"},
        "eps": {"type": "number"},
        "tol": {"type": "number"},
        "eta_max": {"type": "number", "minimum": 0},
    },
}

BOUND = {
    "type": "object",
    "required": ["kind", "inputs", "bound"],
    "additionalProperties": False,
    "properties": {
        "kind": {"enum": ["finite", "vc", "intermediate"]},
        "inputs": {"type": "object"},
        "bound": NULLABLE_NUMBER,
        "applicable": {"type": "boolean"},
    },
}

MOMENT = {
    "type": "object",
    "required": ["eta_star", "a_over_n", "V", "feasibility", "bound", "exp_bound", "oracle", "grid_size"],
    "additionalProperties": False,
    "properties": {
        "eta_star": {"type": "number"},
        "a_over_n": {"type": "number"},
        "V": {"type": "number"},
        "feasibility": {"enum": ["Interior", "Boundary"]},
        "bound": {"type": "number"},
        "exp_bound": {"type": "number"},
        "oracle": NULLABLE_NUMBER,
        "grid_size": {"type": "integer"},
        "certificate": {
            "type": "object",
            "required": ["d0", "d1", "d2", "objective"],
            "additionalProperties": False,
            "properties": {k: {"type": "number"} for k in ("d0", "d1", "d2", "objective")},
        },
    },
}

RATES = {
    "type": "object",
    "required": ["problem", "learner", "seed", "ns", "excess", "stderr", "slope", "slope_ci"],
    "additionalProperties": False,
    "properties": {
        "problem": {"type": "string"},
        "learner": {"type": "string"},
        "seed": {"type": "integer"},
        "ns": {"type": "array", "items": {"type": "integer"}},
        "excess": {"type": "array", "items": {"type": "number"}},
        "stderr": {"type": "array", "items": {"type": "number"}},
        "slope": NULLABLE_NUMBER,
        "slope_ci": {"type": "array", "items": NULLABLE_NUMBER, "minItems": 2, "maxItems": 2},
        "csv": {"type": ["string", "null"]},
    },
}

AA_SIM = {
    "type": "object",
    "required": ["problem", "eta", "n", "seed", "p_index", "substitution", "cumulative_loss",
                 "cumulative_mix_loss", "best_expert_loss", "regret", "mix_regret", "mix_regret_bound"],
    "additionalProperties": False,
    "properties": {
        "problem": {"type": "string"},
        "eta": {"type": "number"},
        "n": {"type": "integer"},
        "seed": {"type": "integer"},
        "p_index": {"type": "integer"},
        "substitution": {"type": "string"},
        "cumulative_loss": NUMBER_OR_INF,
        "cumulative_mix_loss": NUMBER_OR_INF,
        "best_expert_loss": NUMBER_OR_INF,
        "regret": NUMBER_OR_INF,
        "mix_regret": NUMBER_OR_INF,
        "mix_regret_bound": {"type": "number"},
    },
}

OUTPUTS = {"check": REPORT, "max-eta": MAX_ETA, "bound": BOUND, "moment": MOMENT, "rates": RATES, "aa-sim": AA_SIM}

_PROBLEM = {"problem": {"type": "string"}, "params": {"type": "object"}}
_COMMON = {"seed": {"type": "integer", "minimum": 0}, "output_path": {"type": ["string", "null"]},
           "threads": {"oneOf": [{"type": "integer", "minimum": 1}, {"const": "auto"}]}}
_SEARCH = {"pair_grid": {"type": "integer", "minimum": 0}, "dirichlet_draws": {"type": "integer", "minimum": 0},
           "decision_grid": {"type": "integer", "minimum": 2}, "mc_size": {"type": "integer", "minimum": 100}}
_KIND = {"enum": ["central", "ppc", "predictor", "stochmix", "stochexpconcave", "classicalmix"]}


def _config(props: dict) -> dict:
    return {"type": "object", "additionalProperties": False, "properties": {**_COMMON, **props}}


CONFIGS = {
    "check": _config({**_PROBLEM, **_SEARCH, "kind": _KIND, "eta": {"type": "number", "exclusiveMinimum": 0},
                      "eps": {"type": "number", "minimum": 0}}),
    "max-eta": _config({**_PROBLEM, **_SEARCH, "kind": _KIND, "eps": {"type": "number", "minimum": 0},
                        "tol": {"type": "number", "exclusiveMinimum": 0}}),
    "bound": _config({"kind": {"enum": ["finite", "vc", "intermediate"]}, "V": {"type": "number"},
                      "eta_star": {"type": "number", "exclusiveMinimum": 0}, "N": {"type": "integer", "minimum": 1},
                      "delta": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                      "n": {"type": "integer", "minimum": 1}, "K": {"type": "number"}, "C": {"type": "number"},
                      "c": {"type": "number"}, "v_coef": {"type": "number"}, "v_exponent": {"type": "number"}}),
    "moment": _config({"eta_star": {"type": "number", "exclusiveMinimum": 0},
                       "a_over_n": {"type": "number", "exclusiveMinimum": 0},
                       "V": {"type": "number", "exclusiveMinimum": 0}, "grid_size": {"type": "integer", "minimum": 3}}),
    "rates": _config({**_PROBLEM, "learner": {"enum": ["erm", "aa-otb"]}, "eta": {"type": "number"},
                      "substitution": {"enum": ["mean", "logloss-mean", "grid-minimax"]},
                      "mode": {"enum": ["uniform", "average"]},
                      "ns": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1},
                      "reps": {"type": "integer", "minimum": 2}, "csv_path": {"type": ["string", "null"]}}),
    "aa-sim": _config({**_PROBLEM, "eta": {"type": "number", "exclusiveMinimum": 0},
                       "substitution": {"enum": ["mean", "logloss-mean", "grid-minimax"]},
                       "n": {"type": "integer", "minimum": 1}, "p_index": {"type": "integer", "minimum": 0}}),
}
