# The Aggregating Algorithm on the Brier score.
#
# Forecasts live on a grid of the probability simplex.  At eta = 1 the
# grid-minimax substitution keeps the learner's loss under the mix loss, so
# the regret never exceeds log(number of experts).

import math

import numpy as np

from fastrates import learners, problems
from fastrates.core import FiniteSupport, best_predictor

prob = problems.brier(resolution=10)
psi = learners.substitution("grid-minimax", prob.model, prob.loss, 1.0, prob.outcome_space(), prob.decisions(1001))

rng = np.random.default_rng(3)
stream = rng.choice([0, 1], size=500, p=[0.3, 0.7]).tolist()
run = learners.aggregating_algorithm(stream, prob.model, prob.loss, 1.0, psi, problem=prob)
print("regret", round(run.regret(), 4), "mix regret", round(run.mix_regret(), 4), "log N", round(math.log(len(prob.model)), 4))
print("final weights", np.round(run.weights[-1], 3))

# Online-to-batch: pick one of the played forecasts at random.
est = learners.online_to_batch(run, "uniform")
P = FiniteSupport.bernoulli(0.7)
print("risk of the randomised estimator", round(est.expected_risk(P, prob.loss), 4))
print("risk of the best forecast", round(best_predictor(P, prob.model, prob.loss)[1], 4))
