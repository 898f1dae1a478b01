# Unbounded losses: the central condition and the Bernstein condition part ways.
#
# Gaussian location under log loss satisfies the central condition at eta = 1
# for every mean, but the second moment of the excess loss grows like mu**4
# while its mean grows like mu**2, so no linear Bernstein bound survives.

import math

import numpy as np

from fastrates import conditions, problems

prob = problems.normal_location_logloss(mu_grid=np.linspace(-30, 30, 121))
print("largest central eta", conditions.max_eta(prob, "central"))
for B in (1, 4, 16):
    rep = conditions.check_bernstein(prob, conditions.VFunction.power(B, 1.0), moment="second")
    mu = prob.model.predictors[rep.witness.f]
    print(f"B={B:2d}  {rep.verdict.value}  witness mu={mu}  sqrt(32B)={math.sqrt(32 * B):.2f}")

# A Student t law has no exponential moments at all, yet a linear Bernstein
# bound holds because its fourth moment is finite.
heavy = problems.heavy_tail_squared()
rep = conditions.check_condition(heavy, "central", 0.05)
print("heavy tail central:", rep.verdict.value, "infinite moment:", rep.infinite_moment)
u = conditions.VFunction.power(heavy.facts["bernstein_coef"], 1.0)
print("heavy tail Bernstein:", conditions.check_bernstein(heavy, u).verdict.value)
