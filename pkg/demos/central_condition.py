# Where does the central condition stop holding?
#
# Binary labels under 0/1 loss.  When P(Z=1) = p > 1/2 the best guess is 1
# and the condition holds up to eta = log(p / (1 - p)).  As p drifts to 1/2
# that threshold collapses to zero.

import math

import numpy as np

from fastrates import conditions, problems

for p in (0.95, 0.9, 0.75, 0.6, 0.55, 0.5):
    prob = problems.bernoulli_01(p=p)
    eta = conditions.max_eta(prob, "central")
    print(f"p={p:.2f}  largest eta={eta:.6f}  closed form={problems.bernoulli_eta_max(p):.6f}")

# The margin is E exp(eta (loss of best - loss of other)) - 1, so the
# verdict flips exactly at ln 3 for p = 0.75.

prob = problems.bernoulli_01(p=0.75)
for eta in np.linspace(0.9, 1.3, 9):
    rep = conditions.check_condition(prob, "central", float(eta))
    print(f"eta={eta:.3f}  margin={rep.worst_margin:+.3e}  {rep.verdict.value}")
print("ln 3 =", math.log(3))

# Weaker conditions sit below it.  The pseudo-probability convexity
# condition and stochastic mixability are checked on the same family.

prob = problems.bernoulli_01(delta=0.1)
for kind in ("central", "ppc", "stochmix"):
    print(kind, conditions.max_eta(prob, kind))
