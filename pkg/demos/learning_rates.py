# Fast and slow rates for empirical risk minimisation.
#
# The same learner on three problems: a Gaussian location model under log
# loss, where the excess risk is 1/(2n); binary labels whose noise can reach
# 1/2, the slow regime; and binary labels bounded away from 1/2, where the
# excess vanishes almost immediately.

from fastrates import learners, problems

ns = [64, 128, 256, 512, 1024, 2048]

curve = learners.rate_experiment(problems.normal_location_logloss(), "erm", ns, 2000, seed=1, workers=4)
for n, e in zip(curve.ns, curve.excess):
    print(f"normloc    n={n:5d}  excess={e:.5f}  1/(2n)={1 / (2 * n):.5f}")
print("slope", round(curve.slope, 3))

slow = learners.rate_experiment(problems.bernoulli_01(delta=0.0, grid=101), "erm", ns, 2000, seed=1, workers=4)
print("noisy labels, slope", round(slow.slope, 3), slow.slope_ci)

easy = learners.rate_experiment(problems.bernoulli_01(delta=0.25), "erm", ns, 2000, seed=1, workers=4)
print("clean margin, excess", easy.excess)

# The CSV form is what the command-line tool writes with --csv.
print(curve.to_csv())
