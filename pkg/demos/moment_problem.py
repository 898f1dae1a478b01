# How small can the half-eta exponential moment get?
#
# A variable S on [-1, 1] with mean -a and E exp(eta S) = 1 must also have
# E exp(eta S / 2) <= exp(-0.21 min(eta, 1) a).  The linear program below
# finds the worst law on a grid; the closed form should sit just above it.

import math

from fastrates import momentbounds as mb

print(f"{'eta':>6} {'a':>8} {'oracle':>10} {'closed form':>12} {'certificate':>12}")
for eta in (0.25, 1.0, 4.0):
    thr = mb.feasibility_threshold(eta)
    for frac in (0.1, 0.5, 0.9):
        a = frac * thr
        inst = mb.MomentProblemInstance(eta, a)
        oracle = mb.moment_lp_oracle(inst, 2001)
        cert = mb.dual_certificate_for(eta)
        print(f"{eta:6.2f} {a:8.4f} {oracle:10.6f} {math.exp(inst.bound()):12.6f} {-cert.objective(a):12.6f}")

# Past tanh(eta / 2) no such variable exists.
print(mb.feasible_moment(1.0, 0.47))
