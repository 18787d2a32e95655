"""Walk through the linear advertising problem.

The optimal spend rule is bang-bang in time: stay dark until t_star,
then advertise at full rate m. This script solves a reference instance,
checks the switch against the grid-search oracle, and shows how the
switch moves with the terminal weight.
"""

import numpy as np

from adkit import ModelParams, dp_linear, linear_policy, solve_linear

p = ModelParams(rho=0.5, c=0.1, T=1.0, gamma0=1.2)
sol = solve_linear(p)

print("model: rho=%g c=%g T=%g gamma0=%g (gamma=%.6f)"
      % (p.rho, p.c, p.T, p.gamma0, p.gamma))
print("switch time t_star = %.12f" % sol.t_star)
print("value at (0, x=1)  = %.12f" % sol.value(0.0, 1.0))
print("smooth fit |b1'(t_star)| = %.2e" % abs(sol.b1_prime(sol.t_star)))

oracle = dp_linear(p, 10 ** 5)
print("grid-search oracle: t_star_hat = %.6f (gap %.1e), value_hat = %.9f"
      % (oracle.t_star_hat, abs(oracle.t_star_hat - sol.t_star), oracle.value_hat))

pol = linear_policy(sol)
print("\npolicy profile:")
for t in np.linspace(0.0, p.T, 11):
    print("  t=%.2f  u=%.1f" % (t, float(pol(float(t), 0.0))))

print("\nswitch time vs terminal weight gamma0:")
for g0 in (0.9, 1.0, 1.1, 1.3, 1.6, 2.0):
    s = solve_linear(ModelParams(rho=0.5, c=0.1, T=1.0, gamma0=g0))
    tag = " (never advertise)" if s.t_star >= p.T else ""
    print("  gamma0=%.1f  t_star=%+.4f  active window %.4f%s"
          % (g0, s.t_star, max(p.T - s.t_split, 0.0), tag))
