"""Smallest auxiliary signal for a one-dimensional system.

Normal mode: theta + x = lambda0.  Faulty mode: -theta + x = lambda1.
Both noise terms bounded by 1.  An observer can tell the modes apart only
if no shared x fits both with small noise, which needs |theta| >= 1.
"""
import numpy as np

from auxsignal import (
    DesignProblem,
    StaticModel,
    check_separability,
    classify,
    design,
    evaluate_sigma,
)

problem = DesignProblem(
    StaticModel([[1.0]], [[1.0]], [[1.0]]),
    StaticModel([[-1.0]], [[1.0]], [[1.0]]),
    cost=[[1.0]],
)

# sigma(theta) is the smallest noise level at which both modes explain the same x
for t in (0.25, 0.5, 1.0, 2.0):
    s = evaluate_sigma(problem, [t])
    print(f"theta = {t:4}: sigma = {s.sigma:.6f}, separable by dual check: {check_separability(problem, [t])}")

res = design(problem)
print(f"\ndesign: {res.status.value}, theta* = {res.theta_star[0]:+.6f}, cost = {res.cost:.6f}")
print(f"  {res.iterations} iterations from start {res.start_index}, sigma at theta* = {res.sigma_verified:.6f}")

# with theta* applied, a single measurement decides the mode
theta = res.theta_star
for x_obs in (-theta[0] + 0.3, theta[0] - 0.3, 4.0):
    c = classify(problem, theta, np.array([x_obs]))
    print(f"x = {x_obs:+.3f}: {c.verdict.value} (rho0 {c.rho0:.3f}, rho1 {c.rho1:.3f})")
