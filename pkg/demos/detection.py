"""Design a signal for the x_f = 35 fault, then classify noisy measurements."""
import numpy as np

from auxsignal import build_models, classify, design, case_study_spec

spec = case_study_spec(35.0)
problem = build_models(spec)
res = design(problem)
theta = complex(*res.theta_star)
print(f"inject theta = {theta:.4f} (|theta| = {abs(theta):.4f})")

rng = np.random.default_rng(1)


def measure(z_seq_minus, z_seq_plus, noise):
    # x = (e_-, e_+, i_+) as real pairs; i_+ is the load current
    i_plus = 1.2 - 0.4j
    n = noise * rng.uniform(-1, 1, 4) / 2
    e_minus = z_seq_minus * theta + complex(*n[:2])
    e_plus = z_seq_plus * i_plus + complex(*n[2:])
    return np.array([e_minus.real, e_minus.imag, e_plus.real, e_plus.imag, i_plus.real, i_plus.imag])


zm, zp, zf = complex(spec.z_minus), complex(spec.z_plus), complex(spec.z_fault)
for label, zs in (("healthy", (zm, zp)), ("faulted", (zf, zf))):
    for _ in range(3):
        c = classify(problem, res.theta_star, measure(*zs, noise=1.0))
        print(f"{label}: {c.verdict.value:9s} rho0 {c.rho0:6.3f}  rho1 {c.rho1:6.3f}")
