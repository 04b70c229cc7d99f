"""Optimal signal as the fault-path reactance moves through the line reactance.

Writes xf, theta_re, theta_im, |theta| to sweep.csv; plot theta_abs against
xf to see the peak where the fault looks most like normal operation.
"""
import csv
import sys

from auxsignal import case_study_spec, sweep_xf

rows = sweep_xf(case_study_spec(), 12.0, 58.0, 24)

peak = max(rows, key=lambda r: r.theta_abs)
for r in rows:
    bar = "*" * int(60 * r.theta_abs / peak.theta_abs)
    print(f"x_f {r.xf:5.1f}  |theta| {r.theta_abs:.4f}  {bar}")
print(f"\nlargest signal needed at x_f = {peak.xf:.1f}")

out = sys.argv[1] if len(sys.argv) > 1 else "sweep.csv"
with open(out, "w", newline="") as fh:
    w = csv.writer(fh)
    w.writerow(["xf", "theta_re", "theta_im", "theta_abs"])
    w.writerows([r.xf, r.theta_re, r.theta_im, r.theta_abs] for r in rows)
print("wrote", out)
