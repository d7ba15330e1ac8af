"""Falsification experiments: the regimes where no traveling wave exists.

Two claims are probed dynamically. First, below the minimal speed there is no
wave: a front seeded with the shape a slow wave would need refuses to travel
at the target speed and relaxes to the minimal one. Second, with reproduction
number at most one there is no wave at any speed: every outbreak decays to
extinction regardless of its initial shape.
"""

import numpy as np

from sirwaves import Grid, ModelParams, SimConfig, minimal_speed, run, subcritical_falsification

p = ModelParams(d1=1.0, d2=1.0, d3=1.0, beta=2.0, gamma=0.5, delta=0.5, s_minus_inf=1.0)
c_star = minimal_speed(p).c_star

print(f"experiment 1: seed a front for the forbidden speed c = 1.0 (c* = {c_star})")
cfg = SimConfig(params=p, grid=Grid.symmetric(120.0, 0.2), t_end=45.0, n_outputs=150)
rep = subcritical_falsification(cfg, c_target=1.0)
print(f"  outcome: {rep.outcome}")
print(f"  measured speed {rep.measured_speed:.4f} — nowhere near the target {rep.c_target}")

print("\nexperiment 2: reproduction number below one (beta=1.8, gamma=delta=1)")
sub = ModelParams(d1=1.0, d2=1.0, d3=1.0, beta=1.8, gamma=1.0, delta=1.0, s_minus_inf=1.0)
res = run(SimConfig(params=sub, grid=Grid.symmetric(50.0, 0.2), t_end=80.0, n_outputs=120))
ratio = res.i_max_trace[-1] / res.i_max_trace[0]
print(f"  outcome: {res.outcome}")
print(f"  peak infected fell to {ratio:.2e} of its initial value by t = 80")
print("  max-I trace (log10), every 10 time units:")
stepn = max(1, len(res.mass_times) // 8)
for t, m in zip(res.mass_times[::stepn], res.i_max_trace[::stepn]):
    print(f"    t = {t:6.1f}   log10 max I = {np.log10(max(m, 1e-300)):7.2f}")
