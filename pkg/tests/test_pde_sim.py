import numpy as np
import pytest

from sirwaves import (
    CONSTANT,
    ZERO,
    Grid,
    GridFunction,
    ModelParams,
    Profile,
    PulseIC,
    SimConfig,
    StabilityViolated,
    front_position,
    minimal_speed,
    run,
    step,
    subcritical_falsification,
    traveling_frame_check,
)

P0 = ModelParams(d1=1.0, d2=1.0, d3=1.0, beta=2.0, gamma=0.5, delta=0.5, s_minus_inf=1.0)
SUB = ModelParams(d1=1.0, d2=1.0, d3=1.0, beta=1.8, gamma=1.0, delta=1.0, s_minus_inf=1.0)


def config(p=P0, L=50.0, dx=0.2, t_end=10.0, **kw):
    return SimConfig(params=p, grid=Grid.symmetric(L, dx), t_end=t_end, **kw)


def uniform_state(grid, s, i, r):
    n = grid.n
    return Profile(
        GridFunction(grid, np.full(n, s), CONSTANT, CONSTANT),
        GridFunction(grid, np.full(n, i), ZERO, ZERO),
        GridFunction(grid, np.full(n, r), CONSTANT, CONSTANT),
    )


def test_auto_dt_satisfies_stability_bound():
    cfg = config()
    assert cfg.dt_bound == pytest.approx(0.4 * 0.2**2 / 2.0)
    with pytest.raises(StabilityViolated):
        config(dt=1.0)


def test_pulse_must_sit_inside_window():
    with pytest.raises(ValueError):
        config(ic=PulseIC(center=49.0, width=2.0))


def test_equilibrium_is_unchanged():
    cfg = config()
    state = uniform_state(cfg.grid, P0.s_minus_inf, 0.0, 0.0)
    out = step(state, cfg)
    assert np.array_equal(out.s.values, state.s.values)
    assert np.array_equal(out.i.values, state.i.values)
    assert np.array_equal(out.r.values, state.r.values)


def test_mass_conserved_per_step_without_removal():
    p = ModelParams(d1=1.0, d2=1.0, d3=1.0, beta=2.0, gamma=0.5, delta=0.0, s_minus_inf=1.0)
    cfg = config(p=p)
    state = cfg.initial_state()
    x = cfg.grid.x
    m0 = np.trapezoid(state.sum(axis=0), x)
    prof = Profile(
        GridFunction(cfg.grid, state[0], CONSTANT, CONSTANT),
        GridFunction(cfg.grid, state[1], ZERO, ZERO),
        GridFunction(cfg.grid, state[2], CONSTANT, CONSTANT),
    )
    for _ in range(20):
        prof = step(prof, cfg)
    m1 = np.trapezoid(prof.as_array().sum(axis=0), x)
    assert abs(m1 - m0) <= 1e-10 * m0


def test_mass_budget_with_removal():
    # d/dt total mass = -delta * infected mass, checked on the sampled traces
    cfg = config(t_end=5.0, n_outputs=100)
    res = run(cfg)
    t, m, mi = res.mass_times, res.mass_total, res.mass_infected
    lhs = np.diff(m) / np.diff(t)
    rhs = -P0.delta * 0.5 * (mi[1:] + mi[:-1])
    assert np.max(np.abs(lhs - rhs)) < 2e-4 * np.max(np.abs(rhs))


def test_mass_conserved_over_full_run_without_removal():
    p = ModelParams(d1=1.0, d2=1.0, d3=1.0, beta=2.0, gamma=0.5, delta=0.0, s_minus_inf=1.0)
    cfg = config(p=p, L=50.0, dx=0.25, t_end=10.0)
    res = run(cfg)
    drift = np.max(np.abs(res.mass_total - res.mass_total[0]))
    assert drift <= 1e-8 * res.mass_total[0]


def test_front_position_interpolates():
    x = np.linspace(0, 10, 11)
    i_vals = np.where(x <= 5, 1.0, 0.0) * (1 - x / 10)
    pos = front_position(x, i_vals, 0.25)
    assert 5.0 <= pos <= 6.0
    assert np.isnan(front_position(x, i_vals, 10.0))


def test_short_run_front_mechanics():
    cfg = config(L=60.0, dx=0.2, t_end=25.0, n_outputs=120)
    res = run(cfg)
    pos = res.trace.positions
    ok = np.isfinite(pos)
    late = pos[ok][len(pos[ok]) // 3 :]
    assert np.all(np.diff(late) >= -1e-9)  # front advances monotonically
    assert res.clipped_mass < 1e-10 * res.mass_total[0]
    assert res.outcome == "front"
    # susceptible never grows, removed mass never shrinks
    first = res.snapshots[0][1]
    last = res.snapshots[-1][1]
    assert np.all(last[0] <= first[0] + 1e-12)
    assert np.trapezoid(last[2], cfg.grid.x) >= np.trapezoid(first[2], cfg.grid.x) - 1e-12


def test_speed_measurement_coarse():
    # coarse short run already lands near the minimal speed
    cfg = config(L=100.0, dx=0.25, t_end=35.0, n_outputs=150)
    res = run(cfg)
    c_star = minimal_speed(P0).c_star
    assert res.trace.speed_fit == pytest.approx(c_star, rel=0.08)
    assert res.trace.speed_stderr < 0.05


def test_traveling_frame_check_coarse():
    cfg = config(L=100.0, dx=0.25, t_end=35.0, n_outputs=150, n_snapshots=12)
    res = run(cfg)
    frame = traveling_frame_check(res)
    assert frame.max_misalignment < 0.05
    assert frame.edge_decay_rel_err < 0.15


def test_subthreshold_outbreak_dies():
    cfg = config(p=SUB, L=40.0, dx=0.25, t_end=60.0, n_outputs=100)
    res = run(cfg)
    assert res.outcome == "extinction"
    assert res.i_max_trace[-1] < 1e-6 * res.i_max_trace[0]
    late = res.i_max_trace[len(res.i_max_trace) // 2 :]
    assert np.all(np.diff(late) <= 1e-15)


def test_subcritical_seed_relaxes_to_minimal_speed_coarse():
    cfg = config(L=90.0, dx=0.25, t_end=30.0, n_outputs=150)
    rep = subcritical_falsification(cfg, c_target=1.0)
    assert rep.outcome == "relaxed_to_minimal_speed"
    assert abs(rep.measured_speed - rep.c_star) < 0.15 * rep.c_star
    assert abs(rep.measured_speed - 1.0) > 0.5  # nowhere near the forbidden target


def test_subcritical_with_subthreshold_params_collapses():
    cfg = config(p=SUB, L=40.0, dx=0.25, t_end=40.0, n_outputs=80)
    rep = subcritical_falsification(cfg, c_target=1.0)
    assert rep.outcome == "extinction"


def test_amplitude_independence_coarse():
    cfg1 = config(L=100.0, dx=0.25, t_end=35.0, n_outputs=150)
    cfg2 = config(L=100.0, dx=0.25, t_end=35.0, n_outputs=150, ic=PulseIC(amplitude=0.1))
    s1 = run(cfg1).trace.speed_fit
    s2 = run(cfg2).trace.speed_fit
    assert abs(s2 - s1) / s1 < 0.02
