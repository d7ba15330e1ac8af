import numpy as np
import pytest

from sirwaves import (
    CONSTANT,
    ZERO,
    Grid,
    GridFunction,
    ModelParams,
    Profile,
    Tail,
    exp_growth,
    incidence,
    r_naught,
    reaction_terms,
)

P0 = ModelParams(d1=1.0, d2=1.0, d3=1.0, beta=2.0, gamma=0.5, delta=0.5, s_minus_inf=1.0)


def test_r_naught_values():
    assert r_naught(P0) == 2.0
    assert r_naught(ModelParams(1, 1, 1, beta=1.0, gamma=1.0, delta=0.0, s_minus_inf=1)) == 1.0
    assert r_naught(ModelParams(1, 1, 1, beta=0.9, gamma=0.5, delta=0.5, s_minus_inf=1)) == 0.9


def test_params_validation():
    with pytest.raises(ValueError):
        ModelParams(0.0, 1, 1, 2, 0.5, 0.5, 1)
    with pytest.raises(ValueError):
        ModelParams(1, 1, 1, 2, 0.5, -0.1, 1)
    with pytest.raises(ValueError):
        ModelParams(1, 1, 1, -2, 0.5, 0.5, 1)


def test_wave_regime_flag():
    assert P0.wave_regime
    # R0 <= 1
    assert not ModelParams(1, 1, 1, 0.9, 0.5, 0.5, 1).wave_regime
    # d3 >= 2*d2
    assert not ModelParams(1, 1, 2.0, 2, 0.5, 0.5, 1).wave_regime


def test_incidence_values():
    assert incidence(1, 1, 0, beta=2.0) == pytest.approx(1.0)
    assert incidence(0, 0, 0, beta=2.0) == 0.0
    assert incidence(0.6, 0.3, 0.1, beta=2.0) == pytest.approx(0.36)


def test_incidence_guard_branch():
    assert incidence(1e-14, 1e-14, 0.0, beta=2.0, eta=1e-12) == 0.0


def test_incidence_monotone_in_s():
    rng = np.random.default_rng(0)
    for _ in range(200):
        i, r = rng.uniform(0, 5, size=2)
        s = np.sort(rng.uniform(0, 5, size=2))
        lo, hi = (incidence(v, i, r, beta=2.0) for v in s)
        assert hi >= lo - 1e-14


def test_incidence_bounds():
    rng = np.random.default_rng(1)
    s, i, r = rng.uniform(0, 10, size=(3, 500))
    inc = incidence(s, i, r, beta=2.0)
    assert np.all(inc <= 2.0 * i + 1e-14)
    assert np.all(inc <= 2.0 * s + 1e-14)


def test_incidence_lipschitz():
    # |inc(u1) - inc(u2)| <= beta * (|ds| + |di| + |dr|) away from the guard
    rng = np.random.default_rng(2)
    beta = 2.0
    for _ in range(500):
        u1 = rng.uniform(0.01, 5, size=3)
        u2 = rng.uniform(0.01, 5, size=3)
        lhs = abs(incidence(*u1, beta) - incidence(*u2, beta))
        assert lhs <= beta * np.sum(np.abs(u1 - u2)) + 1e-12


def test_reaction_terms_values():
    fs, fi, fr = reaction_terms(1.0, 1.0, 0.0, P0)
    assert (fs, fi, fr) == pytest.approx((-1.0, 0.0, 0.5))


def test_reaction_sum_is_minus_delta_i():
    rng = np.random.default_rng(3)
    for _ in range(200):
        s, i, r = rng.uniform(0, 4, size=3)
        fs, fi, fr = reaction_terms(s, i, r, P0)
        assert fs + fi + fr == pytest.approx(-P0.delta * i, abs=1e-14)


def test_disease_free_states_are_fixed_points():
    rng = np.random.default_rng(4)
    for _ in range(50):
        s, r = rng.uniform(0, 4, size=2)
        assert reaction_terms(s, 0.0, r, P0) == (0.0, 0.0, 0.0)


def test_grid_construction():
    g = Grid(-10.0, 10.0, 201)
    assert g.dx == pytest.approx(0.1)
    assert g.x[0] == -10.0
    assert np.array_equal(g.x, -10.0 + g.dx * np.arange(201))
    # exactly reproducible
    assert np.array_equal(g.x, Grid(-10.0, 10.0, 201).x)


def test_grid_requires_interior_origin():
    with pytest.raises(ValueError):
        Grid(1.0, 10.0, 11)
    with pytest.raises(ValueError):
        Grid(-10.0, 10.0, 2)


def test_grid_function_validation():
    g = Grid(-1.0, 1.0, 5)
    with pytest.raises(ValueError):
        GridFunction(g, np.ones(4))
    with pytest.raises(ValueError):
        GridFunction(g, np.array([1.0, np.inf, 0, 0, 0]))
    gf = GridFunction(g, np.ones(5))
    with pytest.raises(ValueError):
        gf.values[0] = 2.0  # frozen


def test_tail_models():
    with pytest.raises(ValueError):
        Tail("linear")
    g = Grid(-1.0, 1.0, 5)
    gf = GridFunction(g, np.full(5, 3.0), left_tail=CONSTANT, right_tail=exp_growth(-2.0))
    assert gf.extended_value(-5.0) == 3.0
    assert gf.extended_value(2.0) == pytest.approx(3.0 * np.exp(-2.0))
    gf0 = GridFunction(g, np.full(5, 3.0), left_tail=ZERO)
    assert gf0.extended_value(-5.0) == 0.0


def test_profile_shared_grid_and_nonnegativity():
    g = Grid(-1.0, 1.0, 5)
    ok = GridFunction(g, np.ones(5))
    other = GridFunction(Grid(-1.0, 1.0, 7), np.ones(7))
    with pytest.raises(ValueError):
        Profile(ok, ok, other)
    with pytest.raises(ValueError):
        Profile(ok, GridFunction(g, np.array([1, 1, -1e-3, 1, 1.0])), ok)
    # tolerance absorbs roundoff-level negatives
    Profile(ok, GridFunction(g, np.array([1, 1, -1e-12, 1, 1.0])), ok)
