import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import smooth_random
from hjfrac.convolution import lipschitz_seminorm
from hjfrac.evolve import DriftField, HamiltonianSpec, SolverConfig, solve_advection_diffusion, solve_burgers, solve_hj
from hjfrac.grid import ParabolicCylinder, ScalarField, SpaceTimeField, make_grid, oscillation, sample
from hjfrac.nonlocal_ops import EllipticityBounds, nonlocal_constant
from hjfrac.regularity import (
    PERIODIC_SURROGATE_NOTE,
    DiminishScenario,
    MemoryODEConfig,
    OscillationCascade,
    cascade,
    diminish_oscillation_experiment,
    fit_exponent,
    fit_modulus_exponent,
    holder_seminorm,
    incremental_quotient,
    memory_ode,
    odd_bump,
    point_estimate_check,
    scale_window,
    shock_experiment,
    shock_monitor,
    sublevel_measure,
    telescoping_bootstrap,
    time_degradation_scan,
)

TWO_PI = 2 * np.pi
C_HALF = nonlocal_constant(1, 0.5)
BOUNDS = EllipticityBounds(C_HALF / 2, 2 * C_HALF)


def frozen(field, times):
    return SpaceTimeField(field.grid, times, np.stack([field.values] * len(times)))


def square_wave(grid):
    return ScalarField(grid, np.where(np.sin(grid.axis()) >= 0, 1.0, -1.0))


# --- sublevel sets and the memory ODE ------------------------------------------------


@pytest.mark.parametrize("rho", [0.5, 1.0, 2.0])
def test_sublevel_measure_all_and_none(rho):
    g = make_grid(1, 1024, TWO_PI)
    below = sublevel_measure(sample(g, lambda x: -1.0), (1.0, rho))
    assert abs(below - 2 * rho) <= 2 * g.spacing
    assert below == g.spacing * np.count_nonzero(g.ball_mask(1.0, rho))
    assert sublevel_measure(sample(g, lambda x: 1.0), (1.0, rho)) == 0.0


def test_sublevel_measure_cos_converges_to_pi():
    errs = []
    for n in (64, 256, 1024):
        g = make_grid(1, n, TWO_PI)
        m = sublevel_measure(sample(g, np.cos), (math.pi, math.pi))
        errs.append(abs(m - math.pi))
        assert errs[-1] <= 2 * g.spacing


def test_sublevel_measure_2d_ball():
    g = make_grid(2, 256, TWO_PI)
    m = sublevel_measure(sample(g, lambda x, y: -1.0 + 0 * x), ((math.pi, math.pi), 1.0))
    assert m == pytest.approx(math.pi, rel=0.02)


def test_sublevel_measure_ball_must_fit():
    with pytest.raises(ValueError, match="fit"):
        sublevel_measure(sample(make_grid(1, 16, 1.0), np.sin), (0.0, 0.7))


def test_memory_ode_zero_measure():
    g = make_grid(1, 64, TWO_PI)
    run = frozen(sample(g, lambda x: 1.0), np.linspace(0, 2, 11))
    _, m = memory_ode(run, MemoryODEConfig(c0=1.0, C1=2.0, ball_center=(1.0,)))
    assert np.all(m == 0)


def test_memory_ode_constant_measure_closed_form_second_order():
    g = make_grid(1, 256, TWO_PI)
    cfg = MemoryODEConfig(c0=0.7, C1=1.5, ball_center=(math.pi,), ball_radius=1.0)
    ball_mass = g.spacing * np.count_nonzero(g.ball_mask((math.pi,), 1.0))
    errs = []
    for steps in (10, 20, 40, 80):
        times = np.linspace(0.0, 2.5, steps + 1)
        ts, m = memory_ode(frozen(sample(g, lambda x: -1.0), times), cfg)
        exact = cfg.c0 * ball_mass / cfg.C1 * (1 - np.exp(-cfg.C1 * ts))
        errs.append(np.max(np.abs(m - exact)))
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(rates > 1.9)


def test_memory_ode_lower_bound_on_runs():
    rng = np.random.default_rng(5)
    g = make_grid(1, 256, TWO_PI)
    c0, C1 = 0.8, 1.2
    cfg = MemoryODEConfig(c0=c0, C1=C1, ball_center=(0.0,), ball_radius=1.0)
    for _ in range(3):
        u0 = smooth_random(g, rng)
        run = solve_advection_diffusion(u0, DriftField.random(g, 1.0, rng), SolverConfig(t_end=2.0, output_interval=0.01))
        ts, m = memory_ode(run, cfg, t_start=0.0)
        early = (run.times >= 0) & (run.times <= 1 + 1e-12)
        mass = [sublevel_measure(run.frame(k), ((0.0,), 1.0)) for k in np.flatnonzero(early)]
        mu = float(np.sum(0.5 * (np.array(mass[1:]) + mass[:-1]) * np.diff(run.times[early])))
        late = ts >= 1 - 1e-12
        assert np.all(m[late] >= c0 * math.exp(-2 * C1) * mu * (1 - 1e-9))


def test_memory_ode_needs_two_frames():
    g = make_grid(1, 16, TWO_PI)
    with pytest.raises(ValueError, match="two frames"):
        memory_ode(frozen(sample(g, np.sin), [0.0]), MemoryODEConfig(1.0, 1.0))
    with pytest.raises(ValueError):
        MemoryODEConfig(c0=0.0, C1=1.0)


# --- point estimate and diminish of oscillation ----------------------------------------


def test_point_estimate_zero_field_passes():
    g = make_grid(1, 128, TWO_PI)
    run = frozen(sample(g, lambda x: 0.0), np.linspace(0, 2, 21))
    rep = point_estimate_check(run, 1.0, BOUNDS, mu=1.0, theta=0.5)
    assert rep["status"] == "PASS" and rep["empirical_theta"] == 1.0


def test_point_estimate_one_is_vacuous():
    g = make_grid(1, 128, TWO_PI)
    run = frozen(sample(g, lambda x: 1.0), np.linspace(0, 2, 21))
    rep = point_estimate_check(run, 1.0, BOUNDS, mu=0.5, theta=0.1)
    assert rep["status"] == "NOT-APPLICABLE" and rep["measured_mu"] == 0.0


def test_point_estimate_flags_zero_margin_and_uncovered_window():
    g = make_grid(1, 64, TWO_PI)
    u = np.where(g.axis() < 3.5, 1.0, -1.0)
    run = frozen(ScalarField(g, u), np.linspace(0, 2, 5))
    rep = point_estimate_check(run, 1.0, BOUNDS, mu=0.1, theta=0.01, center=(3.0,))
    assert rep["status"] == "FAIL" and rep["empirical_theta"] == 0.0
    with pytest.raises(ValueError, match="not covered"):
        point_estimate_check(frozen(ScalarField(g, u), [0.5, 1.0]), 1.0, BOUNDS, 0.1, 0.01)
    over = frozen(ScalarField(g, 2 * u), np.linspace(0, 2, 5))
    assert point_estimate_check(over, 1.0, BOUNDS, 0.1, 0.01)["status"] == "SKIP"


def test_point_estimate_ensemble_positive_theta():
    rng = np.random.default_rng(17)
    g = make_grid(1, 256, TWO_PI)
    thetas = []
    for _ in range(4):
        # at least half of B_1 starts below zero, and u <= 1 everywhere
        u0 = np.where(np.abs(g.axis() - math.pi) < 1.5, 1.0, -1.0) * rng.uniform(0.5, 1.0)
        run = solve_advection_diffusion(ScalarField(g, u0), DriftField.random(g, 1.0, rng), SolverConfig(t_end=2.0))
        rep = point_estimate_check(run, 1.0, BOUNDS, mu=1.0, theta=0.01)
        assert rep["status"] == "PASS"
        thetas.append(rep["empirical_theta"])
    assert min(thetas) > 0


def test_diminish_zero_scenario():
    g = make_grid(1, 256, TWO_PI)
    scen = DiminishScenario(sample(g, lambda x: 0.0), DriftField.random(g, 1.0, np.random.default_rng(0)))
    rep = diminish_oscillation_experiment(scen, 1.0, BOUNDS)
    assert rep["osc_inner"] == 0.0 and rep["empirical_theta"] == 1.0 and rep["status"] == "PASS"
    assert rep["hypothesis_note"] == PERIODIC_SURROGATE_NOTE


def test_diminish_pure_heat_strict_decay():
    g = make_grid(1, 512, TWO_PI)
    scen = DiminishScenario(square_wave(g), DriftField.constant(g, 0.0))
    rep = diminish_oscillation_experiment(scen, 1.0, BOUNDS)
    assert rep["status"] == "PASS" and rep["osc_inner"] < 1.0
    assert rep["inner_radius"] == pytest.approx(1 / 8)


def test_diminish_skips_on_hypothesis_violation():
    g = make_grid(1, 128, TWO_PI)
    scen = DiminishScenario(ScalarField(g, 10 * square_wave(g).values), DriftField.constant(g, 0.0))
    rep = diminish_oscillation_experiment(scen, 1.0, BOUNDS)
    assert rep["status"] == "SKIP" and "unit_cylinder_bound" in rep["reason"]


def test_diminish_negative_theta_is_fail():
    g = make_grid(1, 256, TWO_PI)
    u = np.where(np.arange(256) % 2 == 0, 1.0, -1.0)
    run = frozen(ScalarField(g, u), np.linspace(0, 2, 9))
    rep = diminish_oscillation_experiment((run, 0.0, 2.0), 1.0, BOUNDS, residuals=False)
    assert rep["empirical_theta"] < 0 and rep["status"] == "FAIL"


# --- cascades and exponent fits ------------------------------------------------------------


def test_cascade_constant_field():
    g = make_grid(1, 1024, TWO_PI)
    c = cascade(sample(g, lambda x: 5.0), (1.0, None), A=1.0)
    assert np.all(c.osc == 0)
    fit = fit_exponent(c)
    assert fit.alpha == math.inf


@pytest.mark.parametrize("n, A", [(1024, 0.0), (4096, 0.0), (4096, 1.0)])
def test_cascade_sqrt_profile(n, A):
    g = make_grid(1, n, TWO_PI)
    f = sample(g, lambda x: np.sqrt(np.minimum(x, TWO_PI - x)))
    c = cascade(f, (0.0, None), A=A)
    assert np.all(np.diff(c.radii) < 0)
    assert c.ratio == pytest.approx(1 / (4 + 4 * A))
    fit = fit_exponent(c)
    assert fit.alpha == pytest.approx(0.5, abs=0.05)


def test_cascade_on_smooth_field_saturates():
    g = make_grid(1, 4096, TWO_PI)
    c = cascade(sample(g, np.cos), (math.pi / 2, None), A=0.0, unit_radius=0.5)
    assert fit_exponent(c).alpha == pytest.approx(1.0, abs=0.05)


def test_cascade_needs_three_levels():
    g = make_grid(1, 64, TWO_PI)
    with pytest.raises(ValueError, match="resolvable levels"):
        cascade(sample(g, np.cos), (0.0, None), A=1.0)


def test_cascade_counts_excluded_levels():
    g = make_grid(1, 1024, TWO_PI)
    c = cascade(sample(g, np.sin), (0.0, None), A=0.0, max_levels=12)
    assert len(c.levels) + c.excluded == 12
    assert all(lv.radius >= 4 * g.spacing for lv in c.levels)


@given(seed=st.integers(0, 2**32 - 1), A=st.floats(0.0, 3.0))
def test_cascade_oscillation_nonincreasing(seed, A):
    rng = np.random.default_rng(seed)
    g = make_grid(1, 512, TWO_PI)
    times = np.linspace(0, 1, 41)
    run = SpaceTimeField(g, times, rng.normal(size=(41, 512)))
    c = cascade(run, (float(rng.integers(512)) * g.spacing, 1.0), A=A, unit_radius=1.0, min_levels=1)
    assert np.all(np.diff(c.osc) <= 0)


def test_cascade_brackets():
    g = make_grid(1, 4096, TWO_PI)
    c = cascade(sample(g, lambda x: np.sqrt(np.minimum(x, TWO_PI - x))), (0.0, None), A=0.0)
    a, b, feasible = c.brackets(0.5, scale=c.levels[0].upper)
    assert feasible
    assert np.all(np.diff(a) >= 0) and np.all(np.diff(b) <= 0)
    np.testing.assert_allclose(b - a, 2 * c.levels[0].upper * c.ratio ** (0.5 * np.array([lv.k for lv in c.levels])))


def test_fit_exponent_exact_synthetic():
    k = np.arange(6)
    fit = fit_exponent((k, 2 * (1 / 8) ** (0.3 * k)), ratio=1 / 8)
    assert fit.alpha == pytest.approx(0.3, abs=1e-12)
    assert fit.constant == pytest.approx(2.0, rel=1e-12)
    assert fit.residual <= 1e-12


def test_fit_exponent_noisy_level():
    k = np.arange(6)
    clean = 2 * (1 / 8) ** (0.3 * k)
    noisy = clean.copy()
    noisy[3] *= 1.3
    base, fit = fit_exponent((k, clean), ratio=1 / 8), fit_exponent((k, noisy), ratio=1 / 8)
    assert fit.residual > 0.1
    assert abs(fit.alpha - base.alpha) <= 0.1


def test_fit_exponent_needs_three_levels():
    with pytest.raises(ValueError, match="3 levels"):
        fit_exponent(([0, 1], [1.0, 0.5]), ratio=0.5)
    with pytest.raises(ValueError, match="ratio"):
        fit_exponent(([0, 1, 2], [1.0, 0.5, 0.25]))


def test_oscillation_cascade_type():
    g = make_grid(1, 1024, TWO_PI)
    c = cascade(sample(g, np.sin), (0.0, None), A=1.0)
    assert isinstance(c, OscillationCascade) and c.h == g.spacing


# --- Hölder seminorms and the time-degradation scan -----------------------------------------


def test_scale_window():
    g = make_grid(1, 512, TWO_PI)
    assert scale_window(g) == (8 * g.spacing, TWO_PI / 8)
    with pytest.raises(ValueError, match="empty"):
        scale_window(make_grid(1, 64, TWO_PI))


def test_time_degradation_square_wave_decreasing():
    g = make_grid(1, 1024, TWO_PI)
    run = solve_hj(square_wave(g), HamiltonianSpec.zero(), SolverConfig(t_end=1.0, output_interval=0.25))
    scan = time_degradation_scan(run, [0.25, 0.5, 1.0], alpha=0.8)
    sem = [r["seminorm"] for r in scan["rows"]]
    assert sem[0] > sem[1] > sem[2]
    assert scan["consistent"]


def test_time_degradation_smooth_bounded():
    g = make_grid(1, 512, TWO_PI)
    run = solve_hj(sample(g, np.sin), HamiltonianSpec.zero(), SolverConfig(t_end=1.0, output_interval=0.25))
    scan = time_degradation_scan(run, [0.25, 0.5, 1.0], alpha=1.0)
    assert max(r["seminorm"] for r in scan["rows"]) <= 1.0
    with pytest.raises(ValueError, match="outside"):
        time_degradation_scan(run, [2.0])


def test_time_degradation_linear_in_data():
    g = make_grid(1, 512, TWO_PI)
    drift = DriftField.random(g, 1.0, np.random.default_rng(3))
    cfg = SolverConfig(t_end=1.0, output_interval=0.25)
    u0 = square_wave(g)
    a = time_degradation_scan(solve_advection_diffusion(u0, drift, cfg), [0.25, 0.5, 1.0], alpha=0.7)
    b = time_degradation_scan(solve_advection_diffusion(ScalarField(g, 2 * u0.values), drift, cfg), [0.25, 0.5, 1.0],
                              alpha=0.7)
    for ra, rb in zip(a["rows"], b["rows"]):
        assert rb["seminorm"] == 2 * ra["seminorm"]


# --- incremental quotients ---------------------------------------------------------------


@pytest.mark.parametrize("beta", [0.3, 1.0])
def test_incremental_quotient_constant(beta):
    f = sample(make_grid(2, 16, TWO_PI), lambda x, y: 7.0)
    assert np.all(incremental_quotient(f, (2, 1), beta).values == 0)


def test_incremental_quotient_sin_forward_difference():
    for n in (256, 1024):
        g = make_grid(1, n, TWO_PI)
        q = incremental_quotient(sample(g, np.sin), 1, 1.0)
        assert np.max(np.abs(q.values - np.cos(g.axis()))) <= g.spacing


@pytest.mark.parametrize("beta", [0.25, 0.5, 1.0])
def test_quotient_bounded_by_holder_seminorm(beta):
    rng = np.random.default_rng(2)
    g = make_grid(1, 128, TWO_PI)
    f = ScalarField(g, rng.normal(size=128))
    window = (g.spacing, g.period / 2)
    sem = holder_seminorm(f, beta, window=window)
    norms = [float(np.max(np.abs(incremental_quotient(f, k, beta).values))) for k in range(1, 65)]
    assert max(norms) <= sem
    assert max(norms) == pytest.approx(sem, rel=1e-14)


@given(seed=st.integers(0, 2**32 - 1))
def test_first_order_quotient_bounded_by_lipschitz(seed):
    rng = np.random.default_rng(seed)
    g = make_grid(1, 64, TWO_PI)
    f = ScalarField(g, rng.normal(size=64))
    K = lipschitz_seminorm(f)
    for k in range(1, 17):
        assert np.max(np.abs(incremental_quotient(f, k, 1.0).values)) <= K


def test_time_quotient():
    g = make_grid(1, 32, TWO_PI)
    run = SpaceTimeField(g, [0.0, 0.5, 1.5], np.stack([np.zeros(32), np.ones(32), 3 * np.ones(32)]))
    q = incremental_quotient(run, 1, kind="time")
    np.testing.assert_array_equal(q.times, [0.0, 0.5])
    assert np.all(q.data[0] == 2.0) and np.all(q.data[1] == 2.0)
    with pytest.raises(ValueError, match="exceeds"):
        incremental_quotient(run, 3, kind="time")
    with pytest.raises(ValueError, match="beta"):
        incremental_quotient(run, 1, beta=1.5, kind="time")


# --- telescoping bootstrap -----------------------------------------------------------------


def test_bootstrap_smooth_field():
    g = make_grid(1, 512, TWO_PI)
    rep = telescoping_bootstrap(sample(g, np.sin), 0.5)
    assert rep["reached_lipschitz"]
    assert all(r["finite"] for r in rep["rungs"])
    assert rep["lipschitz_seminorm"] == pytest.approx(1.0, abs=g.spacing)


def test_bootstrap_power_profile_diverges():
    g = make_grid(1, 512, TWO_PI)
    f = sample(g, lambda x: np.minimum(x, TWO_PI - x) ** 0.3)
    rep = telescoping_bootstrap(f, 0.3)
    first, last = rep["rungs"][0], rep["rungs"][-1]
    assert first["finite"] and first["divergent"] is False
    assert last["result"] == "Lip" and last["divergent"] is True
    # the Lipschitz rung grows like h^-0.7
    assert last["growth_log2"] == pytest.approx(0.7, abs=0.05)
    assert not rep["reached_lipschitz"]


@pytest.mark.parametrize("n", [512, 1024])
def test_bootstrap_heat_square(n):
    g = make_grid(1, n, TWO_PI)
    f = solve_hj(square_wave(g), HamiltonianSpec.zero(), SolverConfig(t_end=0.5)).frame(-1)
    alpha = min(fit_modulus_exponent(f).alpha, 1.0)
    rep = telescoping_bootstrap(f, alpha)
    assert rep["reached_lipschitz"]
    assert math.isfinite(rep["lipschitz_seminorm"])


# --- shocks -------------------------------------------------------------------------------


def test_shock_monitor_zero_data():
    g = make_grid(1, 128, TWO_PI)
    run = solve_burgers(sample(g, lambda x: 0.0), SolverConfig(t_end=1.0))
    rep = shock_monitor(run, blowup_threshold=1.0, bounded_threshold=0.5)
    assert rep["verdict"] == "BOUNDED" and all(v == 0 for v in rep["max_gradient"])
    assert rep["h"] == g.spacing


def test_shock_monitor_critical_sine_bounded():
    g = make_grid(1, 512, TWO_PI)
    run = solve_burgers(sample(g, np.sin), SolverConfig(t_end=5.0, output_stride=4))
    rep = shock_monitor(run, bounded_threshold=2 * 1.0)
    assert rep["verdict"] == "BOUNDED"


def test_shock_monitor_inconclusive_without_thresholds_and_2d():
    g = make_grid(1, 64, TWO_PI)
    run = solve_burgers(sample(g, np.sin), SolverConfig(t_end=0.5))
    assert shock_monitor(run)["verdict"] == "INCONCLUSIVE"
    g2 = make_grid(2, 8, TWO_PI)
    with pytest.raises(ValueError, match="one-dimensional"):
        shock_monitor(frozen(sample(g2, lambda x, y: 0 * x), [0.0, 1.0]))


def test_odd_bump_is_odd():
    x = np.linspace(0.1, 3.0, 17)
    f = odd_bump(0.3)
    np.testing.assert_allclose(f(-x), -f(x), atol=1e-15)
    assert np.max(np.abs(f(np.linspace(-np.pi, np.pi, 1001)))) == pytest.approx(1.0, abs=1e-3)


@pytest.mark.slow
def test_shock_contrast_small():
    exp = shock_experiment(512, 5.0)
    assert exp["super"]["verdict"] == "BLOWUP"
    assert exp["critical"]["verdict"] == "BOUNDED"


# --- homogeneity ------------------------------------------------------------------------


def test_diagnostics_are_one_homogeneous():
    rng = np.random.default_rng(8)
    g = make_grid(1, 512, TWO_PI)
    drift = DriftField.random(g, 1.0, rng)
    u0 = smooth_random(g, rng)
    cfg = SolverConfig(t_end=1.0, output_interval=0.05)
    a = solve_advection_diffusion(u0, drift, cfg)
    for lam in (2.0, 0.5):
        # power-of-two scalings commute with rounding, so equality is exact
        b = solve_advection_diffusion(ScalarField(g, lam * u0.values), drift, cfg)
        np.testing.assert_array_equal(b.data, lam * a.data)
        cyl = ParabolicCylinder(1.0, 1.0, 0.5)
        assert oscillation(b, cyl) == lam * oscillation(a, cyl)
        assert holder_seminorm(b, 0.5, t=1.0) == lam * holder_seminorm(a, 0.5, t=1.0)
        assert lipschitz_seminorm(b.frame(-1)) == lam * lipschitz_seminorm(a.frame(-1))
        assert np.all(cascade(b, (1.0, 1.0), 0.0).osc == lam * cascade(a, (1.0, 1.0), 0.0).osc)
        assert sublevel_measure(b.frame(-1), (1.0, 1.0)) == sublevel_measure(a.frame(-1), (1.0, 1.0))
    b = solve_advection_diffusion(ScalarField(g, 3.0 * u0.values), drift, cfg)
    np.testing.assert_allclose(b.data, 3.0 * a.data, rtol=0, atol=1e-13)
