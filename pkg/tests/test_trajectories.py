from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ramsey_forge.trajectories import (
    ODE_IDS,
    SUPERSOLUTION_IDS,
    TRAJECTORIES,
    DomainError,
    TrajectoryParams,
    check_supersolution,
    err,
    grid,
    helper_inequalities,
    log_err,
    max_ode_residual,
    max_second_derivative,
    ode_residual,
    p_of,
    r_of,
    slack_log_scale,
    supersolution_lower_forms,
    table,
    traj,
)


@pytest.mark.parametrize("t,p", [(0, 1), (1 / 6, 0), (1 / 12, 0.5)])
def test_p(t, p):
    assert p_of(t) == pytest.approx(p, abs=1e-15)


@pytest.mark.parametrize("t", [-0.01, 0.2])
def test_p_domain(t):
    with pytest.raises(DomainError):
        p_of(t)


def test_r_values():
    assert r_of(0, 0.3) == 1
    assert r_of(1 / 6, 1e-12) == pytest.approx(math.exp(-36 / 25), abs=1e-7)
    assert r_of(1 / 6, 1e-12) == pytest.approx(0.2369278, abs=1e-7)


@given(st.floats(0, 1 / 6), st.floats(1e-6, 1 - 1e-6))
def test_r_exceeds_one_fifth(t, s):
    assert r_of(t, s) > 1 / 5


def test_initial_values():
    assert traj("q", 0, 0.05) == pytest.approx(1 / 6)
    assert traj("y", 0, 0.05) == 1
    assert traj("z1", 0, 0.05) == traj("z2", 0, 0.05) == 0
    assert traj("a", 0, 0.05) == pytest.approx(0.0376042, abs=1e-7)


def test_unknown_id():
    with pytest.raises(KeyError):
        traj("w", 0.1, 0.1)


@given(st.floats(0, 1 / 6), st.floats(1e-4, 0.5))
def test_closed_form_identities(t, s):
    assert traj("a", t, s) == traj("b", t, s)
    assert traj("d", t, s) == traj("e", t, s) == traj("f", t, s)
    assert traj("c", t, s) == pytest.approx(traj("c1", t, s) * traj("c2", t, s), rel=1e-12, abs=1e-300)


def test_monotone_and_finite():
    ts = np.linspace(0, 1 / 6 - 1e-9, 200)
    for name in ("q", "y"):
        vals = [traj(name, float(t), 0.05) for t in ts]
        assert all(b <= a for a, b in zip(vals, vals[1:]))
    for name in TRAJECTORIES:
        assert all(math.isfinite(traj(name, float(t), 0.05)) and traj(name, float(t), 0.05) >= 0
                   for t in ts)


@pytest.mark.parametrize("s", [0.01, 0.05, 0.2])
def test_second_derivatives_bounded(s):
    # the largest curvature is z0 at t = 0, where z0'' = 2160 (1 - s)^5
    peak = 2160 * (1 - s) ** 5
    assert max_second_derivative(s) <= peak * 1.01
    assert max_second_derivative(s) >= peak * 0.95


def test_ode_residual_examples():
    assert ode_residual("a", 0.05, 0.05, 1e-5) <= 1e-6
    assert ode_residual("z0", 0.10, 0.01, 1e-5) <= 1e-6


@pytest.mark.parametrize("name", ODE_IDS)
def test_ode_residual_small_everywhere(name):
    assert max(ode_residual(name, float(t), 0.05) for t in grid()) <= 1e-5


def test_ode_residual_detects_a_wrong_rhs():
    # shifting t in the derivative side breaks the match
    eps = 1e-3
    fake = abs((traj("a", 0.05 + eps + 1e-5, 0.05) - traj("a", 0.05 + eps - 1e-5, 0.05)) / 2e-5
               - (traj("a", 0.05 + 1e-5, 0.05) - traj("a", 0.05 - 1e-5, 0.05)) / 2e-5)
    assert fake > 1e-5


def test_params_constants():
    p = TrajectoryParams(n=1e6, epsilon=0.005)
    s = p.s
    assert p.delta == pytest.approx(1e-7 * s * (1 - s) ** 4)
    assert p.kappa == pytest.approx(1e4 / (s * (1 - s) ** 4))
    assert p.omega == pytest.approx(100 * (p.kappa + 1) * p.delta)
    assert p.omega < 1 / 4
    assert p_of(p.t_max) == pytest.approx(p.n ** -p.delta, rel=1e-12)


def test_error_functions():
    p = TrajectoryParams(n=1e6, epsilon=0.01)
    assert err("g_y", 0.0, p) == err("g_y", p.t_max, p) == pytest.approx(1e6 ** (-0.5 + p.delta))
    assert err("g_ab", 0.0, p) == pytest.approx(1e6 ** -p.omega)
    gq = err("g_q", p.t_max, p)
    # equality holds at t_max, up to rounding
    assert gq / traj("q", p.t_max, p.s) <= 6 * 1e6 ** (-1 + 5 * p.delta) * (1 + 1e-12)
    with pytest.raises(DomainError):
        err("g_ab", 0.05, p)
    assert math.isfinite(log_err("g_ab", 0.15, p))


def test_g_c_combines_c1_and_c2_windows():
    p = TrajectoryParams(n=1e6, epsilon=0.01)
    t = p.t_max / 2
    want = 2 * (traj("c2", t, p.s) * err("g_c1", t, p) + traj("c1", t, p.s) * err("g_c2", t, p))
    assert err("g_c", t, p) == pytest.approx(want, rel=1e-9)


def test_supersolution_positive_on_grid():
    p = TrajectoryParams(n=1e6, epsilon=0.005)
    for t in grid():
        slack = check_supersolution(float(t), p)
        assert set(slack) == set(SUPERSOLUTION_IDS)
        assert all(v > 0 for v in slack.values())


def test_supersolution_closed_forms_are_lower_bounds():
    p = TrajectoryParams(n=1e6, epsilon=0.005)
    for t in grid():
        slack = check_supersolution(float(t), p)
        low = supersolution_lower_forms(float(t), p)
        for k in SUPERSOLUTION_IDS:
            assert slack[k] >= low[k] * (1 - 1e-9)


def test_c2_slack_closed_form():
    p = TrajectoryParams(n=1e6, epsilon=0.005)
    t = 0.07
    pt = p_of(t)
    # unscaled: n^-omega (390 kappa + 6) p^(-100 kappa - 2)
    want = math.log(390 * p.kappa + 6) - p.omega * math.log(p.n) - (100 * p.kappa + 2) * math.log(pt)
    got = math.log(supersolution_lower_forms(t, p)["g_c2"]) + slack_log_scale(t, p)
    assert got == pytest.approx(want, rel=1e-12)


def test_helper_inequalities_early_grid():
    s = TrajectoryParams(n=1e6, epsilon=0.005).s
    for t in grid(20, 0.01, 0.09):
        assert all(lhs <= rhs for lhs, rhs in helper_inequalities(float(t), s).values())


def test_helper_a_over_qc_closed_form():
    s = 0.01
    t = 0.12
    lhs, _ = helper_inequalities(t, s)["a/qc"]
    assert lhs == pytest.approx(7.2 / ((1 - s) * p_of(t) ** 3 * r_of(t, s)))


def test_table_rows():
    rows = table(0.01, 50)
    assert len(rows) == 50 and rows[0]["t"] == pytest.approx(0.01)
    rows = table(0.01, 3, n=1e6)
    assert "log_g_ab" in rows[0]


def test_grid_residual_criterion_helper():
    assert max_ode_residual() <= 1e-5
