import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from chatter.engine import (
    ZenoOptions,
    apex_times,
    check_non_penetration,
    compare_trajectories,
    detect_zeno,
    min_guard_clearance,
    simulate,
    simulate_truncated,
    truncation_cap,
)
from chatter.errors import DisjointWindows, PenetrationDetected, TooFewImpacts
from chatter.integrator import StepControl
from chatter.model import FixedGuard, HybridSystem, ImpactLaw, State

from .conftest import bouncing_theta_inf, bouncing_times, free_fall


def test_bouncing_ball_against_closed_form(ball):
    system, init = ball
    traj = simulate(system, init, 3.0)
    expected = bouncing_times(2.0, 0.5, len(traj.impacts))
    assert np.max(np.abs(np.array(traj.impact_times) - expected)) < 1e-12
    assert traj.termination == "zeno_detected"
    assert traj.zeno.verdict == "chattering"
    assert traj.theta_inf == pytest.approx(bouncing_theta_inf(2.0, 0.5), abs=1e-12)


def test_rest_phase_after_accumulation(ball):
    system, init = ball
    traj = simulate(system, init, 3.0)
    rest = traj.sticks[-1]
    assert rest.reason == "zeno" and not rest.released and rest.t_end == 3.0
    assert traj.state_at(2.5)[0] == 0.0 and traj.state_at(2.5)[1] == 0.0
    assert traj.t_final == 3.0


def test_release_when_reaction_changes_sign():
    # f = t - 1 pushes into the floor until t = 1, then lifts the bead off
    system = HybridSystem(lambda x, v, t: t - 1.0 + 0.0 * x, FixedGuard(0.0), ImpactLaw(0.5))
    traj = simulate(system, State(0.0, [0.0, 0.0]), 2.0)
    stick = traj.sticks[0]
    assert stick.reason == "initial" and stick.released
    assert stick.t_end == pytest.approx(1.0, abs=1e-12)
    # x(t) = (t - 1)^3 / 6 after release
    assert traj.state_at(2.0)[0] == pytest.approx(1.0 / 6.0, rel=1e-9)
    assert not traj.impacts


def test_truncated_model_rests_at_cap(ball):
    system, init = ball
    traj = simulate_truncated(system, init, 3.0)
    n = truncation_cap(0.5)
    assert len(traj.impacts) == n - 1
    assert traj.sticks[0].reason == "truncation"
    assert traj.sticks[0].t_start == pytest.approx(bouncing_times(2.0, 0.5, n)[-1], abs=1e-12)


@pytest.mark.parametrize("r,n", [(0.5, 2), (0.3, 3), (0.2, 5), (0.1, 10), (0.05, 20), (0.9, 1)])
def test_truncation_cap(r, n):
    assert truncation_cap(r) == n


@given(st.floats(0.01, 0.99))
def test_truncation_cap_is_floor(r):
    n = truncation_cap(r)
    assert n <= 1.0 / r + 1e-9 < n + 1


def test_detect_zeno_on_geometric_sequence():
    times = np.cumsum([1.0] + [0.5 * 0.7**i for i in range(30)])
    report = detect_zeno(list(times))
    assert report.verdict == "chattering"
    assert report.terminal_ratio == pytest.approx(0.7, rel=1e-9)
    assert report.theta_inf == pytest.approx(1.0 + 0.5 / 0.3, rel=1e-12)


@settings(max_examples=50)
@given(st.floats(0.1, 10.0), st.floats(1e-3, 5.0), st.floats(0.05, 0.9), st.integers(5, 40))
def test_zeno_extrapolation_is_exact_for_geometric_gaps(theta1, d1, rho, n):
    assume(d1 * rho ** (n - 1) > 1e-9)  # every gap resolvable in double precision
    times = [theta1]
    for i in range(n):
        times.append(times[-1] + d1 * rho**i)
    report = detect_zeno(times)
    assert report.theta_inf == pytest.approx(theta1 + d1 / (1 - rho), rel=1e-9)


def test_detect_zeno_verdicts():
    growing = list(np.cumsum([1.2**i for i in range(10)]))
    assert detect_zeno(growing).verdict == "no_accumulation"
    assert detect_zeno(growing).theta_inf is None
    slow = list(np.cumsum([0.97**i for i in range(10)]))
    assert detect_zeno(slow).verdict == "inconclusive"
    with pytest.raises(TooFewImpacts):
        detect_zeno([1.0, 2.0])


def test_zeno_options_validation():
    with pytest.raises(ValueError):
        ZenoOptions(zeno_dt=0.0)


def test_start_below_guard_is_rejected():
    with pytest.raises(PenetrationDetected):
        simulate(free_fall(phi=1.0), State(0.0, [0.5, 0.0]), 1.0)


def test_apex_midpoints(ball):
    system, init = ball
    traj = simulate(system, init, 3.0)
    apexes = apex_times(traj)
    theta = traj.impact_times
    assert apexes[0] == 0.0
    for i, xi in enumerate(apexes[1:len(theta)]):
        assert xi == pytest.approx(0.5 * (theta[i] + theta[i + 1]), abs=1e-12)


def test_non_penetration_and_clearance(ball):
    system, init = ball
    traj = simulate(system, init, 3.0)
    assert min_guard_clearance(traj) >= -1e-12
    assert check_non_penetration(traj) >= -1e-12


def test_compare_trajectories(ball):
    system, init = ball
    a = simulate(system, init, 3.0)
    b = simulate(system, init, 3.0)
    d = compare_trajectories(a, b)
    assert d.position == 0.0 and d.velocity == 0.0
    with pytest.raises(DisjointWindows):
        compare_trajectories(a, b, window=(5.0, 6.0))


def test_auxiliary_coordinates_follow_their_own_dynamics():
    # x3' = x4, x4' = -x3 with no coupling: a clean cosine throughout impacts and rest
    system = HybridSystem(lambda x, v, t: -9.8 + 0.0 * x, FixedGuard(0.0), ImpactLaw(0.5),
                          aux=lambda t, y: (y[3], -y[2]), aux_dim=2)
    traj = simulate(system, State(0.0, [2.0, 0.0, 1.0, 0.0]), 4.0)
    assert traj.termination == "zeno_detected"
    for t in (0.3, 1.0, 2.5, 4.0):
        assert traj.state_at(t)[2] == pytest.approx(math.cos(t), abs=1e-8)


def test_tighter_tolerance_does_not_move_impacts(ball):
    system, init = ball
    a = simulate(system, init, 1.5)
    b = simulate(system, init, 1.5, StepControl(rel_tol=1e-12, abs_tol=1e-14))
    n = min(len(a.impacts), len(b.impacts))
    assert np.allclose(a.impact_times[:n], b.impact_times[:n], atol=1e-10)
