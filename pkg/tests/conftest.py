import math

import pytest

from chatter.model import FixedGuard, HybridSystem, ImpactLaw, State

G = 9.8

# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE = {}


def bouncing_times(x0, r, n, g=G):
    """Closed-form impact times of a ball dropped from rest at height x0 onto x = 0."""
    theta1 = math.sqrt(2.0 * x0 / g)
    v1 = g * theta1
    times = [theta1]
    for i in range(1, n):
        times.append(times[-1] + (2.0 * v1 / g) * r**i)
    return times


def bouncing_theta_inf(x0, r, g=G):
    theta1 = math.sqrt(2.0 * x0 / g)
    return theta1 + 2.0 * theta1 * r / (1.0 - r)


def free_fall(phi=0.0, r=0.5, g=G):
    return HybridSystem(lambda x, v, t: -g + 0.0 * x, FixedGuard(phi), ImpactLaw(r), name="free_fall")


@pytest.fixture
def ball():
    return free_fall(), State(0.0, [2.0, 0.0])


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
