import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chatter.errors import NonFiniteSample
from chatter.model import DomainBox
from chatter.theorem import LABEL, check_c2, check_inequality, estimate_bounds, theorem_verdict

EX1_BOX = DomainBox(2.0, 2.5, 7.0)


def ex1(u, v, t):
    return -np.cos(v) - u**3


def test_constant_field_bounds():
    b = estimate_bounds(lambda u, v, t: -9.8 + 0.0 * u, DomainBox(0.1, 2.0, 7.0))
    assert b.m_est == 9.8 and b.M_est == 9.8 and b.c1_holds
    assert not b.time_dependent


def test_example_field_bounds():
    b = estimate_bounds(ex1, EX1_BOX)
    # |f| is largest at (2.5, 0): cos 0 + 15.625; f is least negative near (2, +-pi)
    assert b.M_est == pytest.approx(16.625, abs=1e-12)
    assert b.m_est == pytest.approx(7.0, abs=1e-3) and b.m_est >= 7.0
    assert b.argmax[0] == 2.5 and b.argmax[1] == 0.0


def test_scalar_only_field_is_sampled_pointwise():
    b = estimate_bounds(lambda u, v, t: -math.cos(v) - u**3, EX1_BOX, grid_n=41)
    ref = estimate_bounds(ex1, EX1_BOX, grid_n=41)
    assert b.m_est == ref.m_est and b.M_est == ref.M_est


@pytest.mark.parametrize("box,m,M,lhs,holds", [
    (EX1_BOX, 7.0, 16.625, 16.625 * math.sqrt(1.0 / 7.0), True),
    (DomainBox(0.1, 2.0, 7.0), 9.8, 9.8, math.sqrt(37.24), True),
    (DomainBox(1.1, 1.5, 3.0), 0.331, 1.875, 1.875 * math.sqrt(0.8 / 0.331), True),
    (DomainBox(1.1, 1.5, 3.0), 0.231, 1.875, 1.875 * math.sqrt(0.8 / 0.231), False),
])
def test_inequality_closed_form(box, m, M, lhs, holds):
    got, ok = check_inequality(box, m, M)
    assert got == pytest.approx(lhs, rel=1e-14)
    assert ok is holds


def test_inequality_needs_positive_bounds():
    with pytest.raises(ValueError):
        check_inequality(EX1_BOX, 0.0, 1.0)


def test_c2_failure_has_witness():
    verdict = check_c2(lambda u, v, t: -1.0 - 0.1 * v, EX1_BOX)
    assert not verdict.holds
    assert verdict.asymmetry == pytest.approx(0.2 * 7.0)
    assert abs(verdict.witness[1]) == 7.0


def test_c1_failure_has_witness():
    cert = theorem_verdict(lambda u, v, t: u - 2.2 + 0.0 * v, EX1_BOX)
    assert not cert.bounds.c1_holds
    assert cert.bounds.c1_witness[0] >= 2.2
    assert not cert.holds


def test_non_finite_field():
    with pytest.raises(NonFiniteSample), np.errstate(invalid="ignore", divide="ignore"):
        estimate_bounds(lambda u, v, t: np.log(u - 2.2) + 0.0 * v, EX1_BOX)


def test_override_is_recorded():
    box = DomainBox(1.1, 1.5, 3.0)
    cert = theorem_verdict(lambda u, v, t: u - u**3 + 0.0 * v, box, m=0.331)
    assert cert.overrides == {"m": 0.331}
    assert cert.bounds.m_est == pytest.approx(0.231, abs=1e-3)
    assert cert.holds and cert.lhs == pytest.approx(2.915, abs=1e-3)
    doc = cert.to_dict()
    assert doc["label"] == LABEL and doc["verdict"] == "holds"
    assert "sampled" in cert.summary()


def test_time_slices():
    f = lambda u, v, t: -2.0 + np.cos(t) + 0.0 * u  # noqa: E731
    b = estimate_bounds(f, EX1_BOX, grid_n=11, times=(0.0, math.pi))
    assert b.time_dependent
    assert b.m_est == pytest.approx(1.0) and b.M_est == pytest.approx(3.0)


polys = st.tuples(st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3), st.floats(0.1, 5))


@settings(max_examples=30, deadline=None)
@given(polys, st.integers(1, 4))
def test_nested_grid_refinement_is_monotone(coef, k):
    a, b, c, d = coef
    f = lambda u, v, t: -(d + (a * u + b * v**2 + c * u * v**2) ** 2)  # noqa: E731
    box = DomainBox(0.5, 1.5, 2.0)
    coarse = estimate_bounds(f, box, 2**k + 1)
    fine = estimate_bounds(f, box, 2 ** (k + 1) + 1)
    assert fine.m_est <= coarse.m_est
    assert fine.M_est >= coarse.M_est
