"""Tests for sphere measures, cap fractions, and the coverage-deficit calculator."""

from __future__ import annotations

import math

import mpmath
import numpy as np
import pytest

from statesynth.geometry import (
    GeometryQuery,
    cap_fraction,
    coverage_deficit,
    monte_carlo_cap,
    sphere_measure,
    sphere_measure_mc,
)


def test_sphere_measure_base_cases_and_recurrence():
    assert sphere_measure(0) == 2.0
    assert sphere_measure(1) == pytest.approx(2 * math.pi, abs=1e-12)
    assert sphere_measure(2) == pytest.approx(4 * math.pi, abs=1e-12)
    assert sphere_measure(3) == pytest.approx(2 * math.pi**2, abs=1e-12)
    with pytest.raises(ValueError):
        sphere_measure(-1)


def test_sphere_measure_against_gamma_closed_form():
    # mu_d = 2 pi^((d+1)/2) / Gamma((d+1)/2), evaluated in high precision.
    for d in range(9):
        want = float(2 * mpmath.pi ** ((d + 1) / mpmath.mpf(2)) / mpmath.gamma((d + 1) / mpmath.mpf(2)))
        assert sphere_measure(d) == pytest.approx(want, rel=1e-12)


def test_geometry_query_validation():
    q = GeometryQuery(3, 0.25)
    assert q.m == 16
    with pytest.raises(ValueError):
        GeometryQuery(0, 0.5)
    with pytest.raises(ValueError):
        GeometryQuery(1, 1.5)
    with pytest.raises(ValueError):
        GeometryQuery(1, -0.1)


def test_cap_fraction_examples():
    assert cap_fraction(GeometryQuery(2, 1.0)) == 1.0
    assert cap_fraction(GeometryQuery(2, 0.0)) == 0.0
    assert cap_fraction(GeometryQuery(1, 0.5)) == pytest.approx(0.25, abs=1e-15)
    assert cap_fraction(GeometryQuery(2, 0.5)) == pytest.approx(0.5**6, abs=1e-15)


def test_monte_carlo_cap_full_sphere():
    assert monte_carlo_cap(GeometryQuery(1, 1.0), 1000) == 1.0


def test_monte_carlo_cap_deterministic():
    q = GeometryQuery(1, 0.5)
    assert monte_carlo_cap(q, 70_000, seed=4) == monte_carlo_cap(q, 70_000, seed=4)
    with pytest.raises(ValueError):
        monte_carlo_cap(q, 0)


def test_monte_carlo_cap_matches_closed_form():
    trials = 200_000
    for n in (1, 2):
        for eps in (0.3, 0.5, 0.8):
            q = GeometryQuery(n, eps)
            exact = cap_fraction(q)
            estimate = monte_carlo_cap(q, trials, seed=11)
            sigma = math.sqrt(exact * (1 - exact) / trials)
            assert abs(estimate - exact) <= 4 * sigma


def test_sphere_measure_mc_within_one_percent():
    for d in range(6):
        exact = sphere_measure(d)
        estimate = sphere_measure_mc(d, trials=400_000, seed=3)
        assert abs(estimate - exact) / exact < 0.01


def _deficit_oracle(n: int, eps: float, s: int, g: int, a: int, c: float = 3.0) -> float:
    m = mpmath.mpf(2) ** (n + 1)
    cap = (m - 2) / 2 * mpmath.log(mpmath.mpf(eps), 2)
    if s == 0:
        return float(cap)
    count = mpmath.mpf(s) * mpmath.log(mpmath.mpf(g) * (mpmath.mpf(c) * s) ** a, 2)
    return float(count + cap)


def test_coverage_deficit_against_high_precision_oracle():
    cases = [
        (10, 0.25, 100, 3, 3),
        (1, 0.25, 4, 2, 2),
        (4, 0.1, 1000, 5, 3),
        (6, 0.2, 0, 3, 3),
    ]
    for n, eps, s, g, a in cases:
        got = coverage_deficit(n, eps, s, g, a)
        want = _deficit_oracle(n, eps, s, g, a)
        assert got == pytest.approx(want, rel=1e-12, abs=1e-9)
        # The sign decides coverage; it must agree with the oracle's.
        assert (got < 0) == (want < 0)


def test_coverage_deficit_endpoints_and_monotonicity():
    # No circuits: only the (negative) cap term remains.
    assert coverage_deficit(3, 0.25, 0, 3, 3) < 0
    # Astronomically many gates: the count term dominates.
    assert coverage_deficit(3, 0.25, 1 << 22, 3, 3) > 0
    prev = None
    for s in (0, 1, 10, 100, 10_000):
        value = coverage_deficit(5, 0.25, s, 3, 3)
        if prev is not None:
            assert value > prev
        prev = value


def test_coverage_deficit_input_validation():
    with pytest.raises(ValueError, match="1/4"):
        coverage_deficit(3, 0.3, 10, 3, 3)
    with pytest.raises(ValueError):
        coverage_deficit(3, 0.0, 10, 3, 3)
    with pytest.raises(ValueError):
        coverage_deficit(0, 0.1, 10, 3, 3)
    with pytest.raises(ValueError):
        coverage_deficit(3, 0.1, -1, 3, 3)
    with pytest.raises(ValueError):
        coverage_deficit(3, 0.1, 10, 0, 3)
    with pytest.raises(ValueError):
        coverage_deficit(3, 0.1, 10, 3, 3, qubit_constant=0.0)
