"""Feasibility margins, the analytic two-photon bound, and frontiers."""

import math

import numpy as np
import pytest

from sargkit import attack_forms, bounds, qmath

SIN2 = math.sin(math.pi / 8) ** 2


# ---------------------------------------------------------------------------
# Analytic bound g
# ---------------------------------------------------------------------------

def test_g_closed_form_values():
    # Hand evaluations of (3 - 2x + sqrt(6 - 6 sqrt(2) x + 4 x^2)) / 6.
    assert abs(bounds.g_of_x(math.sqrt(2)) - (3 - math.sqrt(2)) / 6) < 1e-15
    assert abs(bounds.g_of_x(0.0) - (3 + math.sqrt(6)) / 6) < 1e-15


def test_g_limit_is_sin_squared_pi_8():
    assert 0 < bounds.g_of_x(1e6) - SIN2 < 1e-5


def test_g_decreasing_and_domain():
    xs = [0.25 * k for k in range(41)]
    vals = [bounds.g_of_x(x) for x in xs]
    assert all(b < a for a, b in zip(vals, vals[1:]))
    with pytest.raises(ValueError):
        bounds.g_of_x(-0.1)


# ---------------------------------------------------------------------------
# Margins
# ---------------------------------------------------------------------------

def test_single_photon_identity_both_protocols():
    assert bounds.identity_check_single("four-state") < 1e-10
    assert bounds.identity_check_single("six-state") < 1e-10


def test_correlation_inequalities_hold():
    lo1, lo2 = bounds.correlation_psd_check()
    assert lo1 >= -1e-10
    assert lo2 >= -1e-10


def test_margin_increases_with_y():
    # Adding filter weight can only help: H_fil is PSD.
    for x in (0.0, 1.0, 3.0):
        lo = bounds.psd_margin(x, 0.2, "four-state", 2)
        hi = bounds.psd_margin(x, 0.6, "four-state", 2)
        assert hi >= lo - 1e-12


def test_two_photon_margins_on_default_grid():
    worst = min(
        bounds.psd_margin(x, bounds.g_of_x(x), "four-state", 2)
        for x in bounds.DEFAULT_X_GRID
    )
    assert worst >= -1e-9


def test_margin_detects_infeasible_point():
    # Just below the frontier the certificate must fail.
    pt = bounds.frontier(1.0, "four-state", 2)
    assert bounds.psd_margin(1.0, pt.y_star - 1e-3, "four-state", 2) < 0
    assert bounds.psd_margin(1.0, pt.y_star + 1e-3, "four-state", 2) > -1e-9


def test_margin_spot_value_against_parts():
    # Rebuild one margin from the raw forms as a wiring check.
    forms = attack_forms.all_forms("four-state", 2)
    x, y = 1.5, 0.5
    h = (x * forms["bit"].matrix + y * forms["fil"].matrix
         - forms["ph"].matrix)
    assert abs(bounds.psd_margin(x, y, "four-state", 2)
               - qmath.min_eigenvalue(h)) < 1e-14


# ---------------------------------------------------------------------------
# Frontier
# ---------------------------------------------------------------------------

def test_frontier_point_is_tight():
    pt = bounds.frontier(2.0, "four-state", 2)
    assert 0.0 <= pt.y_star <= 1.0
    assert bounds.psd_margin(2.0, pt.y_star + 1e-6, "four-state", 2) >= -1e-9


def test_frontier_dominated_by_analytic_bound():
    table = bounds.frontier_table("four-state", 2)
    for pt in table:
        assert pt.y_star <= bounds.g_of_x(pt.x) + 1e-6
        assert pt.margin_at_g >= -1e-9
        assert pt.gap == pytest.approx(bounds.g_of_x(pt.x) - pt.y_star, abs=1e-12)


def test_frontier_table_sorted_and_nonincreasing():
    table = bounds.frontier_table("four-state", 2)
    xs = [pt.x for pt in table]
    assert xs == sorted(xs)
    assert len(xs) == len(bounds.DEFAULT_X_GRID)
    ys = [pt.y_star for pt in table]
    assert all(b <= a + 1e-6 for a, b in zip(ys, ys[1:]))


@pytest.mark.parametrize("nu", [1, 2, 3, 4])
def test_six_state_frontier_well_formed(nu):
    table = bounds.frontier_table("six-state", nu, grid=(0.0, 0.5, 2.0, 10.0))
    ys = [pt.y_star for pt in table]
    assert all(0.0 <= y <= 1.0 for y in ys)
    assert all(b <= a + 1e-6 for a, b in zip(ys, ys[1:]))
    assert table[0].margin_at_g is None  # analytic bound is four-state only


def test_zero_rate_floors():
    assert bounds.zero_rate_check("four-state", 3) >= 0.5 - 1e-3
    assert bounds.zero_rate_check("four-state", 2) <= SIN2 + 1e-3
    assert bounds.zero_rate_check("six-state", 4) < 0.5


def test_zero_rate_uses_infimum_over_grid():
    table = bounds.frontier_table("four-state", 2)
    assert bounds.zero_rate_check("four-state", 2) == pytest.approx(
        min(pt.y_star for pt in table), abs=1e-12)
