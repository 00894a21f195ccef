"""Certificates for error-rate inequalities and the tight bound frontier.

Every claim of the shape  x*p_bit + y*p_fil >= p_ph  (for all attacks) is a
positive-semidefiniteness statement about the Hermitian matrix

    x*H_bit + y*H_fil - H_ph

over the attack coordinates, so it is verified exactly by one smallest-
eigenvalue computation instead of a search over attacks.  The frontier
``y_star(x)`` is the least filter coefficient that keeps the matrix PSD;
it exists in [0, 1] because p_ph <= p_fil pointwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import attack_forms, qmath

SIN2_PI_8 = math.sin(math.pi / 8) ** 2

# Verification grid: 41 points covering [0, 10] at step 0.25, the two
# operating points quoted for the two-photon bound, and a large-x probe.
DEFAULT_X_GRID = tuple(
    sorted(set([0.25 * k for k in range(41)] + [2.485, 2.747, 1000.0]))
)

PSD_TOL = 1e-9
IDENTITY_TOL = 1e-10


def _forms(protocol: str, nu: int):
    f = attack_forms.all_forms(protocol, nu)
    return f["bit"].matrix, f["fil"].matrix, f["ph"].matrix


def psd_margin(x: float, y: float, protocol: str, nu: int) -> float:
    """Smallest eigenvalue of x*H_bit + y*H_fil - H_ph.

    A nonnegative value certifies x*p_bit + y*p_fil >= p_ph for every attack
    map (hence, per sifted conclusive pair, for arbitrary joint attacks).
    """
    h_bit, h_fil, h_ph = _forms(protocol, nu)
    return qmath.min_eigenvalue(x * h_bit + y * h_fil - h_ph)


def identity_check_single(protocol: str = "four-state") -> float:
    """Max-norm gap ||H_ph - 1.5*H_bit|| for nu = 1.

    Zero (within 1e-10) means the phase-error weight of every single-photon
    attack equals exactly 3/2 of its bit-error weight.
    """
    h_bit, _, h_ph = _forms(protocol, 1)
    return float(np.abs(h_ph - 1.5 * h_bit).max())


def correlation_psd_check() -> tuple[float, float]:
    """Smallest eigenvalues of the two single-photon correlation inequalities.

    Returns (lambda_min(H_chi0- - 2*H_chi1+), lambda_min(2*H_chi1- - H_chi0-))
    for the four-state protocol at nu = 1; both nonnegative (within 1e-10)
    means every attack satisfies <chi0-> >= 2<chi1+> and 2<chi1-> >= <chi0->.
    """
    forms = attack_forms.all_forms("four-state", 1)
    h0m = forms["bell:chi0-"].matrix
    h1p = forms["bell:chi1+"].matrix
    h1m = forms["bell:chi1-"].matrix
    return (
        qmath.min_eigenvalue(h0m - 2.0 * h1p),
        qmath.min_eigenvalue(2.0 * h1m - h0m),
    )


def g_of_x(x: float) -> float:
    """The two-photon bound curve g(x) = (3 - 2x + sqrt(6 - 6*sqrt(2)*x + 4x^2))/6.

    The discriminant has minimum value 3/2 (at x = 3*sqrt(2)/4), so the square
    root never branches; g decreases monotonically to sin^2(pi/8) as x grows.
    """
    if x < 0:
        raise ValueError("x must be >= 0")
    disc = 6.0 - 6.0 * math.sqrt(2.0) * x + 4.0 * x * x
    return (3.0 - 2.0 * x + math.sqrt(disc)) / 6.0


@dataclass(frozen=True)
class FrontierPoint:
    """One point of the computed feasibility frontier.

    ``margin_at_g`` and ``gap`` relate the frontier to the reference curve g
    and are filled for the four-state two-photon forms (None otherwise).
    """

    x: float
    y_star: float
    margin_at_g: float | None
    gap: float | None


def frontier(x: float, protocol: str, nu: int, tol: float = PSD_TOL) -> FrontierPoint:
    """Minimal y with psd_margin(x, y) >= -tol, by bisection on y in [0, 1].

    The margin is nondecreasing in y (H_fil is PSD), so bisection is exact to
    its resolution; y = 1 is always feasible because p_ph <= p_fil.
    """
    h_bit, h_fil, h_ph = _forms(protocol, nu)
    base = x * h_bit - h_ph

    def margin(y: float) -> float:
        return qmath.min_eigenvalue(base + y * h_fil)

    if margin(0.0) >= -tol:
        y_star = 0.0
    else:
        lo, hi = 0.0, 1.0
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if margin(mid) >= -tol:
                hi = mid
            else:
                lo = mid
        y_star = hi
    if protocol == "four-state" and nu == 2:
        gx = g_of_x(x)
        return FrontierPoint(x=x, y_star=y_star, margin_at_g=margin(gx), gap=gx - y_star)
    return FrontierPoint(x=x, y_star=y_star, margin_at_g=None, gap=None)


def frontier_table(protocol: str, nu: int, grid=DEFAULT_X_GRID, tol: float = PSD_TOL):
    """Frontier points for every x on the grid (ascending)."""
    return [frontier(float(x), protocol, nu, tol) for x in sorted(grid)]


def zero_rate_check(protocol: str, nu: int, grid=DEFAULT_X_GRID) -> float:
    """min over the x grid of y_star(x).

    At zero bit error the certified phase-error bound is exactly this minimum;
    a value >= 1/2 means no key can be certified (consistent with the
    unambiguous-discrimination limit), while a value < 1/2 leaves room for a
    positive rate.
    """
    return min(frontier(float(x), protocol, nu).y_star for x in grid)
