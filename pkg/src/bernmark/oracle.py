"""Brute-force oracles: a dense-grid LP relaxation of the sharp-constant
problem and a bisection-over-LP solver for the quasiconvex step problem.

The semi-infinite constraint |p(t)| <= 1 on the half-line is discretized on a
nested family of log-spaced grids.  For the sharp constant the grid RELAXES
the constraint, so the LP value is an upper estimate that decreases with
refinement; for the step problem the same relaxation enlarges the feasible
set of the inner LP, so the reported value is a lower estimate of the true
optimum, which is the conservative direction for step certification.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .errors import DegenerateGrid, NoFeasibleDirection, NonConvergence
from .quasipoly import (
    ExpSpectrum,
    QuasiPolynomial,
    basis_derivatives_at_zero,
    basis_matrix,
    default_horizon,
)

MAX_ORACLE_DEGREE = 8
LEVELS = (0, 1, 2)


@dataclass(frozen=True)
class GridRelaxation:
    """A sample grid on [0, horizon]; level k+1 contains level k."""

    spectrum: ExpSpectrum
    grid: np.ndarray
    level: int

    @classmethod
    def build(cls, spectrum: ExpSpectrum, level: int,
              tol: float = 1e-9) -> "GridRelaxation":
        if level not in LEVELS:
            raise ValueError(f"level must be one of {LEVELS}")
        npts = (2 ** level) * 128 * spectrum.degree
        tmax = default_horizon(spectrum, tol)
        u_max = -math.expm1(-spectrum.h_min * tmax)
        u = np.arange(1, npts + 1) / npts * u_max
        ts = -np.log1p(-u) / spectrum.h_min
        return cls(spectrum, np.concatenate([[0.0], ts]), level)


@dataclass(frozen=True)
class StepProblemValue:
    """Result of the step problem (1 - p(0)) / (p'(0) - eps p(0)) -> min."""

    spectrum: ExpSpectrum
    eps: float
    value: float
    witness: QuasiPolynomial
    bisection_gap: float
    level: int

    def objective(self) -> float:
        """The witness's objective value, recomputed from its coefficients."""
        p0 = self.witness.derivative_at_zero(0)
        d0 = self.witness.derivative_at_zero(1) - self.eps * p0
        return (1.0 - p0) / d0


@dataclass(frozen=True)
class Refinement:
    value: float
    level: int
    gap: float
    reached: bool


def _check_oracle_scale(spectrum: ExpSpectrum) -> None:
    if spectrum.degree > MAX_ORACLE_DEGREE:
        raise ValueError(
            f"oracle supports degree <= {MAX_ORACLE_DEGREE}, got {spectrum.degree}"
        )


def _solve_lp(c, a_ub, b_ub):
    # HiGHS: deterministic pivoting, no randomized restarts
    return linprog(c, A_ub=a_ub, b_ub=b_ub, bounds=(None, None), method="highs")


def lp_markov_constant(spectrum: ExpSpectrum, ell: int, level: int = 2,
                       tol: float = 1e-9) -> float:
    """Grid-relaxed sharp constant: maximize p^(ell)(0) s.t. |p(t_i)| <= 1.

    Because the grid only samples the half-line, the optimum is an upper
    estimate of the true constant and decreases monotonically as the nested
    grid refines.
    """
    if ell < 1:
        raise ValueError("ell must be >= 1")
    _check_oracle_scale(spectrum)
    relax = GridRelaxation.build(spectrum, level, tol)
    mat = basis_matrix(spectrum, relax.grid)
    a_ub = np.vstack([mat, -mat])
    b_ub = np.ones(a_ub.shape[0])
    d = basis_derivatives_at_zero(spectrum, ell)
    res = _solve_lp(-d, a_ub, b_ub)
    if res.status == 3:
        raise DegenerateGrid("unbounded LP: the grid fails to pin the polynomial")
    if res.status != 0:
        raise NonConvergence(f"LP solver failed (status {res.status}): {res.message}")
    return float(-res.fun)


def step_value(spectrum: ExpSpectrum, eps: float, level: int = 2,
               tol_bisect: float | None = None) -> StepProblemValue:
    """Smallest theta with a grid-feasible p: ||p|| <= 1, p'(0) - eps p(0) > 0,
    1 - p(0) <= theta (p'(0) - eps p(0)).

    The feasibility region grows with theta, so bisection applies.  The
    strict inequality is closed with the margin delta0 = 1e-9 (1 + eps).
    """
    if not (math.isfinite(eps) and eps > 0):
        raise ValueError("eps must be positive and finite")
    _check_oracle_scale(spectrum)
    if tol_bisect is None:
        tol_bisect = 1e-6 / eps

    relax = GridRelaxation.build(spectrum, level)
    mat = basis_matrix(spectrum, relax.grid)
    ones = np.ones(mat.shape[0])
    e0 = basis_derivatives_at_zero(spectrum, 0)
    g = basis_derivatives_at_zero(spectrum, 1) - eps * e0
    delta0 = 1e-9 * (1.0 + eps)
    zero_obj = np.zeros(spectrum.degree)

    def feasible(theta: float):
        a_ub = np.vstack([mat, -mat, -g[None, :], -(e0 + theta * g)[None, :]])
        b_ub = np.concatenate([ones, ones, [-delta0], [-1.0]])
        res = _solve_lp(zero_obj, a_ub, b_ub)
        if res.status == 0:
            return res.x
        if res.status == 2:
            return None
        raise NonConvergence(f"LP solver failed (status {res.status}): {res.message}")

    hi = 10.0 / eps
    x_hi = feasible(hi)
    for _ in range(2):
        if x_hi is not None:
            break
        hi *= 10.0
        x_hi = feasible(hi)
    if x_hi is None:
        raise NoFeasibleDirection(
            "no polynomial in the unit ball has p'(0) - eps p(0) > 0 at this eps"
        )

    lo = 0.0
    x_lo = feasible(lo)
    if x_lo is not None:
        # the grid is too coarse to separate theta = 0; report it honestly
        return StepProblemValue(spectrum, eps, 0.0,
                                QuasiPolynomial(spectrum, x_lo), 0.0, level)
    while hi - lo > tol_bisect:
        mid = 0.5 * (lo + hi)
        x = feasible(mid)
        if x is None:
            lo = mid
        else:
            hi, x_hi = mid, x
    return StepProblemValue(spectrum, eps, float(hi),
                            QuasiPolynomial(spectrum, x_hi), float(hi - lo), level)


def refine_until(spectrum: ExpSpectrum, ell: int | None = None,
                 eps: float | None = None, target_gap: float = 1e-2,
                 tol_bisect: float | None = None) -> Refinement:
    """Run grid levels 0..2 until successive values agree within target_gap.

    The gap is |v_k - v_{k-1}| / max(1, |v_k|).  The reported level is the
    first one whose value already matches the returned value at that gap;
    when even level 2 does not close the gap the result carries
    reached=False instead of raising.
    """
    if not target_gap > 1e-6:
        raise ValueError("target_gap must exceed 1e-6")
    if (ell is None) == (eps is None):
        raise ValueError("exactly one of ell / eps must be given")

    values = []
    for level in LEVELS:
        if ell is not None:
            values.append(lp_markov_constant(spectrum, ell, level))
        else:
            values.append(step_value(spectrum, eps, level, tol_bisect).value)
        if len(values) >= 2:
            gap = abs(values[-1] - values[-2]) / max(1.0, abs(values[-1]))
            if gap < target_gap:
                final = values[-1]
                for lvl, v in enumerate(values):
                    if abs(v - final) / max(1.0, abs(final)) < target_gap:
                        return Refinement(final, lvl, gap, True)
    gap = abs(values[-1] - values[-2]) / max(1.0, abs(values[-1]))
    return Refinement(values[-1], LEVELS[-1], gap, False)
