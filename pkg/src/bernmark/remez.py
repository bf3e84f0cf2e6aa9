"""Exchange algorithm for the extremal equioscillating exponential polynomial.

For a real positive spectrum of degree n, the extremal polynomial of unit
uniform norm on [0, inf) equioscillates at n points starting at t = 0; its
l-th derivative at zero is the sharp constant in the corresponding
Markov-Bernstein inequality.  The iteration interpolates +/-1 at the current
node set, recomputes the true extrema of the iterate, and exchanges the
nodes until the norm excess over the equioscillation level is below
tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import NonConvergence
from .quasipoly import (
    _EPS,
    NOISE_FACTOR,
    ExpSpectrum,
    QuasiPolynomial,
    _log_grid,
    _sign_change_roots,
    basis_matrix,
)

MAX_CONDITION = 1e13


@dataclass(frozen=True)
class ChebyshevCertificate:
    """Extremal polynomial plus the evidence that it equioscillates.

    alternance: n points 0 = mu_0 < mu_1 < ... < mu_{n-1};
    signs: the strictly alternating +/-1 values attained there (first +1);
    equioscillation_residual: max_i | |T(mu_i)| - 1 |;
    norm_excess: recomputed sup norm minus 1;
    tolerance: the effective tolerance the certificate was accepted at.
    """

    polynomial: QuasiPolynomial
    alternance: np.ndarray
    signs: np.ndarray
    equioscillation_residual: float
    norm_excess: float
    tolerance: float
    iterations: int

    def to_dict(self) -> dict:
        return {
            "h": self.polynomial.spectrum.to_dict()["exponents"],
            "coeffs": [float(c) for c in self.polynomial.coeffs],
            "alternance": [float(t) for t in self.alternance],
            "signs": [int(s) for s in self.signs],
            "residual": float(self.equioscillation_residual),
            "norm_excess": float(self.norm_excess),
        }


@dataclass(frozen=True)
class MarkovConstant:
    """A sharp constant |T^(l)(0)| together with its provenance."""

    spectrum: ExpSpectrum
    ell: int
    value: float
    certificate: ChebyshevCertificate
    method: str  # {"remez", "oracle", "closed_form"}


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    observed: float
    limit: float


@dataclass(frozen=True)
class AlternanceReport:
    checks: tuple[CheckResult, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "checks": [
                {"name": c.name, "passed": c.passed,
                 "observed": c.observed, "limit": c.limit}
                for c in self.checks
            ],
        }


def _equioscillation_coeffs(spectrum: ExpSpectrum, nodes: np.ndarray) -> np.ndarray:
    """Solve T(nodes[i]) = (-1)^i for the coefficients (level normalized to 1)."""
    mat = basis_matrix(spectrum, nodes)
    scale = np.max(np.abs(mat), axis=0)
    scale[scale == 0.0] = 1.0
    mat_s = mat / scale
    cond = np.linalg.cond(mat_s)
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise NonConvergence(
            f"equioscillation system is ill-conditioned (cond ~ {cond:.2e}); "
            "the spectrum has nearly coincident exponents or an extreme ratio"
        )
    rhs = (-1.0) ** np.arange(spectrum.degree)
    sol = np.linalg.solve(mat_s, rhs)
    return sol / scale


def _alternating_extrema(p: QuasiPolynomial, points_per_decade: int):
    """Strictly sign-alternating local extrema of p over [0, horizon].

    Candidates are t = 0 plus the zeros of p'; runs of candidates with the
    same sign keep only the one of largest magnitude.  Returns (ts, vs).
    """
    n = p.spectrum.degree
    tmax = p.horizon(1e-12)
    grid = _log_grid(p.spectrum.h_min, tmax, points_per_decade)
    roots = _sign_change_roots(p.derivative(), grid, max_roots=n - 1)
    cands = np.concatenate([[0.0], roots])
    vals = p.values(cands)
    if not np.all(np.isfinite(vals)):
        raise NonConvergence("iterate evaluation overflowed")
    floor = NOISE_FACTOR * _EPS * p.amplitude(cands)
    ts: list[float] = []
    vs: list[float] = []
    for t, v, f in zip(cands, vals, floor):
        if abs(v) <= f:
            continue
        if vs and (vs[-1] > 0) == (v > 0):
            if abs(v) > abs(vs[-1]):
                ts[-1], vs[-1] = float(t), float(v)
        else:
            ts.append(float(t))
            vs.append(float(v))
    return np.asarray(ts), np.asarray(vs)


def _trim_chain(ts: np.ndarray, vs: np.ndarray, n: int):
    """Keep n consecutive alternating extrema, dropping the weaker endpoint."""
    lo, hi = 0, len(ts)
    while hi - lo > n:
        if abs(vs[lo]) <= abs(vs[hi - 1]):
            lo += 1
        else:
            hi -= 1
    return ts[lo:hi], vs[lo:hi]


def chebyshev_polynomial(spectrum: ExpSpectrum, tol: float = 1e-9,
                         max_iterations: int = 200) -> ChebyshevCertificate:
    """Compute the unit-norm equioscillating polynomial for the spectrum.

    The sign is fixed by T(0) = +1.  Raises NonConvergence when the exchange
    does not settle within the iteration cap or the interpolation systems
    are too ill-conditioned; loosening tol can help in the latter case.
    """
    if not (1e-14 < tol < 1e-2):
        raise ValueError("tol must lie in (1e-14, 1e-2)")
    n = spectrum.degree
    if n == 1:
        poly = QuasiPolynomial(spectrum, np.array([1.0]))
        return ChebyshevCertificate(
            polynomial=poly,
            alternance=np.array([0.0]),
            signs=np.array([1]),
            equioscillation_residual=0.0,
            norm_excess=0.0,
            tolerance=tol,
            iterations=0,
        )

    nodes = _initial_nodes(spectrum, tol)
    ppd = 64 * n
    coeffs = None
    for iteration in range(1, max_iterations + 1):
        coeffs = _equioscillation_coeffs(spectrum, nodes)
        iterate = QuasiPolynomial(spectrum, coeffs)
        ts, vs = _alternating_extrema(iterate, ppd)
        if len(ts) < n:
            ts, vs = _alternating_extrema(iterate, 4 * ppd)
            if len(ts) < n:
                raise NonConvergence(
                    f"only {len(ts)} alternating extrema isolated (need {n})"
                )
        ts, vs = _trim_chain(ts, vs, n)
        imax = int(np.argmax(np.abs(vs)))
        sup = float(abs(vs[imax]))
        excess = sup - 1.0
        noise = NOISE_FACTOR * _EPS * float(iterate.amplitude(ts[imax])[0])
        eff_tol = max(tol, noise)
        anchored = ts[0] == 0.0 or iterate(0.0) >= 1.0 - 10.0 * eff_tol
        if excess <= eff_tol and anchored and vs[0] > 0:
            return _build_certificate(iterate, ts, vs, sup, eff_tol, iteration)
        nodes = ts
    raise NonConvergence(
        f"no equioscillation within {max_iterations} iterations "
        f"(last excess {excess:.3e}, tolerance {eff_tol:.3e})"
    )


def _initial_nodes(spectrum: ExpSpectrum, tol: float) -> np.ndarray:
    """0 plus n-1 cosine-spaced points pushed through t = -log(1-u)/h_min."""
    from .quasipoly import default_horizon

    n = spectrum.degree
    tmax = default_horizon(spectrum, tol)
    u_max = -math.expm1(-spectrum.h_min * tmax)
    ks = np.arange(1, n)
    u = u_max * 0.5 * (1.0 - np.cos(math.pi * ks / n))
    ts = -np.log1p(-u) / spectrum.h_min
    return np.concatenate([[0.0], ts])


def _build_certificate(iterate: QuasiPolynomial, ts: np.ndarray, vs: np.ndarray,
                       sup: float, eff_tol: float, iteration: int) -> ChebyshevCertificate:
    ts = np.array(ts)
    ts[0] = 0.0  # the first alternance point is the endpoint by construction
    final = QuasiPolynomial(iterate.spectrum, iterate.coeffs / sup)
    signs = np.where(vs > 0, 1, -1).astype(int)
    residual = float(np.max(np.abs(np.abs(final.values(ts)) - 1.0)))
    norm_excess = float(final.sup_norm(min(eff_tol, 1e-9)).value - 1.0)
    return ChebyshevCertificate(
        polynomial=final,
        alternance=ts,
        signs=signs,
        equioscillation_residual=residual,
        norm_excess=norm_excess,
        tolerance=eff_tol,
        iterations=iteration,
    )


def markov_constant(spectrum: ExpSpectrum, ell: int, tol: float = 1e-9) -> MarkovConstant:
    """Sharp constant of the l-th derivative bound over the spectrum's unit ball."""
    if ell < 1:
        raise ValueError("ell must be >= 1")
    cert = chebyshev_polynomial(spectrum, tol)
    value = abs(cert.polynomial.derivative_at_zero(ell))
    return MarkovConstant(spectrum=spectrum, ell=ell, value=value,
                          certificate=cert, method="remez")


def verify_alternance(cert: ChebyshevCertificate, tol: float | None = None,
                      tol_deriv: float = 1e-6) -> AlternanceReport:
    """Recompute every certificate invariant and report the numeric slack."""
    if tol is None:
        tol = cert.tolerance
    poly = cert.polynomial
    n = poly.spectrum.degree
    mu = np.asarray(cert.alternance, dtype=float)
    signs = np.asarray(cert.signs)
    checks: list[CheckResult] = []

    checks.append(CheckResult("point_count", len(mu) == n, float(len(mu)), float(n)))
    first = float(mu[0]) if len(mu) else math.nan
    checks.append(CheckResult("first_point_zero", len(mu) > 0 and first == 0.0, first, 0.0))
    increasing = bool(len(mu) < 2 or np.all(np.diff(mu) > 0))
    checks.append(CheckResult("strictly_increasing", increasing, float(increasing), 1.0))

    vals = poly.values(mu) if len(mu) else np.array([])
    sign_ok = (
        len(signs) == len(mu)
        and len(signs) > 0
        and signs[0] == 1
        and np.all(np.abs(signs) == 1)
        and np.all(signs[1:] * signs[:-1] == -1)
        and np.all(np.sign(vals) == signs)
    )
    checks.append(CheckResult("signs_alternate", bool(sign_ok), float(sign_ok), 1.0))

    residual = float(np.max(np.abs(np.abs(vals) - 1.0))) if len(mu) else math.inf
    checks.append(CheckResult("unit_values", residual <= tol, residual, tol))

    excess = float(poly.sup_norm(min(tol, 1e-9)).value - 1.0)
    checks.append(CheckResult("norm_excess", excess <= tol, excess, tol))

    deriv_limit = tol_deriv * poly.spectrum.h_min
    if len(mu) > 1:
        dvals = float(np.max(np.abs(poly.derivative().values(mu[1:]))))
    else:
        dvals = 0.0
    checks.append(CheckResult("interior_critical", dvals <= deriv_limit, dvals, deriv_limit))

    return AlternanceReport(tuple(checks))
