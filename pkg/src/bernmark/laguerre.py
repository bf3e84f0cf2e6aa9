"""Uniform constants at the confluent spectrum (1, ..., 1) and closed-form bounds.

The extremal polynomial for the fully confluent unit spectrum of degree n is
exp(-t) * R_{n-1}(t) with R_{n-1} the algebraic Chebyshev polynomial for the
weight exp(-t) on the half-line.  This module extracts R_{n-1}, evaluates the
uniform constants m(l, n), the factorial bracket for |R^(l)(0)|, and the
binomial-sum bounds with exact rational arithmetic, including the degree-two
closed form (16n^2 - 24n + 11)/3.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from .errors import BernmarkError, InternalInconsistency
from .quasipoly import ExpSpectrum
from .remez import ChebyshevCertificate, MarkovConstant, chebyshev_polynomial


@dataclass(frozen=True)
class LaguerreChebyshev:
    """R_{n-1} with its certificate; coefficients ascending in the power of t."""

    n: int
    R_coeffs: np.ndarray
    certificate: ChebyshevCertificate
    derivatives_at_zero: np.ndarray  # |R^(j)(0)| for j = 0..n-1


@dataclass(frozen=True)
class BoundsReport:
    """All closed-form and computed bounds for one (ell, n) pair."""

    n: int
    ell: int
    sklyarov_lower: float
    sklyarov_upper: float
    m_lower: float
    m_upper: float
    k2_upper: Fraction | None  # exact, ell == 2 only
    m_exact: float

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "ell": self.ell,
            "sklyarov_lower": self.sklyarov_lower,
            "sklyarov_upper": self.sklyarov_upper,
            "m_lower": self.m_lower,
            "m_upper": self.m_upper,
            "k2_upper": str(self.k2_upper) if self.k2_upper is not None else None,
            "m_exact": self.m_exact,
        }


class Markov3Bounds(NamedTuple):
    lower: Fraction
    upper: Fraction


@dataclass(frozen=True)
class TableRow:
    n: int
    m: float | None
    markov3_upper: Fraction
    k2: Fraction | None
    error: str | None = None


@dataclass(frozen=True)
class TableReport:
    ell: int
    rows: tuple[TableRow, ...]

    def to_dict(self) -> dict:
        return {
            "ell": self.ell,
            "rows": [
                {
                    "n": r.n,
                    "m": r.m,
                    "markov3_upper": str(r.markov3_upper),
                    "k2": str(r.k2) if r.k2 is not None else None,
                    "error": r.error,
                }
                for r in self.rows
            ],
        }

    def to_csv(self) -> str:
        lines = ["n,m,markov3_upper,k2"]
        for r in self.rows:
            m = f"{r.m:.12g}" if r.m is not None else ""
            k2 = str(r.k2) if r.k2 is not None else ""
            lines.append(f"{r.n},{m},{r.markov3_upper},{k2}")
        return "\n".join(lines) + "\n"


def laguerre_chebyshev(n: int, tol: float = 1e-9) -> LaguerreChebyshev:
    """Chebyshev polynomial of degree n-1 under the half-line weight exp(-t).

    Delegates to the exchange algorithm on the spectrum (1, multiplicity n);
    the quasipolynomial coefficients in the basis t^j exp(-t) are exactly the
    coefficients of R_{n-1}.
    """
    if not 1 <= n <= 64:
        raise ValueError("n must lie in [1, 64]")
    cert = chebyshev_polynomial(ExpSpectrum([(1.0, n)]), tol)
    r_coeffs = np.array(cert.polynomial.coeffs)
    derivs = np.array([math.factorial(j) * abs(r_coeffs[j]) for j in range(n)])
    return LaguerreChebyshev(n=n, R_coeffs=r_coeffs, certificate=cert,
                             derivatives_at_zero=derivs)


def m_uniform(ell: int, n: int, tol: float = 1e-9) -> MarkovConstant:
    """Uniform constant m(ell, n) = |T^(ell)(0)| at the confluent unit spectrum.

    Computed from the certificate and cross-checked against the binomial sum
    1 + sum_j C(ell, j) |R^(j)(0)|; the two must agree to 1e-6 relative.
    """
    if ell < 1 or n < 1:
        raise ValueError("ell and n must be >= 1")
    return _m_uniform_from(laguerre_chebyshev(n, tol), ell)


def _m_uniform_from(lag: LaguerreChebyshev, ell: int) -> MarkovConstant:
    cert = lag.certificate
    direct = abs(cert.polynomial.derivative_at_zero(ell))
    binomial = 1.0 + sum(
        math.comb(ell, j) * lag.derivatives_at_zero[j]
        for j in range(1, min(ell, lag.n - 1) + 1)
    )
    if abs(direct - binomial) > 1e-6 * max(1.0, abs(direct)):
        raise InternalInconsistency(
            f"certificate derivative {direct!r} and binomial sum {binomial!r} "
            f"disagree for ell={ell}, n={lag.n}"
        )
    return MarkovConstant(spectrum=cert.polynomial.spectrum, ell=ell,
                          value=direct, certificate=cert, method="remez")


def sklyarov_bounds(ell: int, n: int) -> tuple[float, float]:
    """Factorial bracket for |R_{n-1}^(ell)(0)|.

    upper = 8^ell (n-1)! ell! / ((n-1-ell)! (2 ell)!), lower multiplies by
    (1 - ell / (2(n-1))).  Both are 0 when ell > n-1 (the derivative of an
    algebraic polynomial past its degree vanishes).
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    if ell < 1:
        raise ValueError("ell must be >= 1")
    if ell > n - 1:
        return (0.0, 0.0)
    upper = Fraction(
        8 ** ell * math.factorial(n - 1) * math.factorial(ell),
        math.factorial(n - 1 - ell) * math.factorial(2 * ell),
    )
    u = float(upper)
    return (u * (1.0 - ell / (2.0 * (n - 1))), u)


def markov3_bounds(ell: int, n: int) -> Markov3Bounds:
    """Exact rational binomial-sum bracket for the uniform constant m(ell, n).

    upper = sum_{j=0}^{ell} 8^j C(n-1, j) C(ell, j) / C(2j, j); the lower
    bound carries the per-term factor (1 - j / (2(n-1))).  Terms with j >= n
    vanish through C(n-1, j) = 0.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    if ell < 1:
        raise ValueError("ell must be >= 1")
    lower = Fraction(0)
    upper = Fraction(0)
    for j in range(ell + 1):
        term = Fraction(8 ** j * math.comb(n - 1, j) * math.comb(ell, j),
                        math.comb(2 * j, j))
        upper += term
        lower += Fraction(2 * (n - 1) - j, 2 * (n - 1)) * term
    return Markov3Bounds(lower, upper)


def k2_bound(n: int) -> Fraction:
    """Exact degree-two upper bound (16 n^2 - 24 n + 11) / 3."""
    if n < 2:
        raise ValueError("n must be >= 2")
    return Fraction(16 * n * n - 24 * n + 11, 3)


def bounds_report(ell: int, n: int, tol: float = 1e-9) -> BoundsReport:
    """Collect the factorial bracket, the binomial sums, and the computed value."""
    skl_lo, skl_hi = sklyarov_bounds(ell, n)
    m3 = markov3_bounds(ell, n)
    return BoundsReport(
        n=n,
        ell=ell,
        sklyarov_lower=skl_lo,
        sklyarov_upper=skl_hi,
        m_lower=float(m3.lower),
        m_upper=float(m3.upper),
        k2_upper=k2_bound(n) if ell == 2 else None,
        m_exact=m_uniform(ell, n, tol).value,
    )


def table(ell: int, n_max: int, tol: float = 1e-9,
          max_workers: int | None = None) -> TableReport:
    """Rows (n, m(ell, n), binomial upper bound, degree-two bound) for n = 2..n_max.

    Rows are independent; a failure in one row is recorded there and the
    remaining rows are still produced.  With max_workers > 1 the rows are
    computed on a thread pool (results are assembled in index order, so the
    output does not depend on scheduling).
    """
    if ell < 1:
        raise ValueError("ell must be >= 1")
    if not 2 <= n_max <= 32:
        raise ValueError("n_max must lie in [2, 32]")

    def one(n: int) -> TableRow:
        upper = markov3_bounds(ell, n).upper
        k2 = k2_bound(n) if ell == 2 else None
        try:
            value = _m_uniform_from(laguerre_chebyshev(n, tol), ell).value
        except BernmarkError as exc:
            return TableRow(n=n, m=None, markov3_upper=upper, k2=k2,
                            error=type(exc).__name__)
        return TableRow(n=n, m=value, markov3_upper=upper, k2=k2)

    ns = range(2, n_max + 1)
    if max_workers is not None and max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            rows = tuple(pool.map(one, ns))
    else:
        rows = tuple(one(n) for n in ns)
    return TableReport(ell=ell, rows=rows)
