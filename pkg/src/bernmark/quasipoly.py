"""Real exponential polynomials p(t) = sum_{k,j} c_{k,j} t^j exp(-h_k t) on [0, inf).

This module owns the shared representation: spectra of positive exponents with
multiplicities, evaluation, exact differentiation, the scaling t -> t/alpha,
and the uniform norm on the half-line computed through critical-point
isolation.  Coefficients are always stored in the fixed basis order
(exponent index k ascending, power j ascending), which is also the column
order of every linear system and LP built downstream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import NonConvergence, ResolutionTooCoarse

_EPS = float(np.finfo(np.float64).eps)

# Exponents closer than this (relative) are merged into a single entry of
# higher multiplicity: the interpolation systems degenerate otherwise.
MERGE_RTOL = 1e-8

# Floating-noise multiplier used to decide whether an evaluated value is
# distinguishable from zero given the cancellation in the coefficient sum.
NOISE_FACTOR = 32.0


def _merge_pairs(pairs: Iterable[tuple[float, int]]) -> tuple[tuple[float, int], ...]:
    """Sort (value, multiplicity) pairs and merge near-coincident exponents."""
    items = sorted((float(h), int(m)) for h, m in pairs)
    merged: list[list[float]] = []  # [weighted value, multiplicity]
    for h, m in items:
        if not math.isfinite(h) or h <= 0.0:
            raise ValueError(f"exponents must be finite and positive, got {h}")
        if m < 1:
            raise ValueError(f"multiplicities must be >= 1, got {m}")
        if merged and h - merged[-1][0] <= MERGE_RTOL * max(h, merged[-1][0]):
            prev_h, prev_m = merged[-1]
            total = prev_m + m
            # multiplicity-weighted mean keeps the merge continuous in h
            merged[-1] = [(prev_h * prev_m + h * m) / total, total]
        else:
            merged.append([h, m])
    return tuple((h, int(m)) for h, m in merged)


@dataclass(frozen=True)
class ExpSpectrum:
    """Positive exponents h_1 < ... < h_r with multiplicities m_1, ..., m_r.

    The associated function system is {t^j exp(-h_k t) : 0 <= j < m_k}; its
    dimension (the degree n) is the sum of the multiplicities.
    """

    entries: tuple[tuple[float, int], ...]

    def __init__(self, entries: Iterable[tuple[float, int]]):
        object.__setattr__(self, "entries", _merge_pairs(entries))
        if not self.entries:
            raise ValueError("spectrum needs at least one exponent")

    @classmethod
    def from_values(cls, values: Iterable[float]) -> "ExpSpectrum":
        """Build a spectrum from a plain list of exponents.

        Repeated (or nearly repeated) values merge into multiplicities.
        """
        return cls([(v, 1) for v in values])

    @property
    def degree(self) -> int:
        return sum(m for _, m in self.entries)

    @property
    def h_min(self) -> float:
        return self.entries[0][0]

    @property
    def h_max(self) -> float:
        return self.entries[-1][0]

    @property
    def max_multiplicity(self) -> int:
        return max(m for _, m in self.entries)

    @cached_property
    def column_exponents(self) -> np.ndarray:
        """Exponent h of each basis column, in the fixed order."""
        out = np.concatenate([np.full(m, h) for h, m in self.entries])
        out.setflags(write=False)
        return out

    @cached_property
    def column_powers(self) -> np.ndarray:
        """Power j of each basis column, in the fixed order."""
        out = np.concatenate([np.arange(m) for _, m in self.entries])
        out.setflags(write=False)
        return out

    def expanded(self) -> np.ndarray:
        """The exponents repeated by multiplicity, ascending (length = degree)."""
        return np.asarray(self.column_exponents)

    def dominates(self, other: "ExpSpectrum") -> bool:
        """Componentwise >= on the expanded multisets (same degree required)."""
        if self.degree != other.degree:
            raise ValueError("spectra of different degree are not comparable")
        return bool(np.all(self.expanded() >= other.expanded() - 1e-15))

    def scaled(self, factor: float) -> "ExpSpectrum":
        """Spectrum with every exponent multiplied by `factor` (> 0)."""
        if not (math.isfinite(factor) and factor > 0):
            raise ValueError("scale factor must be positive and finite")
        return ExpSpectrum([(h * factor, m) for h, m in self.entries])

    def to_dict(self) -> dict:
        return {"exponents": [{"h": h, "m": m} for h, m in self.entries]}

    @classmethod
    def from_dict(cls, data: dict) -> "ExpSpectrum":
        return cls([(e["h"], e["m"]) for e in data["exponents"]])


def basis_matrix(spectrum: ExpSpectrum, ts) -> np.ndarray:
    """Matrix B[i, b] = ts[i]^j_b * exp(-h_b * ts[i]) in the fixed column order.

    Evaluated as exp(j*log t - h*t) so that large powers never overflow
    before the exponential damping is applied.
    """
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    h = spectrum.column_exponents
    j = spectrum.column_powers
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        logt = np.log(ts)[:, None]
        out = np.exp(j[None, :] * logt - ts[:, None] * h[None, :])
    zero = ts == 0.0
    if np.any(zero):
        out[zero] = np.where(j == 0, 1.0, 0.0)[None, :]
    return out


def basis_derivatives_at_zero(spectrum: ExpSpectrum, order: int) -> np.ndarray:
    """Vector d with p^(order)(0) = d . coeffs, from the Leibniz rule at t = 0.

    d_b = C(order, j) * j! * (-h)^(order-j) for j <= order, else 0.
    """
    if order < 0:
        raise ValueError("derivative order must be >= 0")
    h = spectrum.column_exponents
    j = spectrum.column_powers
    d = np.zeros(spectrum.degree)
    for b in range(spectrum.degree):
        jb = int(j[b])
        if jb <= order:
            d[b] = math.comb(order, jb) * math.factorial(jb) * (-h[b]) ** (order - jb)
    return d


def _diff_once(spectrum: ExpSpectrum, coeffs: np.ndarray) -> np.ndarray:
    """One exact differentiation: (t^j e^{-ht})' = j t^{j-1} e^{-ht} - h t^j e^{-ht}."""
    out = np.empty_like(coeffs)
    pos = 0
    for h, m in spectrum.entries:
        block = coeffs[pos:pos + m]
        nb = -h * block
        if m > 1:
            nb[:-1] += np.arange(1, m) * block[1:]
        out[pos:pos + m] = nb
        pos += m
    return out


class SupNormResult(NamedTuple):
    value: float
    argmax: float


@dataclass(frozen=True, eq=False)
class QuasiPolynomial:
    """A real linear combination of the basis t^j exp(-h_k t) over a spectrum.

    Immutable; every operation returns a new instance.
    """

    spectrum: ExpSpectrum
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float)
        if c.ndim != 1 or c.size != self.spectrum.degree:
            raise ValueError(
                f"expected {self.spectrum.degree} coefficients, got shape {c.shape}"
            )
        if not np.all(np.isfinite(c)):
            raise ValueError("coefficients must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    # -- evaluation ---------------------------------------------------------

    def __call__(self, t: float) -> float:
        if not (math.isfinite(t) and t >= 0.0):
            raise ValueError(f"evaluation point must be finite and >= 0, got {t}")
        return self._scalar(t)

    def _scalar(self, t: float) -> float:
        acc = 0.0
        logt = math.log(t) if t > 0.0 else 0.0
        for c, h, j in zip(self.coeffs, self._h_list, self._j_list):
            if c == 0.0:
                continue
            if t == 0.0:
                b = 1.0 if j == 0 else 0.0
            else:
                arg = j * logt - h * t
                b = math.exp(arg) if arg < 709.0 else math.inf
            acc += c * b
        return acc

    @cached_property
    def _h_list(self):
        return [float(v) for v in self.spectrum.column_exponents]

    @cached_property
    def _j_list(self):
        return [int(v) for v in self.spectrum.column_powers]

    def values(self, ts) -> np.ndarray:
        """Vectorized evaluation over an array of nonnegative points."""
        return basis_matrix(self.spectrum, ts) @ self.coeffs

    def amplitude(self, ts) -> np.ndarray:
        """sum |c_{k,j}| t^j e^{-h_k t}: the cancellation scale of values(ts)."""
        return basis_matrix(self.spectrum, ts) @ np.abs(self.coeffs)

    @property
    def is_zero(self) -> bool:
        return not np.any(self.coeffs)

    # -- calculus -----------------------------------------------------------

    def derivative(self, order: int = 1) -> "QuasiPolynomial":
        """Exact `order`-th derivative; stays on the same spectrum."""
        if order < 0:
            raise ValueError("derivative order must be >= 0")
        c = np.array(self.coeffs)
        for _ in range(order):
            c = _diff_once(self.spectrum, c)
        return QuasiPolynomial(self.spectrum, c)

    def derivative_at_zero(self, order: int) -> float:
        """p^(order)(0) straight from the coefficients (Leibniz at t = 0)."""
        return float(basis_derivatives_at_zero(self.spectrum, order) @ self.coeffs)

    def rescale(self, alpha: float) -> "QuasiPolynomial":
        """q(t) = p(t / alpha): spectrum h/alpha, coefficient of t^j scaled by alpha^-j.

        Preserves the sup norm on the half-line; derivatives at zero pick up
        a factor alpha^-order.
        """
        if not (math.isfinite(alpha) and alpha > 0):
            raise ValueError("alpha must be positive and finite")
        j = self.spectrum.column_powers
        return QuasiPolynomial(
            self.spectrum.scaled(1.0 / alpha),
            self.coeffs * alpha ** (-j.astype(float)),
        )

    # -- uniform norm on the half-line ---------------------------------------

    def horizon(self, tol: float = 1e-9) -> float:
        """t beyond which |p| provably stays below tol (clamped search horizon)."""
        s = float(np.sum(np.abs(self.coeffs)))
        if s == 0.0:
            s = 1.0
        return _horizon(self.spectrum, s, tol)

    def sup_norm(self, tol: float = 1e-9,
                 points_per_decade: int | None = None) -> SupNormResult:
        """sup_{t >= 0} |p(t)| with its argmax.

        Candidates are t = 0 and the zeros of p' isolated by sign-change
        bracketing on a log grid over (0, horizon], refined by bisection.
        """
        if self.is_zero:
            return SupNormResult(0.0, 0.0)
        n = self.spectrum.degree
        ppd = points_per_decade or 64 * n
        tmax = self.horizon(tol)
        grid = _log_grid(self.spectrum.h_min, tmax, ppd)
        roots = _sign_change_roots(self.derivative(), grid, max_roots=n - 1)
        cands = np.concatenate([[0.0], roots])
        vals = np.abs(self.values(cands))
        # coarse safety net: the best unrefined grid point
        gvals = np.abs(self.values(grid))
        gi = int(np.argmax(gvals))
        if gvals[gi] > vals.max():
            cands = np.append(cands, grid[gi])
            vals = np.append(vals, gvals[gi])
        if not np.all(np.isfinite(vals)):
            raise NonConvergence("polynomial evaluation overflowed")
        best = int(np.argmax(vals))
        return SupNormResult(float(vals[best]), float(cands[best]))

    # -- serialization --------------------------------------------------------

    def to_dict(self) -> dict:
        d = self.spectrum.to_dict()
        d["coeffs"] = [float(c) for c in self.coeffs]
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "QuasiPolynomial":
        return cls(ExpSpectrum.from_dict(data), np.asarray(data["coeffs"], dtype=float))

    def __repr__(self) -> str:
        return f"QuasiPolynomial(entries={self.spectrum.entries}, coeffs={self.coeffs.tolist()})"


def default_horizon(spectrum: ExpSpectrum, tol: float = 1e-9) -> float:
    """Coefficient-free search horizon for a spectrum (unit coefficient scale)."""
    return _horizon(spectrum, 1.0, tol)


def _horizon(spectrum: ExpSpectrum, coeff_sum: float, tol: float) -> float:
    """Smallest clamped T with coeff_sum * T^(m-1) * exp(-h_min T) <= tol.

    Starts from the closed-form seed log(S) + m*log(m/h + e) + log(1/tol)
    and runs a short monotone fixed-point pass, which is what actually
    guarantees the tail bound when log(S) + log(1/tol) dominates.
    """
    if not (0 < tol < 1):
        raise ValueError("tol must be in (0, 1)")
    hmin = spectrum.h_min
    m = spectrum.max_multiplicity
    log_s = max(math.log(coeff_sum), 0.0)
    log_inv_tol = math.log(1.0 / tol)
    t = (log_s + m * math.log(m / hmin + math.e) + log_inv_tol) / hmin
    for _ in range(4):
        t = max(t, (log_s + (m - 1) * math.log(max(t, 1.0)) + log_inv_tol) / hmin)
    return float(min(max(t, 10.0 / hmin), 1e6 / hmin))


def _log_grid(h_min: float, t_max: float, points_per_decade: int) -> np.ndarray:
    """Geometric grid on (t_lo, t_max] used to bracket sign changes."""
    t_lo = 1e-8 / h_min
    if t_max <= t_lo:
        t_max = 10.0 * t_lo
    decades = math.log10(t_max / t_lo)
    npts = max(int(math.ceil(decades * points_per_decade)), 32)
    return np.geomspace(t_lo, t_max, npts)


def _sign_change_roots(q: QuasiPolynomial, grid: np.ndarray,
                       max_roots: int | None = None) -> np.ndarray:
    """Zeros of q on the grid's span, one per bracketed sign change.

    Grid values within the floating-noise floor of the coefficient sum are
    treated as zero so that underflowing tails do not produce spurious
    brackets.  Raises ResolutionTooCoarse when more sign changes show up
    than the Chebyshev zero-count bound allows.
    """
    vals = q.values(grid)
    if not np.all(np.isfinite(vals)):
        raise NonConvergence("derivative evaluation overflowed")
    floor = NOISE_FACTOR * _EPS * q.amplitude(grid)
    sig = np.nonzero(np.abs(vals) > floor)[0]
    roots = []
    for a, b in zip(sig[:-1], sig[1:]):
        if vals[a] * vals[b] < 0.0:
            roots.append(_bisect(q, float(grid[a]), float(grid[b])))
    if max_roots is not None and len(roots) > max_roots:
        raise ResolutionTooCoarse(
            f"isolated {len(roots)} sign changes, but at most {max_roots} "
            "are possible; the sampling resolution is inconsistent"
        )
    return np.asarray(roots, dtype=float)


def _bisect(q: QuasiPolynomial, a: float, b: float) -> float:
    """Plain bisection to 1e-12 (absolute in t, relative beyond t = 1)."""
    fa = q._scalar(a)
    for _ in range(200):
        if b - a <= 1e-12 * max(1.0, b):
            break
        mid = 0.5 * (a + b)
        fm = q._scalar(mid)
        if fm == 0.0:
            return mid
        if (fa > 0) == (fm > 0):
            a, fa = mid, fm
        else:
            b = mid
    return 0.5 * (a + b)


def critical_points(p: QuasiPolynomial, t_max: float | None = None,
                    tol: float = 1e-9,
                    points_per_decade: int | None = None) -> np.ndarray:
    """Zeros of p' on (0, t_max], refined by bisection."""
    n = p.spectrum.degree
    ppd = points_per_decade or 64 * n
    tmax = t_max if t_max is not None else p.horizon(tol)
    grid = _log_grid(p.spectrum.h_min, tmax, ppd)
    return _sign_change_roots(p.derivative(), grid, max_roots=n - 1)
