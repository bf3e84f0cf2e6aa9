"""Certified Euler discretization steps for linear switching systems.

Given a compact family of real matrices whose spectra are real and lie left
of -eps, each matrix contributes a shifted spectrum h = -sp(A) - eps and a
per-matrix step bound 2 eps / (m2(h) + 2 eps^2) built from the sharp
second-derivative constant; the certified step is the minimum over the
family.  A coarser uniform bound 2 eps / (r^2 m(2, n)) depends only on the
dimension and the largest spectral radius.

The certificate concerns the step formula only: the eps-margin is checked
per matrix (spectral abscissa < -eps), which is necessary but not
sufficient for the Lyapunov exponent of the switching system itself to lie
below -eps.  Deciding the latter needs joint-spectral-radius machinery and
is out of scope here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ComplexSpectrum, MarginViolated
from .laguerre import m_uniform
from .quasipoly import ExpSpectrum
from .remez import markov_constant

MARGIN_NOTE = (
    "per-matrix spectral abscissa < -eps was verified; this is necessary but "
    "not sufficient for the family's Lyapunov exponent to be < -eps"
)
AGGREGATION_NOTE = (
    "tau_individual aggregates per-matrix bounds with min (conservative); "
    "the max aggregate is reported as tau_individual_max for reference"
)


@dataclass(frozen=True)
class MatrixFamily:
    """A compact control set: square real matrices of one dimension."""

    dimension: int
    matrices: tuple[np.ndarray, ...]

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError("dimension must be >= 1")
        if not self.matrices:
            raise ValueError("family needs at least one matrix")
        frozen = []
        for a in self.matrices:
            arr = np.array(a, dtype=float)
            if arr.shape != (self.dimension, self.dimension):
                raise ValueError(
                    f"expected {self.dimension}x{self.dimension} matrix, got {arr.shape}"
                )
            if not np.all(np.isfinite(arr)):
                raise ValueError("matrix entries must be finite")
            arr.setflags(write=False)
            frozen.append(arr)
        object.__setattr__(self, "matrices", tuple(frozen))

    @classmethod
    def from_matrices(cls, matrices) -> "MatrixFamily":
        mats = [np.asarray(a, dtype=float) for a in matrices]
        if not mats:
            raise ValueError("family needs at least one matrix")
        return cls(dimension=mats[0].shape[0], matrices=tuple(mats))

    @classmethod
    def from_dict(cls, data: dict) -> "MatrixFamily":
        return cls(dimension=int(data["dimension"]),
                   matrices=tuple(np.asarray(m, dtype=float) for m in data["matrices"]))

    def to_dict(self) -> dict:
        return {"dimension": self.dimension,
                "matrices": [m.tolist() for m in self.matrices]}


@dataclass(frozen=True)
class SpectrumInfo:
    """Real eigenvalue data of one family member."""

    index: int
    eigenvalues: np.ndarray  # ascending
    is_hurwitz: bool
    spectral_abscissa: float
    spectral_radius: float


@dataclass(frozen=True)
class PerMatrixBound:
    index: int
    shifted: ExpSpectrum
    m2: float
    bound: float


@dataclass(frozen=True)
class StepEstimate:
    """Certified step sizes with per-matrix provenance."""

    eps: float
    dimension: int
    per_matrix: tuple[PerMatrixBound, ...]
    tau_individual: float
    tau_individual_max: float
    tau_uniform: float
    tau_uniform_informational: float
    spectral_radius_max: float
    uniform_constant: float
    notes: tuple[str, ...] = (MARGIN_NOTE, AGGREGATION_NOTE)

    def to_dict(self) -> dict:
        return {
            "eps": self.eps,
            "dimension": self.dimension,
            "per_matrix": [
                {
                    "index": b.index,
                    "h": [float(v) for v in b.shifted.expanded()],
                    "m2": b.m2,
                    "bound": b.bound,
                }
                for b in self.per_matrix
            ],
            "tau_individual": self.tau_individual,
            "tau_individual_max": self.tau_individual_max,
            "tau_uniform": self.tau_uniform,
            "tau_uniform_informational": self.tau_uniform_informational,
            "spectral_radius_max": self.spectral_radius_max,
            "uniform_constant": self.uniform_constant,
            "notes": list(self.notes),
        }

    def to_csv(self) -> str:
        lines = ["index,h,m2,bound,tau_individual,tau_uniform"]
        for b in self.per_matrix:
            h = " ".join(f"{v:.12g}" for v in b.shifted.expanded())
            lines.append(
                f"{b.index},{h},{b.m2:.12g},{b.bound:.12g},"
                f"{self.tau_individual:.12g},{self.tau_uniform:.12g}"
            )
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class ContractionEntry:
    index: int
    radius: float
    contracting: bool


@dataclass(frozen=True)
class ContractionReport:
    tau: float
    entries: tuple[ContractionEntry, ...]

    @property
    def all_contracting(self) -> bool:
        return all(e.contracting for e in self.entries)

    def to_dict(self) -> dict:
        return {
            "tau": self.tau,
            "all_contracting": self.all_contracting,
            "entries": [
                {"index": e.index, "radius": e.radius, "contracting": e.contracting}
                for e in self.entries
            ],
        }


def spectrum(a, tol_imag: float = 1e-8, index: int = 0) -> SpectrumInfo:
    """Eigenvalues of a real matrix, accepted only when the spectrum is real.

    Raises ComplexSpectrum when any eigenvalue has an imaginary part above
    tol_imag * (1 + |lambda|): the sharp-constant pipeline applies to real
    spectra only, so the step certification cannot proceed for this matrix.
    """
    arr = np.asarray(a, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"matrix must be square, got shape {arr.shape}")
    if arr.shape[0] > 64:
        raise ValueError("matrices larger than 64x64 are not supported")
    if not np.all(np.isfinite(arr)):
        raise ValueError("matrix entries must be finite")
    eig = np.linalg.eigvals(arr)
    bad = np.abs(eig.imag) > tol_imag * (1.0 + np.abs(eig))
    if np.any(bad):
        worst = eig[np.argmax(np.abs(eig.imag))]
        raise ComplexSpectrum(
            f"matrix {index} has complex eigenvalues (e.g. {worst:.6g}); the "
            "real-spectrum step certification does not apply to it"
        )
    real = np.sort(eig.real)
    abscissa = float(real[-1])
    return SpectrumInfo(
        index=index,
        eigenvalues=real,
        is_hurwitz=abscissa < 0.0,
        spectral_abscissa=abscissa,
        spectral_radius=float(np.max(np.abs(real))),
    )


def shifted_spectrum(info: SpectrumInfo, eps: float) -> ExpSpectrum:
    """h = -sp(A) - eps, as an exponent spectrum (coincident values merge)."""
    if not (math.isfinite(eps) and eps > 0):
        raise ValueError("eps must be positive and finite")
    shifted = -info.eigenvalues - eps
    if np.min(shifted) <= 0.0:
        raise MarginViolated(
            f"matrix {info.index}: spectral abscissa {info.spectral_abscissa:.6g} "
            f"is not below -eps = {-eps:.6g}"
        )
    return ExpSpectrum.from_values(shifted)


def step_bound(family: MatrixFamily, eps: float, tol: float = 1e-9) -> StepEstimate:
    """Certified Euler step for the family at margin eps.

    Per matrix: bound = 2 eps / (m2(h) + 2 eps^2) with h the shifted spectrum;
    the certified aggregate takes the minimum.  The uniform bound
    2 eps / (r^2 m(2, n)) uses the worst-case constant of the dimension; the
    sharper intermediate 2 eps / ((r - eps)^2 m(2, n) + 2 eps^2) is reported
    as informational.
    """
    per = []
    radius = 0.0
    for i, a in enumerate(family.matrices):
        info = spectrum(a, index=i)
        h = shifted_spectrum(info, eps)
        m2 = markov_constant(h, 2, tol).value
        per.append(PerMatrixBound(index=i, shifted=h, m2=m2,
                                  bound=2.0 * eps / (m2 + 2.0 * eps * eps)))
        radius = max(radius, info.spectral_radius)
    uniform_constant = m_uniform(2, family.dimension, tol).value
    bounds = [b.bound for b in per]
    return StepEstimate(
        eps=eps,
        dimension=family.dimension,
        per_matrix=tuple(per),
        tau_individual=min(bounds),
        tau_individual_max=max(bounds),
        tau_uniform=2.0 * eps / (radius ** 2 * uniform_constant),
        tau_uniform_informational=2.0 * eps
        / ((radius - eps) ** 2 * uniform_constant + 2.0 * eps * eps),
        spectral_radius_max=radius,
        uniform_constant=uniform_constant,
    )


def discretize(a, tau: float) -> np.ndarray:
    """Euler transition matrix I + tau A (tau >= 0)."""
    arr = np.asarray(a, dtype=float)
    if not (math.isfinite(tau) and tau >= 0):
        raise ValueError("tau must be finite and >= 0")
    return np.eye(arr.shape[0]) + tau * arr


def per_matrix_contraction_check(family: MatrixFamily, tau: float) -> ContractionReport:
    """Spectral radius of I + tau A for each member, against the < 1 threshold.

    This is a necessary condition for stability of the switched discrete
    system (it is the one-matrix restriction), not a sufficient one.
    """
    if not (math.isfinite(tau) and tau >= 0):
        raise ValueError("tau must be finite and >= 0")
    entries = []
    for i, a in enumerate(family.matrices):
        radius = float(np.max(np.abs(np.linalg.eigvals(discretize(a, tau)))))
        entries.append(ContractionEntry(index=i, radius=radius,
                                        contracting=radius < 1.0))
    return ContractionReport(tau=tau, entries=tuple(entries))


@dataclass(frozen=True)
class SimulationStats:
    """Aggregate decay statistics of seeded random switching trajectories."""

    tau: float
    steps: int
    trials: int
    seed: int
    final_norms: np.ndarray      # nan for divergent trials
    max_norms: np.ndarray
    exponents: np.ndarray        # (1/K) log ||x(K)||, nan for divergent trials
    divergent: int

    @property
    def decayed(self) -> int:
        with np.errstate(invalid="ignore"):
            return int(np.sum(self.final_norms < 1.0))

    @property
    def all_decayed(self) -> bool:
        return self.divergent == 0 and self.decayed == self.trials

    def to_dict(self) -> dict:
        finite = self.final_norms[np.isfinite(self.final_norms)]
        expo = self.exponents[np.isfinite(self.exponents)]
        return {
            "tau": self.tau,
            "steps": self.steps,
            "trials": self.trials,
            "seed": self.seed,
            "divergent": self.divergent,
            "decayed": self.decayed,
            "max_norm": float(np.max(self.max_norms)),
            "final_norm_mean": float(np.mean(finite)) if finite.size else None,
            "final_norm_max": float(np.max(finite)) if finite.size else None,
            "exponent_mean": float(np.mean(expo)) if expo.size else None,
            "exponent_max": float(np.max(expo)) if expo.size else None,
        }


_OVERFLOW_LIMIT = 1e30
_TRIAL_BLOCK = 512
_STEP_CHUNK = 4096


def simulate(family: MatrixFamily, tau: float, steps: int, trials: int,
             seed: int = 0) -> SimulationStats:
    """Iterate x(k+1) = (I + tau A(k)) x(k) under uniform random switching.

    Trial i draws from its own generator stream (seed, i): first the unit
    initial vector, then the switching indices in fixed chunks, so results
    are bit-reproducible and independent of how trials are batched.  A trial
    whose norm exceeds 1e30 is recorded as divergent and frozen.
    """
    if not (math.isfinite(tau) and tau > 0):
        raise ValueError("tau must be positive and finite")
    if not 1 <= steps <= 10 ** 6:
        raise ValueError("steps must lie in [1, 1e6]")
    if not 1 <= trials <= 10 ** 4:
        raise ValueError("trials must lie in [1, 1e4]")
    mats = np.stack([discretize(a, tau) for a in family.matrices])
    nmat = len(mats)
    dim = family.dimension

    final = np.full(trials, np.nan)
    maxn = np.zeros(trials)
    for start in range(0, trials, _TRIAL_BLOCK):
        stop = min(start + _TRIAL_BLOCK, trials)
        rngs = [np.random.default_rng((seed, i)) for i in range(start, stop)]
        x = np.empty((stop - start, dim))
        for row, rng in enumerate(rngs):
            v = rng.standard_normal(dim)
            nv = np.linalg.norm(v)
            if nv == 0.0:
                v = np.zeros(dim)
                v[0] = 1.0
                nv = 1.0
            x[row] = v / nv
        alive = np.ones(stop - start, dtype=bool)
        running = np.ones(stop - start)
        norms = np.ones(stop - start)
        remaining = steps
        while remaining > 0:
            chunk = min(_STEP_CHUNK, remaining)
            draw = np.stack([rng.integers(0, nmat, chunk) for rng in rngs])
            for s in range(chunk):
                x = np.einsum("bij,bj->bi", mats[draw[:, s]], x)
                norms = np.sqrt(np.einsum("bi,bi->b", x, x))
                running = np.maximum(running, norms)
                blown = alive & (norms > _OVERFLOW_LIMIT)
                if np.any(blown):
                    x[blown] = 0.0
                    norms[blown] = 0.0
                    alive &= ~blown
            remaining -= chunk
        final[start:stop][alive] = norms[alive]
        maxn[start:stop] = running

    divergent = int(np.sum(np.isnan(final)))
    with np.errstate(divide="ignore", invalid="ignore"):
        exponents = np.log(np.maximum(final, 5e-324)) / steps
    return SimulationStats(tau=tau, steps=steps, trials=trials, seed=seed,
                           final_norms=final, max_norms=maxn,
                           exponents=exponents, divergent=divergent)
