"""Periodic driving pulses and their integrated statistics.

A drive is a cycle of N non-overlapping subcycles of duration T; during
subcycle k one axis (or a fixed axis combination) is pulsed on a site set
with a shared dimensionless shape g(t) scaled by strength v and frequency
omega = 2*pi/T.  The integrated amplitude

    G(t) = omega * integral of g from the subcycle start

is the only statistic of the pulse the averaged-Hamiltonian machinery needs,
through the time averages of its even powers, mean(G^{2p}).

Two averaging windows for those means are meaningful and they differ by the
factor 1/N: ``subcycle`` averages over the T-window where the axis is
active, ``full_cycle`` over the whole N*T cycle.  The window is always an
explicit argument; downstream results carry it as metadata.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, interpolate

from .pauli import PauliString, SpinOperator

__all__ = [
    "Convention",
    "PulseShape",
    "Subcycle",
    "PulseProfile",
    "MomentTable",
    "WeakTerm",
    "pulse_integral",
    "kick_operator",
    "compute_moments",
    "verify_cyclicity",
    "is_factorizable",
    "CyclicityReport",
    "FactorizationReport",
    "QuadratureError",
]

_TWO_PI = 2.0 * math.pi


class Convention(str, enum.Enum):
    """Averaging window for the mean(G^{2p}) moments."""

    SUBCYCLE = "subcycle"
    FULL_CYCLE = "full_cycle"


class QuadratureError(RuntimeError):
    """Numerical moment integration failed to converge."""


def _sin_2pi(u):
    """sin(2*pi*u) with exact zeros at multiples of 1/2.

    Folding the argument into [0, 1/4] keeps the half-wave antisymmetry of
    the integrated cosine pulse exact, so kicks vanish identically at
    subcycle boundaries and midpoints.
    """
    u = np.asarray(u, dtype=float)
    r = np.mod(2.0 * u, 2.0)  # half-periods
    sign = np.where(r >= 1.0, -1.0, 1.0)
    r = np.where(r >= 1.0, r - 1.0, r)  # now in [0, 1)
    r = np.where(r > 0.5, 1.0 - r, r)  # fold to [0, 1/2]
    out = sign * np.sin(np.pi * r)
    return out if out.ndim else float(out)


def _square_g(u):
    u = np.mod(np.asarray(u, dtype=float), 1.0)
    return np.where((u < 0.25) | (u >= 0.75), 1.0, -1.0)


def _square_integral(u):
    """Triangle wave: peak pi/2 at u = 1/4, -pi/2 at 3/4, zeros at 0, 1/2, 1."""
    u = np.asarray(u, dtype=float)
    r = np.mod(u, 1.0)
    out = np.where(
        r < 0.25,
        _TWO_PI * r,
        np.where(r < 0.75, math.pi / 2 - _TWO_PI * (r - 0.25), -math.pi / 2 + _TWO_PI * (r - 0.75)),
    )
    return out if out.ndim else float(out)


@dataclass(frozen=True, eq=False)
class PulseShape:
    """One subcycle's dimensionless profile g on the unit interval.

    kind:
        ``cosine``    g(u) = cos(2*pi*u)
        ``square``    the three-segment +1/-1/+1 profile
        ``tabulated`` uniformly sampled values over [0, 1)
        ``zero``      no drive
    amplitude:
        multiplicative scale applied to g (and hence to G).
    """

    kind: str
    amplitude: float = 1.0
    samples: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in ("cosine", "square", "tabulated", "zero"):
            raise ValueError(f"unknown pulse shape {self.kind!r}")
        if self.kind == "tabulated":
            s = np.asarray(self.samples, dtype=float)
            if s.ndim != 1 or s.size < 4:
                raise ValueError("tabulated shape needs a 1-d array of at least 4 samples")
            s = s.copy()
            s.setflags(write=False)
            object.__setattr__(self, "samples", s)
        elif self.samples is not None:
            raise ValueError("samples are only meaningful for tabulated shapes")

    # -- constructors --------------------------------------------------------

    @classmethod
    def cosine(cls, amplitude: float = 1.0) -> "PulseShape":
        return cls("cosine", amplitude)

    @classmethod
    def square(cls, amplitude: float = 1.0) -> "PulseShape":
        return cls("square", amplitude)

    @classmethod
    def zero(cls) -> "PulseShape":
        return cls("zero", 0.0)

    @classmethod
    def tabulated(cls, samples, amplitude: float = 1.0) -> "PulseShape":
        return cls("tabulated", amplitude, np.asarray(samples, dtype=float))

    @classmethod
    def from_file(cls, path, amplitude: float = 1.0) -> "PulseShape":
        """Load a two-column text file: time fraction in [0, 1), value; uniform grid."""
        data = np.loadtxt(path)
        if data.ndim != 2 or data.shape[1] != 2:
            raise ValueError("tabulated pulse file must have two columns")
        u, g = data[:, 0], data[:, 1]
        step = np.diff(u)
        if step.size == 0 or not np.allclose(step, step[0], rtol=1e-9, atol=1e-12):
            raise ValueError("tabulated pulse requires a uniform time grid")
        if not math.isclose(u[0], 0.0, abs_tol=1e-12) or u[-1] >= 1.0:
            raise ValueError("time fractions must start at 0 and stay below 1")
        return cls.tabulated(g, amplitude)

    # -- evaluation ----------------------------------------------------------

    def _spline(self):
        # periodic cubic interpolant of g; cached lazily on the instance
        sp = getattr(self, "_spline_cache", None)
        if sp is None:
            g = np.concatenate([self.samples, self.samples[:1]])
            u = np.linspace(0.0, 1.0, g.size)
            sp = interpolate.CubicSpline(u, g, bc_type="periodic")
            object.__setattr__(self, "_spline_cache", sp)
        return sp

    def g(self, u):
        """Shape value at unit-interval position(s) u."""
        if self.kind == "cosine":
            return self.amplitude * np.cos(_TWO_PI * np.asarray(u, dtype=float))
        if self.kind == "square":
            return self.amplitude * _square_g(u)
        if self.kind == "zero":
            return np.zeros_like(np.asarray(u, dtype=float))
        return self.amplitude * self._spline()(np.mod(u, 1.0))

    def g_integral(self, u):
        """Integrated amplitude G(u) = 2*pi * integral_0^u g, zero at u = 0."""
        if self.kind == "cosine":
            return self.amplitude * _sin_2pi(u)
        if self.kind == "square":
            return self.amplitude * _square_integral(u)
        if self.kind == "zero":
            return np.zeros_like(np.asarray(u, dtype=float))
        anti = self._spline().antiderivative()
        return self.amplitude * _TWO_PI * (anti(np.clip(u, 0.0, 1.0)) - anti(0.0))

    def g_mean(self) -> float:
        """Mean of g over the subcycle; zero for a cyclic pulse."""
        if self.kind in ("cosine", "square", "zero"):
            return 0.0
        return float(self.amplitude * self._spline().integrate(0.0, 1.0))

    def max_abs_integral(self) -> float:
        """sup |G| over the subcycle."""
        if self.kind == "cosine":
            return abs(self.amplitude)
        if self.kind == "square":
            return abs(self.amplitude) * math.pi / 2
        if self.kind == "zero":
            return 0.0
        u = np.linspace(0.0, 1.0, 4097)
        return float(np.max(np.abs(self.g_integral(u))))

    def subcycle_moment(self, p: int) -> float:
        """mean(G^{2p}) over one subcycle.

        Closed forms: central binomial C(2p, p)/4^p for the cosine shape and
        (pi/2)^{2p} / (2p + 1) for the square's triangle integral; adaptive
        quadrature on the spline antiderivative for tabulated data.
        """
        if p < 1:
            raise ValueError("moment order p must be >= 1")
        a2p = self.amplitude ** (2 * p)
        if self.kind == "cosine":
            return a2p * math.comb(2 * p, p) / 4.0**p
        if self.kind == "square":
            return a2p * (math.pi / 2) ** (2 * p) / (2 * p + 1)
        if self.kind == "zero":
            return 0.0
        anti = self._spline().antiderivative()
        base = anti(0.0)

        def integrand(u):
            return (self.amplitude * _TWO_PI * (anti(u) - base)) ** (2 * p)

        val, err = integrate.quad(integrand, 0.0, 1.0, limit=400, epsabs=1e-13, epsrel=1e-11)
        if err > 1e-8 * max(1.0, abs(val)):
            raise QuadratureError(f"moment quadrature did not converge at p={p} (err {err:.3e})")
        return float(val)


@dataclass(frozen=True)
class Subcycle:
    """One T-window of the schedule: which axes act, with what weights, where.

    ``sites`` is None for a global pulse.  Multiple simultaneous axes share
    the single shape g(t); weights scale it per axis.
    """

    axes: tuple[tuple[int, float], ...]
    sites: tuple[int, ...] | None = None

    def __post_init__(self):
        for axis, _ in self.axes:
            if axis not in (1, 2, 3):
                raise ValueError(f"axis must be 1, 2 or 3, got {axis}")
        if self.sites is not None:
            object.__setattr__(self, "sites", tuple(sorted(set(self.sites))))

    @classmethod
    def single(cls, axis: int, sites=None) -> "Subcycle":
        return cls(axes=((axis, 1.0),), sites=None if sites is None else tuple(sites))

    def generator(self, n_sites: int) -> SpinOperator:
        """The Pauli combination this subcycle pulses, summed over its sites."""
        sites = range(n_sites) if self.sites is None else self.sites
        terms = []
        for axis, weight in self.axes:
            for site in sites:
                terms.append((PauliString({site: axis}), weight))
        return SpinOperator(terms)


@dataclass(frozen=True)
class WeakTerm:
    """A weak (amplitude << omega) additive drive term f(t) * sigma_axis(site).

    Enters the exact simulator only; at the averaged-Hamiltonian order kept
    here it contributes nothing.
    """

    axis: int
    site: int
    amplitude: Callable[[float], float]


@dataclass(frozen=True, eq=False)
class PulseProfile:
    """A full periodic drive: shape, strength, subcycle length and schedule."""

    shape: PulseShape
    strength: float
    subcycle_time: float
    schedule: tuple[Subcycle, ...]
    weak_terms: tuple[WeakTerm, ...] = ()

    def __post_init__(self):
        if self.subcycle_time <= 0:
            raise ValueError("subcycle time must be positive")
        if not self.schedule:
            raise ValueError("schedule must contain at least one subcycle")
        object.__setattr__(self, "schedule", tuple(self.schedule))
        object.__setattr__(self, "weak_terms", tuple(self.weak_terms))

    # -- constructors --------------------------------------------------------

    @classmethod
    def sequential(
        cls,
        shape: PulseShape,
        strength: float,
        subcycle_time: float,
        axes: Sequence[int] = (1, 2),
        sites=None,
    ) -> "PulseProfile":
        """Time-ordered schedule pulsing the listed axes one per subcycle."""
        sched = tuple(Subcycle.single(axis, sites) for axis in axes)
        return cls(shape, strength, subcycle_time, sched)

    @classmethod
    def transverse_pair(cls, shape: PulseShape, strength: float, subcycle_time: float) -> "PulseProfile":
        """The standard two-subcycle global x-then-y drive."""
        return cls.sequential(shape, strength, subcycle_time, axes=(1, 2))

    # -- geometry ------------------------------------------------------------

    @property
    def n_subcycles(self) -> int:
        return len(self.schedule)

    @property
    def period(self) -> float:
        return self.n_subcycles * self.subcycle_time

    @property
    def omega(self) -> float:
        return _TWO_PI / self.subcycle_time

    def locate(self, t: float) -> tuple[int, float]:
        """Subcycle index and local fraction u in [0, 1] for a time in [0, period]."""
        if t < -1e-12 * self.period or t > self.period * (1 + 1e-12):
            raise ValueError(f"time {t} outside the cycle [0, {self.period}]")
        k = int(t / self.subcycle_time)
        if k >= self.n_subcycles:
            k = self.n_subcycles - 1
        u = t / self.subcycle_time - k
        if u < 1e-12:
            u = 0.0
        elif u > 1 - 1e-12:
            u = 1.0
        return k, u


@dataclass(frozen=True)
class MomentTable:
    """mean(G^{2p}) for p = 1..p_max under a declared averaging window."""

    moments: tuple[float, ...]
    convention: Convention
    sup_abs_g: float = float("nan")

    def __post_init__(self):
        if not self.moments:
            raise ValueError("moment table must not be empty")
        if any(m < -1e-15 for m in self.moments):
            raise ValueError("moments of an even power must be non-negative")
        if self.sup_abs_g <= 1.0 + 1e-12:
            diffs = np.diff(self.moments)
            if np.any(diffs > 1e-12 * max(self.moments)):
                raise ValueError("moments must be non-increasing when sup|G| <= 1")

    @property
    def p_max(self) -> int:
        return len(self.moments)

    def moment(self, p: int) -> float:
        return self.moments[p - 1]


def compute_moments(profile: PulseProfile, p_max: int, convention: Convention) -> MomentTable:
    """Moment table of the profile's shape under the chosen averaging window.

    ``full_cycle`` divides each per-subcycle moment by the subcycle count:
    an axis is active for a 1/N fraction of the cycle and G vanishes outside
    its window.
    """
    if p_max < 1:
        raise ValueError("p_max must be >= 1")
    convention = Convention(convention)
    scale = 1.0 / profile.n_subcycles if convention is Convention.FULL_CYCLE else 1.0
    vals = tuple(scale * profile.shape.subcycle_moment(p) for p in range(1, p_max + 1))
    return MomentTable(vals, convention, sup_abs_g=profile.shape.max_abs_integral())


def pulse_integral(profile: PulseProfile, t: float) -> float:
    """Integrated amplitude G at time t, reset to zero at each subcycle start."""
    _, u = profile.locate(t)
    return float(profile.shape.g_integral(u))


def kick_operator(profile: PulseProfile, t: float, n_sites: int) -> SpinOperator:
    """Lowest-order frame generator: strength * G(t) times the active Pauli sum.

    Dimensionless and Hermitian; vanishes at every subcycle boundary by the
    choice of integration constant.  The weak additive terms do not enter.
    """
    k, u = profile.locate(t)
    g_val = float(profile.shape.g_integral(u))
    if g_val == 0.0 or profile.strength == 0.0:
        return SpinOperator.zero()
    return (profile.strength * g_val) * profile.schedule[k].generator(n_sites)


# -- drive diagnostics --------------------------------------------------------


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    residual: float


@dataclass(frozen=True)
class CyclicityReport:
    checks: tuple[CheckResult, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def residual(self, name: str) -> float:
        for c in self.checks:
            if c.name == name:
                return c.residual
        raise KeyError(name)


def verify_cyclicity(profile: PulseProfile, tol: float = 1e-9) -> CyclicityReport:
    """Check the cycle conditions the averaging formalism relies on.

    * each subcycle's shape integrates to zero (so the full cycle does too);
    * the weak additive terms integrate to zero over the cycle;
    * G has half-wave antisymmetry within the subcycle, which kills all odd
      moments.
    """
    checks = []

    sub_res = abs(profile.shape.g_mean())
    checks.append(CheckResult("subcycle_integral", sub_res <= tol, sub_res))

    # strong part of the full-cycle integral: every subcycle shares the shape
    cycle_res = profile.n_subcycles * abs(profile.strength) * sub_res
    for term in profile.weak_terms:
        val, _ = integrate.quad(term.amplitude, 0.0, profile.period, limit=200)
        cycle_res += abs(val) / max(profile.period, 1e-300)
    checks.append(CheckResult("cycle_integral", cycle_res <= tol, cycle_res))

    delta = np.linspace(0.0, 0.5, 513)
    g_plus = np.asarray(profile.shape.g_integral(0.5 + delta))
    g_minus = np.asarray(profile.shape.g_integral(0.5 - delta))
    sym_res = float(np.max(np.abs(g_plus + g_minus)))
    checks.append(CheckResult("half_wave_symmetry", sym_res <= tol, sym_res))

    return CyclicityReport(tuple(checks))


@dataclass(frozen=True)
class FactorizationReport:
    """Outcome of the single-profile test.

    ``factorizable`` is true when the drive can be written as one scalar
    profile times a fixed operator; otherwise ``witness`` holds a pair of
    times whose amplitude vectors are not proportional.
    """

    factorizable: bool
    witness: tuple[float, float] | None
    residual: float


def is_factorizable(profile: PulseProfile, samples_per_subcycle: int = 128, tol: float = 1e-10) -> FactorizationReport:
    """Test whether the strong drive has the form g(t) * (fixed Pauli sum).

    Builds the matrix of per-component amplitudes over sampled times and
    checks it has rank one.  Any time-ordered schedule that pulses more than
    one distinct axis pattern is not factorizable; the returned witness pair
    of times exhibits the violation.
    """
    # component basis: union of (axis, site-or-global) over the schedule
    components: list[tuple[int, int | None]] = []
    for sub in profile.schedule:
        for axis, _ in sub.axes:
            if sub.sites is None:
                key = (axis, None)
                if key not in components:
                    components.append(key)
            else:
                for site in sub.sites:
                    key = (axis, site)
                    if key not in components:
                        components.append(key)
    col = {key: i for i, key in enumerate(components)}

    n_rows = profile.n_subcycles * samples_per_subcycle
    mat = np.zeros((n_rows, len(components)))
    times = np.zeros(n_rows)
    for k, sub in enumerate(profile.schedule):
        for i in range(samples_per_subcycle):
            u = (i + 0.5) / samples_per_subcycle
            row = k * samples_per_subcycle + i
            times[row] = (k + u) * profile.subcycle_time
            g_val = float(profile.shape.g(u))
            for axis, weight in sub.axes:
                if sub.sites is None:
                    mat[row, col[(axis, None)]] = weight * g_val
                else:
                    for site in sub.sites:
                        mat[row, col[(axis, site)]] = weight * g_val

    norms = np.linalg.norm(mat, axis=1)
    scale = float(norms.max())
    if scale == 0.0:
        return FactorizationReport(True, None, 0.0)

    pivot = int(np.argmax(norms))
    unit = mat[pivot] / norms[pivot]
    residuals = np.linalg.norm(mat - np.outer(mat @ unit, unit), axis=1)
    worst = int(np.argmax(residuals))
    rel = float(residuals[worst] / scale)
    if rel <= tol:
        return FactorizationReport(True, None, rel)
    return FactorizationReport(False, (float(times[pivot]), float(times[worst])), rel)
