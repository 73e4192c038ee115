"""Exact time-dependent Schrodinger evolution for small driven spin systems.

Serves as the ground-truth oracle for the averaged-Hamiltonian engine: it
propagates the lab-frame state under H(t) = H0 + V(t) with unitary
piecewise-midpoint exponentials, records the rotated (gauge-frame) state
phi(t) = exp(i K(t)) psi(t) built from the lowest-order kick, and compares
against evolution under a static effective operator.

The propagator applies exp(-i H(t_mid) dt) on every substep via an exact
eigendecomposition, so each step is unitary to roundoff and norm drift never
contaminates frequency-scaling measurements.  Step counts are calibrated per
run by Richardson-style halving until the first cycle converges below the
configured tolerance.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping

import numpy as np

from .models import SpinModel
from .pauli import PauliString, SpinOperator, to_dense
from .pulses import PulseProfile

__all__ = [
    "SimConfig",
    "Trajectory",
    "ErrorReport",
    "DressedSeries",
    "evolve_exact",
    "evolve_effective",
    "compare_frames",
    "dressed_observable",
    "propagate_piecewise",
    "exchange_frequency_fit",
    "SimulationError",
    "SIM_SITE_CAP",
]

SIM_SITE_CAP = 10

_NAMED_STATES = ("polarized", "neel", "staggered", "plus_x")


class SimulationError(RuntimeError):
    """Integrator failure: step underflow or norm drift past tolerance."""


@dataclass(frozen=True, eq=False)
class SimConfig:
    """One exact-evolution run.

    sample:
        ``stroboscopic`` records at full-cycle boundaries (where the kick
        vanishes), ``subcycle`` at every subcycle boundary, ``dense`` at
        ``samples_per_subcycle`` uniform points inside each subcycle.
    """

    model: SpinModel
    profile: PulseProfile
    n_cycles: int
    initial_state: str | np.ndarray = "neel"
    sample: str = "stroboscopic"
    samples_per_subcycle: int = 16
    tolerance: float = 1e-10
    min_substeps: int = 32
    max_substeps: int = 1 << 16

    def __post_init__(self):
        if self.model.n_sites > SIM_SITE_CAP:
            raise ValueError(f"simulator is capped at {SIM_SITE_CAP} sites (got {self.model.n_sites})")
        if self.n_cycles < 1:
            raise ValueError("need at least one cycle")
        if self.sample not in ("stroboscopic", "subcycle", "dense"):
            raise ValueError(f"unknown sample mode {self.sample!r}")
        if isinstance(self.initial_state, str):
            if self.initial_state not in _NAMED_STATES:
                raise ValueError(f"unknown initial state {self.initial_state!r}")
        else:
            vec = np.asarray(self.initial_state, dtype=complex).ravel()
            if vec.size != 2**self.model.n_sites:
                raise ValueError("initial state vector has the wrong dimension")
            norm = np.linalg.norm(vec)
            if norm == 0:
                raise ValueError("initial state must not be the zero vector")
            vec = vec / norm
            vec.setflags(write=False)
            object.__setattr__(self, "initial_state", vec)

    @property
    def omega(self) -> float:
        return self.profile.omega

    def initial_vector(self) -> np.ndarray:
        n = self.model.n_sites
        if not isinstance(self.initial_state, str):
            return self.initial_state.copy()
        dim = 2**n
        if self.initial_state == "polarized":
            vec = np.zeros(dim, dtype=complex)
            vec[0] = 1.0
            return vec
        if self.initial_state in ("neel", "staggered"):
            # down spins on odd sites; site 0 is the most significant bit
            index = 0
            for site in range(n):
                if site % 2 == 1:
                    index |= 1 << (n - 1 - site)
            vec = np.zeros(dim, dtype=complex)
            vec[index] = 1.0
            return vec
        # plus_x: product of (|up> + |down>)/sqrt(2)
        return np.full(dim, 2.0 ** (-n / 2), dtype=complex)

    def cache_key(self) -> str:
        m = self.model
        parts = [
            f"graph={np.array2string(m.graph.matrix, precision=17, separator=',')}",
            f"jp={m.j_perp};jz={m.j_z};two={m.is_two_scale}",
            f"shape={self.profile.shape.kind};amp={self.profile.shape.amplitude!r}",
            f"v={self.profile.strength!r};T={self.profile.subcycle_time!r}",
            f"sched={[(s.axes, s.sites) for s in self.profile.schedule]!r}",
            f"cycles={self.n_cycles};sample={self.sample};sps={self.samples_per_subcycle}",
            f"tol={self.tolerance!r};state={self.initial_state if isinstance(self.initial_state, str) else self.initial_state.tobytes().hex()}",
        ]
        return hashlib.sha256("|".join(parts).encode()).hexdigest()[:24]


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Sampled evolution: lab-frame and gauge-frame states at the sample times."""

    times: np.ndarray
    lab: np.ndarray  # (n_samples, dim)
    gauge: np.ndarray
    n_sites: int
    period: float
    substeps_per_subcycle: int = 0

    @property
    def dim(self) -> int:
        return self.lab.shape[1]

    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.lab, axis=1)

    def expectation(self, observable: SpinOperator, frame: str = "gauge") -> np.ndarray:
        """Real expectation series of a Hermitian observable."""
        observable.require_hermitian()
        mat = to_dense(observable, self.n_sites)
        states = self.gauge if frame == "gauge" else self.lab
        return np.real(np.einsum("ti,ij,tj->t", states.conj(), mat, states))

    def magnetization(self, axis: int, frame: str = "gauge") -> np.ndarray:
        """Per-site <sigma_axis> as an (n_samples, n_sites) array."""
        cols = [self.expectation(SpinOperator.single(axis, j), frame) for j in range(self.n_sites)]
        return np.stack(cols, axis=1)

    def correlation(self, axis: int, i: int, j: int, frame: str = "gauge") -> np.ndarray:
        """Two-point correlator <sigma_axis(i) sigma_axis(j)>."""
        op = SpinOperator([(PauliString({i: axis, j: axis}), 1.0)])
        return self.expectation(op, frame)

    def fidelity_against(self, reference: "Trajectory", frame: str = "gauge") -> np.ndarray:
        a = self.gauge if frame == "gauge" else self.lab
        b = reference.gauge if frame == "gauge" else reference.lab
        return np.abs(np.einsum("ti,ti->t", a.conj(), b)) ** 2

    def save(self, path) -> None:
        np.savez_compressed(path, times=self.times, lab=self.lab, gauge=self.gauge,
                            meta=np.array([self.n_sites, self.period, self.substeps_per_subcycle]))

    @classmethod
    def load(cls, path) -> "Trajectory":
        data = np.load(path)
        n_sites, period, sub = data["meta"]
        return cls(times=data["times"], lab=data["lab"], gauge=data["gauge"],
                   n_sites=int(n_sites), period=float(period), substeps_per_subcycle=int(sub))


# Gauss-Legendre nodes and weights of the fourth-order two-exponential
# commutator-free scheme; each substep applies
#   exp(-i dt (a2 H1 + a1 H2)) exp(-i dt (a1 H1 + a2 H2))
# with H_{1,2} sampled at the nodes.  Both factors are exponentials of
# Hermitian matrices, so every substep is exactly unitary.
_CF4_NODES = (0.5 - math.sqrt(3.0) / 6.0, 0.5 + math.sqrt(3.0) / 6.0)
_CF4_A1 = 0.25 + math.sqrt(3.0) / 6.0
_CF4_A2 = 0.25 - math.sqrt(3.0) / 6.0


def _expi(h: np.ndarray, scale: complex) -> np.ndarray:
    """exp(scale * h) for Hermitian h via eigendecomposition (unitary for imaginary scale)."""
    w, q = np.linalg.eigh(h)
    return (q * np.exp(scale * w)) @ q.conj().T


def propagate_piecewise(
    h_of_t: Callable[[float], np.ndarray],
    psi: np.ndarray,
    t0: float,
    t1: float,
    n_steps: int,
    order: int = 4,
) -> np.ndarray:
    """Propagate psi over [t0, t1] with n_steps fixed substeps.

    order 4 uses the two-exponential commutator-free scheme above; order 2
    uses a single midpoint exponential.  Both are exactly unitary per substep.
    """
    dt = (t1 - t0) / n_steps
    if dt <= 0:
        raise SimulationError("non-positive step in propagation window")
    out = psi.copy()
    for i in range(n_steps):
        t = t0 + i * dt
        if order == 2:
            out = _expi(h_of_t(t + 0.5 * dt), -1j * dt) @ out
        else:
            h1 = h_of_t(t + _CF4_NODES[0] * dt)
            h2 = h_of_t(t + _CF4_NODES[1] * dt)
            out = _expi(_CF4_A2 * h1 + _CF4_A1 * h2, -1j * dt) @ (
                _expi(_CF4_A1 * h1 + _CF4_A2 * h2, -1j * dt) @ out
            )
    return out


def _drive_terms(config: SimConfig):
    """Dense generator and weak-term operators, cached per subcycle."""
    n = config.model.n_sites
    gens = [to_dense(sub.generator(n), n) for sub in config.profile.schedule]
    weak = [(to_dense(SpinOperator.single(t.axis, t.site), n), t.amplitude) for t in config.profile.weak_terms]
    return gens, weak


def _subcycle_hamiltonian(config, h0d, gens, weak, k):
    """H on subcycle k (schedule index) as a function of the local fraction u."""
    shape = config.profile.shape
    v_omega = config.profile.strength * config.profile.omega
    gen = gens[k]
    t_base = k * config.profile.subcycle_time

    def h_of_u(u):
        h = h0d + (v_omega * float(shape.g(u))) * gen
        if weak:
            t = t_base + u * config.profile.subcycle_time
            for mat, f in weak:
                h = h + float(f(t)) * mat
        return h

    return h_of_u


def _subcycle_template(config, h_of_u, n_sub, record_at):
    """Substep the template subcycle once; the drive is periodic so the
    resulting propagator (and partial products at the recorded fractions)
    are reused for every later cycle.

    Returns (full subcycle propagator, {fraction: partial propagator}).
    """
    dim = 2 ** config.model.n_sites
    u_mat = np.eye(dim, dtype=complex)
    partials = {}
    du = 1.0 / n_sub
    t_sub = config.profile.subcycle_time
    want = sorted(record_at)
    w_i = 0
    for i in range(n_sub):
        u0 = i * du
        h1 = h_of_u(u0 + _CF4_NODES[0] * du)
        h2 = h_of_u(u0 + _CF4_NODES[1] * du)
        dt = du * t_sub
        step = _expi(_CF4_A2 * h1 + _CF4_A1 * h2, -1j * dt) @ _expi(_CF4_A1 * h1 + _CF4_A2 * h2, -1j * dt)
        u_mat = step @ u_mat
        u_next = (i + 1) * du
        while w_i < len(want) and want[w_i] <= u_next + 0.25 * du:
            partials[want[w_i]] = u_mat.copy()
            w_i += 1
    return u_mat, partials


def _build_templates(config, h0d, gens, weak, n_sub, record_at):
    props = []
    partials = []
    for k in range(config.profile.n_subcycles):
        h_of_u = _subcycle_hamiltonian(config, h0d, gens, weak, k)
        u_mat, part = _subcycle_template(config, h_of_u, n_sub, record_at)
        props.append(u_mat)
        partials.append(part)
    return props, partials


def _calibrate_substeps(config, h0d, gens, weak) -> int:
    """Richardson halving on the whole-cycle propagator until converged."""
    n = config.min_substeps
    if config.sample == "dense":
        n = max(n, config.samples_per_subcycle)
        while n % config.samples_per_subcycle:
            n += 1

    def cycle_propagator(steps):
        props, _ = _build_templates(config, h0d, gens, weak, steps, ())
        full = props[0]
        for p in props[1:]:
            full = p @ full
        return full

    coarse = cycle_propagator(n)
    while True:
        fine = cycle_propagator(2 * n)
        err = float(np.linalg.norm(fine - coarse, ord=2))
        if err < config.tolerance:
            return 2 * n
        n *= 2
        if n > config.max_substeps:
            raise SimulationError(f"step halving hit the cap at {n} substeps/subcycle (cycle error {err:.3e})")
        coarse = fine


def _kick_rotation(config, gens_eigh, k, u):
    """exp(+i K(t)) for schedule subcycle k at local fraction u, or None when K = 0."""
    g_val = float(config.profile.shape.g_integral(u))
    coeff = config.profile.strength * g_val
    if coeff == 0.0:
        return None
    w, q = gens_eigh[k]
    return (q * np.exp(1j * coeff * w)) @ q.conj().T


def evolve_exact(config: SimConfig) -> Trajectory:
    """Propagate the driven system and record lab- and gauge-frame states.

    The drive is periodic, so each subcycle's propagator is substepped once
    and reused across cycles; the run cost is dominated by the template
    construction, not the cycle count.
    """
    n = config.model.n_sites
    h0d = to_dense(config.model.hamiltonian(), n)
    gens, weak = _drive_terms(config)
    gens_eigh = [np.linalg.eigh(g) for g in gens]
    psi = config.initial_vector()

    n_sub = _calibrate_substeps(config, h0d, gens, weak)

    if config.sample == "dense":
        sps = config.samples_per_subcycle
        fractions = tuple(i / sps for i in range(1, sps))
    else:
        fractions = ()
    props, partials = _build_templates(config, h0d, gens, weak, n_sub, fractions)

    n_cyc = config.n_cycles
    n_subcycles = config.profile.n_subcycles
    t_sub = config.profile.subcycle_time

    lab_states = []
    gauge_states = []

    # march subcycle by subcycle, sampling according to the mode
    dense = config.sample == "dense"
    subcycle_mode = config.sample == "subcycle"
    strobo = config.sample == "stroboscopic"
    time_list = []

    def emit(k_total, k_sched, u, state):
        time_list.append((k_total + u) * t_sub)
        lab_states.append(state)
        rot = _kick_rotation(config, gens_eigh, k_sched, u)
        gauge_states.append(state if rot is None else rot @ state)

    emit(0, 0, 0.0, psi)
    for k_total in range(n_cyc * n_subcycles):
        k_sched = k_total % n_subcycles
        if dense:
            for u in fractions:
                emit(k_total, k_sched, u, partials[k_sched][u] @ psi)
        psi = props[k_sched] @ psi
        boundary_is_sample = (
            subcycle_mode
            or dense
            or (strobo and (k_total + 1) % n_subcycles == 0)
        )
        if boundary_is_sample:
            emit(k_total + 1, (k_sched + 1) % n_subcycles, 0.0, psi)

    times = np.array(time_list)
    lab = np.array(lab_states)
    gauge = np.array(gauge_states)

    drift = float(np.max(np.abs(np.linalg.norm(lab, axis=1) - 1.0)))
    if drift > 10.0 * config.tolerance:
        raise SimulationError(f"norm drift {drift:.3e} exceeds ten times the tolerance")

    return Trajectory(times=times, lab=lab, gauge=gauge, n_sites=n,
                      period=config.profile.period, substeps_per_subcycle=n_sub)


def evolve_effective(effective, config: SimConfig) -> Trajectory:
    """Evolve under a static effective operator on the same sample grid.

    One eigendecomposition gives the propagator at every sample time exactly,
    so this side of any comparison is machine-precision.  ``effective`` may
    be a SpinOperator or anything with an ``operator`` attribute.
    """
    op = effective.operator if hasattr(effective, "operator") else effective
    n = config.model.n_sites
    mat = to_dense(op.require_hermitian(), n)
    w, q = np.linalg.eigh(mat)
    psi0 = config.initial_vector()

    if config.sample == "stroboscopic":
        times = np.array([c * config.profile.period for c in range(config.n_cycles + 1)])
    elif config.sample == "subcycle":
        total = config.n_cycles * config.profile.n_subcycles
        times = np.array([k * config.profile.subcycle_time for k in range(total + 1)])
    else:
        sps = config.samples_per_subcycle
        total = config.n_cycles * config.profile.n_subcycles
        times = np.array(
            [(k + i / sps) * config.profile.subcycle_time for k in range(total) for i in range(sps)]
            + [config.n_cycles * config.profile.period]
        )

    coeff = q.conj().T @ psi0
    states = (q @ (np.exp(-1j * np.outer(w, times)) * coeff[:, None])).T
    return Trajectory(times=times, lab=states, gauge=states, n_sites=n, period=config.profile.period)


@dataclass(frozen=True)
class ErrorReport:
    """Per-sample disagreement between two trajectories on a shared grid."""

    times: np.ndarray
    infidelity: np.ndarray
    max_infidelity: float
    mean_infidelity: float
    final_infidelity: float
    observable_deviation: Mapping[str, np.ndarray] = field(default_factory=dict)
    dressed_deviation: Mapping[str, float] = field(default_factory=dict)


def compare_frames(
    exact: Trajectory,
    effective: Trajectory,
    observables: Mapping[str, SpinOperator] | None = None,
) -> ErrorReport:
    """Gauge-frame infidelity and observable deviations, sample by sample.

    Infidelity is 1 - |<phi_exact | phi_eff>|^2.  Dressed deviations compare
    whole-trajectory time averages of each observable, the quantity the
    averaged description is actually supposed to reproduce.
    """
    if exact.times.shape != effective.times.shape or not np.allclose(exact.times, effective.times, rtol=1e-12, atol=1e-12):
        raise ValueError("trajectories were sampled on different grids")
    overlap = np.einsum("ti,ti->t", exact.gauge.conj(), effective.gauge)
    infid = np.clip(1.0 - np.abs(overlap) ** 2, 0.0, None)
    obs_dev = {}
    dressed = {}
    for name, op in (observables or {}).items():
        a = exact.expectation(op, frame="gauge")
        b = effective.expectation(op, frame="gauge")
        obs_dev[name] = a - b
        dressed[name] = float(abs(np.mean(a) - np.mean(b)))
    return ErrorReport(
        times=exact.times,
        infidelity=infid,
        max_infidelity=float(np.max(infid)),
        mean_infidelity=float(np.mean(infid)),
        final_infidelity=float(infid[-1]),
        observable_deviation=obs_dev,
        dressed_deviation=dressed,
    )


@dataclass(frozen=True)
class DressedSeries:
    times: np.ndarray
    values: np.ndarray
    cycle_times: np.ndarray
    cycle_means: np.ndarray


def dressed_observable(traj: Trajectory, observable: SpinOperator) -> DressedSeries:
    """Gauge-frame expectation series plus whole-cycle running averages.

    Whole cycles only: the averaged description holds in the time-average
    sense, so partial-cycle windows are never emitted.
    """
    values = traj.expectation(observable, frame="gauge")
    cycle_idx = np.floor(traj.times / traj.period + 1e-9).astype(int)
    last = cycle_idx.max()
    means = []
    centers = []
    for c in range(last):
        sel = (cycle_idx == c) | (np.abs(traj.times - (c + 1) * traj.period) < 1e-12 * max(traj.period, 1.0))
        if np.count_nonzero(cycle_idx == c) == 0:
            continue
        means.append(float(np.mean(values[sel])))
        centers.append((c + 0.5) * traj.period)
    return DressedSeries(traj.times, values, np.array(centers), np.array(means))


def exchange_frequency_fit(traj: Trajectory) -> tuple[float, float]:
    """Transverse coupling extracted from two-site exchange oscillations.

    Projects the gauge-frame states onto the symmetric/antisymmetric
    combinations of |01> and |10>, whose relative phase winds at four times
    the effective transverse coupling.  Returns (coupling, rms residual of
    the linear phase fit).
    """
    if traj.dim != 4:
        raise ValueError("the exchange fit is defined for two-site trajectories")
    plus = np.zeros(4, dtype=complex)
    minus = np.zeros(4, dtype=complex)
    plus[1] = plus[2] = 1.0 / math.sqrt(2.0)
    minus[1] = 1.0 / math.sqrt(2.0)
    minus[2] = -1.0 / math.sqrt(2.0)
    a = traj.gauge @ plus.conj()
    b = traj.gauge @ minus.conj()
    amp = a * np.conj(b)
    good = np.abs(amp) > 1e-12
    if np.count_nonzero(good) < 3:
        raise ValueError("trajectory never populates both exchange states")
    phase = np.unwrap(np.angle(amp[good]))
    t = traj.times[good]
    slope, intercept = np.polyfit(t, phase, 1)
    residual = float(np.sqrt(np.mean((phase - (slope * t + intercept)) ** 2)))
    # E(minus) - E(plus) = 4 j_perp_eff for the exchange block
    return float(-slope / 4.0), residual


def cache_path(directory, config: SimConfig) -> Path:
    """Location of the binary trajectory cache for a config."""
    return Path(directory) / f"traj_{config.cache_key()}.npz"


def evolve_exact_cached(config: SimConfig, directory) -> Trajectory:
    """Exact evolution with on-disk resumption keyed by the config hash."""
    path = cache_path(directory, config)
    if path.exists():
        return Trajectory.load(path)
    traj = evolve_exact(config)
    path.parent.mkdir(parents=True, exist_ok=True)
    traj.save(path)
    return traj
