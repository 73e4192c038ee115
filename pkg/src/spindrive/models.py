"""Static two-body spin Hamiltonians on coupling graphs.

Builds operators of the form

    H = 1/2 sum_{j != j'} [ J1_{jj'} x_j x_j' + J2_{jj'} y_j y_j' + J3_{jj'} z_j z_j' ]

where the double-counted pair sum means each unordered pair contributes its
coupling once.  The common two-scale family (XXZ and its XY / Ising /
Heisenberg limits) uses per-axis scales (j_perp, j_perp, j_z) on a shared
dimensionless graph; fully general per-axis matrices are also supported.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .pauli import PauliString, SpinOperator

__all__ = [
    "CouplingGraph",
    "SpinModel",
    "dipolar_couplings",
    "nearest_neighbor_couplings",
    "build_hamiltonian",
    "bipartite_gauge_flip",
]


@dataclass(frozen=True, eq=False)
class CouplingGraph:
    """Symmetric dimensionless couplings V_{jj'} with zero diagonal."""

    matrix: np.ndarray
    label: str = "explicit"

    def __post_init__(self):
        v = np.asarray(self.matrix, dtype=float)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValueError("coupling matrix must be square")
        if v.shape[0] < 1:
            raise ValueError("graph needs at least one site")
        if not np.allclose(v, v.T, atol=1e-12):
            raise ValueError("coupling matrix must be symmetric")
        if np.any(np.abs(np.diag(v)) > 0):
            raise ValueError("self-couplings V_{jj} must vanish")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "matrix", v)

    @property
    def n_sites(self) -> int:
        return self.matrix.shape[0]

    def pairs(self) -> Iterable[tuple[int, int, float]]:
        """Unordered pairs (j, j', V) with nonzero coupling."""
        n = self.n_sites
        for i in range(n):
            for j in range(i + 1, n):
                v = self.matrix[i, j]
                if v != 0.0:
                    yield i, j, float(v)


def dipolar_couplings(n_sites: int) -> CouplingGraph:
    """V_{jj'} = |j - j'|^-3 on a unit-spaced chain."""
    if n_sites < 2:
        raise ValueError("dipolar chain needs at least two sites")
    idx = np.arange(n_sites)
    dist = np.abs(idx[:, None] - idx[None, :]).astype(float)
    with np.errstate(divide="ignore"):
        v = dist**-3.0
    np.fill_diagonal(v, 0.0)
    return CouplingGraph(v, label="dipolar_chain")


def nearest_neighbor_couplings(n_sites: int) -> CouplingGraph:
    """V_{jj'} = 1 for |j - j'| = 1 on a chain, else 0."""
    if n_sites < 2:
        raise ValueError("chain needs at least two sites")
    v = np.zeros((n_sites, n_sites))
    for i in range(n_sites - 1):
        v[i, i + 1] = v[i + 1, i] = 1.0
    return CouplingGraph(v, label="nearest_neighbor_chain")


@dataclass(frozen=True, eq=False)
class SpinModel:
    """A two-body spin model over a coupling graph.

    Either the two-scale form (``j_perp``, ``j_z``, couplings J^{1,2} =
    j_perp*V and J^3 = j_z*V) or explicit per-axis matrices may be given.
    """

    graph: CouplingGraph
    j_perp: float | None = None
    j_z: float | None = None
    axis_matrices: tuple[np.ndarray, np.ndarray, np.ndarray] | None = field(default=None, repr=False)

    def __post_init__(self):
        two_scale = self.j_perp is not None or self.j_z is not None
        if two_scale == (self.axis_matrices is not None):
            raise ValueError("give either (j_perp, j_z) or axis_matrices, not both")
        if two_scale:
            object.__setattr__(self, "j_perp", float(self.j_perp or 0.0))
            object.__setattr__(self, "j_z", float(self.j_z or 0.0))
        else:
            mats = tuple(np.asarray(m, dtype=float) for m in self.axis_matrices)
            n = self.graph.n_sites
            for m in mats:
                if m.shape != (n, n):
                    raise ValueError("axis matrices must match the graph size")
                if not np.allclose(m, m.T, atol=1e-12):
                    raise ValueError("axis coupling matrices must be symmetric")
            object.__setattr__(self, "axis_matrices", mats)

    # -- named constructors --------------------------------------------------

    @classmethod
    def xxz(cls, graph: CouplingGraph, j_perp: float, j_z: float) -> "SpinModel":
        return cls(graph, j_perp=j_perp, j_z=j_z)

    @classmethod
    def xy(cls, graph: CouplingGraph, j_perp: float) -> "SpinModel":
        return cls(graph, j_perp=j_perp, j_z=0.0)

    @classmethod
    def ising(cls, graph: CouplingGraph, j_z: float) -> "SpinModel":
        return cls(graph, j_perp=0.0, j_z=j_z)

    @classmethod
    def heisenberg(cls, graph: CouplingGraph, j: float) -> "SpinModel":
        return cls(graph, j_perp=j, j_z=j)

    @classmethod
    def general(cls, graph: CouplingGraph, j1, j2, j3) -> "SpinModel":
        return cls(graph, axis_matrices=(np.asarray(j1), np.asarray(j2), np.asarray(j3)))

    # -- structure -------------------------------------------------------------

    @property
    def is_two_scale(self) -> bool:
        return self.axis_matrices is None

    @property
    def n_sites(self) -> int:
        return self.graph.n_sites

    @property
    def anisotropy(self) -> float:
        """s = j_z / j_perp for two-scale models."""
        if not self.is_two_scale:
            raise ValueError("anisotropy is defined for two-scale models only")
        if self.j_perp == 0.0:
            return float("inf") if self.j_z != 0.0 else float("nan")
        return self.j_z / self.j_perp

    def axis_coupling(self, axis: int) -> np.ndarray:
        if self.is_two_scale:
            scale = self.j_perp if axis in (1, 2) else self.j_z
            return scale * self.graph.matrix
        return self.axis_matrices[axis - 1]

    # -- operator construction ---------------------------------------------

    def hamiltonian(self) -> SpinOperator:
        return build_hamiltonian(self)

    def xy_part(self) -> SpinOperator:
        """The sigma-x sigma-x + sigma-y sigma-y portion (axes 1, 2)."""
        terms = []
        n = self.n_sites
        for axis in (1, 2):
            j = self.axis_coupling(axis)
            for a in range(n):
                for b in range(a + 1, n):
                    if j[a, b] != 0.0:
                        terms.append((PauliString({a: axis, b: axis}), j[a, b]))
        return SpinOperator(terms)

    def zz_part(self) -> SpinOperator:
        n = self.n_sites
        j = self.axis_coupling(3)
        terms = []
        for a in range(n):
            for b in range(a + 1, n):
                if j[a, b] != 0.0:
                    terms.append((PauliString({a: 3, b: 3}), j[a, b]))
        return SpinOperator(terms)


def build_hamiltonian(model: SpinModel) -> SpinOperator:
    """Assemble the model's SpinOperator; Hermitian for real couplings."""
    n = model.n_sites
    terms = []
    for axis in (1, 2, 3):
        j = model.axis_coupling(axis)
        for a in range(n):
            for b in range(a + 1, n):
                if j[a, b] != 0.0:
                    terms.append((PauliString({a: axis, b: axis}), j[a, b]))
    return SpinOperator(terms).require_hermitian()


def bipartite_gauge_flip(h: SpinOperator, sublattice: Iterable[int]) -> SpinOperator:
    """Conjugate ``h`` by the product of sigma-z over ``sublattice``.

    Flips the sign of every x and y Pauli on the chosen sites, which on a
    bipartite nearest-neighbor model flips the sign of the transverse
    coupling relative to the longitudinal one while preserving the spectrum.
    The map is an involution.
    """
    sub = frozenset(sublattice)
    flipped = {}
    for string, coeff in h:
        parity = sum(1 for site, axis in string.pairs if site in sub and axis in (1, 2))
        flipped[string] = -coeff if parity % 2 else coeff
    return SpinOperator(flipped)
