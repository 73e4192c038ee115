"""Exact algebra of multi-site Pauli operators.

Operators are stored sparsely as weighted sums of Pauli strings, where a
string is a tensor product of single-site Pauli matrices (axis 1 = x,
2 = y, 3 = z; sites not listed carry the identity).  Products, commutators
and nested commutators are evaluated exactly: every coefficient is a sum of
products of the inputs with unit phases {+1, -1, +i, -i}, so no rounding
beyond ordinary float multiplication ever occurs.

All values are immutable after construction and every operation is a pure
function; instances can be shared freely across threads.
"""

from __future__ import annotations

from typing import Iterable, Iterator, Mapping

import numpy as np

__all__ = [
    "PauliString",
    "SpinOperator",
    "multiply",
    "commutator",
    "nested_commutator",
    "to_dense",
    "axis_field",
    "DENSE_SITE_CAP",
    "DROP_TOLERANCE",
]

# Coefficients smaller than this (relative to the largest in the operator)
# are treated as cancellation dust and pruned on canonicalization.
DROP_TOLERANCE = 1e-14

# Default ceiling for dense-matrix expansion (2**12 = 4096 dimensional).
DENSE_SITE_CAP = 12

_AXIS_CHARS = {1: "x", 2: "y", 3: "z"}

# Single-site product table: (a, b) -> (phase, c) with sigma_a sigma_b = phase * sigma_c.
_MUL = {
    (1, 1): (1.0 + 0j, 0),
    (2, 2): (1.0 + 0j, 0),
    (3, 3): (1.0 + 0j, 0),
    (1, 2): (1j, 3),
    (2, 1): (-1j, 3),
    (2, 3): (1j, 1),
    (3, 2): (-1j, 1),
    (3, 1): (1j, 2),
    (1, 3): (-1j, 2),
}

_DENSE_1SITE = {
    0: np.eye(2, dtype=complex),
    1: np.array([[0, 1], [1, 0]], dtype=complex),
    2: np.array([[0, -1j], [1j, 0]], dtype=complex),
    3: np.array([[1, 0], [0, -1]], dtype=complex),
}


class PauliString:
    """A product of single-site Pauli matrices with implicit unit coefficient.

    The empty string is the identity.  Instances are immutable and hashable.
    """

    __slots__ = ("_pairs", "_hash")

    def __init__(self, axes: Mapping[int, int] | Iterable[tuple[int, int]] = ()):
        items = axes.items() if isinstance(axes, Mapping) else axes
        pairs = []
        seen = set()
        for site, axis in items:
            if site < 0 or site != int(site):
                raise ValueError(f"site index must be a non-negative integer, got {site!r}")
            if axis not in (1, 2, 3):
                raise ValueError(f"axis must be 1, 2 or 3, got {axis!r}")
            if site in seen:
                raise ValueError(f"duplicate site index {site}")
            seen.add(site)
            pairs.append((int(site), int(axis)))
        pairs.sort()
        self._pairs = tuple(pairs)
        self._hash = hash(self._pairs)

    @property
    def pairs(self) -> tuple[tuple[int, int], ...]:
        """Sorted (site, axis) pairs."""
        return self._pairs

    @property
    def sites(self) -> tuple[int, ...]:
        return tuple(site for site, _ in self._pairs)

    def axis(self, site: int) -> int:
        """Axis acting on ``site`` (0 for identity)."""
        for s, a in self._pairs:
            if s == site:
                return a
        return 0

    @property
    def is_identity(self) -> bool:
        return not self._pairs

    @property
    def weight(self) -> int:
        """Number of non-identity sites."""
        return len(self._pairs)

    @property
    def max_site(self) -> int:
        """Largest site index touched, -1 for the identity."""
        return self._pairs[-1][0] if self._pairs else -1

    def commutes_with(self, other: "PauliString") -> bool:
        """Two strings commute iff they disagree on an even number of shared sites."""
        clashes = 0
        i = j = 0
        a, b = self._pairs, other._pairs
        while i < len(a) and j < len(b):
            sa, xa = a[i]
            sb, xb = b[j]
            if sa == sb:
                if xa != xb:
                    clashes += 1
                i += 1
                j += 1
            elif sa < sb:
                i += 1
            else:
                j += 1
        return clashes % 2 == 0

    def __eq__(self, other) -> bool:
        return isinstance(other, PauliString) and self._pairs == other._pairs

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        if not self._pairs:
            return "I"
        return "*".join(f"{_AXIS_CHARS[a]}{s}" for s, a in self._pairs)


IDENTITY = PauliString()


def multiply(a: PauliString, b: PauliString) -> tuple[complex, PauliString]:
    """Product of two Pauli strings: a*b = phase * string, phase in {+-1, +-i}."""
    phase = 1.0 + 0j
    out = []
    pa, pb = a.pairs, b.pairs
    i = j = 0
    while i < len(pa) and j < len(pb):
        sa, xa = pa[i]
        sb, xb = pb[j]
        if sa == sb:
            p, c = _MUL[(xa, xb)]
            phase *= p
            if c:
                out.append((sa, c))
            i += 1
            j += 1
        elif sa < sb:
            out.append(pa[i])
            i += 1
        else:
            out.append(pb[j])
            j += 1
    out.extend(pa[i:])
    out.extend(pb[j:])
    return phase, PauliString(out)


class SpinOperator:
    """A complex-weighted sum of Pauli strings in canonical form.

    Canonical means each string appears at most once and coefficients whose
    magnitude falls below ``DROP_TOLERANCE`` times the largest one are
    pruned.  Operators representing Hamiltonians or observables must have
    real coefficients (Pauli strings are Hermitian); use
    :meth:`require_hermitian` to assert this.
    """

    __slots__ = ("_terms",)

    def __init__(
        self,
        terms: Mapping[PauliString, complex] | Iterable[tuple[PauliString, complex]] = (),
        *,
        drop_tolerance: float = DROP_TOLERANCE,
    ):
        items = terms.items() if isinstance(terms, Mapping) else terms
        acc: dict[PauliString, complex] = {}
        for string, coeff in items:
            if string in acc:
                acc[string] += complex(coeff)
            else:
                acc[string] = complex(coeff)
        if acc:
            ceiling = max(abs(c) for c in acc.values())
            cut = drop_tolerance * ceiling
            acc = {s: c for s, c in acc.items() if abs(c) > cut and c != 0}
        self._terms = acc

    # -- constructors ------------------------------------------------------

    @classmethod
    def zero(cls) -> "SpinOperator":
        return cls()

    @classmethod
    def identity(cls, coeff: complex = 1.0) -> "SpinOperator":
        return cls([(IDENTITY, coeff)])

    @classmethod
    def single(cls, axis: int, site: int, coeff: complex = 1.0) -> "SpinOperator":
        """coeff * sigma_axis on one site."""
        return cls([(PauliString({site: axis}), coeff)])

    # -- inspection --------------------------------------------------------

    @property
    def terms(self) -> dict[PauliString, complex]:
        """Copy of the term map."""
        return dict(self._terms)

    def coefficient(self, string: PauliString) -> complex:
        return self._terms.get(string, 0j)

    @property
    def max_site(self) -> int:
        return max((s.max_site for s in self._terms), default=-1)

    @property
    def is_zero(self) -> bool:
        return not self._terms

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        scale = max((abs(c) for c in self._terms.values()), default=0.0)
        return all(abs(c.imag) <= tol * max(scale, 1.0) for c in self._terms.values())

    def require_hermitian(self) -> "SpinOperator":
        if not self.is_hermitian():
            raise ValueError("operator has non-real Pauli coefficients")
        return self

    def hs_norm(self) -> float:
        """Normalized Hilbert-Schmidt norm: sqrt(sum |c|^2).

        Pauli strings are orthonormal under tr(A B)/2^n, so this equals the
        Frobenius norm of the dense matrix divided by 2^(n/2).
        """
        return float(np.sqrt(sum(abs(c) ** 2 for c in self._terms.values())))

    def max_abs_coeff(self) -> float:
        return max((abs(c) for c in self._terms.values()), default=0.0)

    def __len__(self) -> int:
        return len(self._terms)

    def __iter__(self) -> Iterator[tuple[PauliString, complex]]:
        return iter(self._terms.items())

    def __eq__(self, other) -> bool:
        return isinstance(other, SpinOperator) and self._terms == other._terms

    def __hash__(self):
        return hash(frozenset(self._terms.items()))

    def __repr__(self) -> str:
        if not self._terms:
            return "SpinOperator(0)"
        bits = [f"({c:+.6g})*{s!r}" for s, c in sorted(self._terms.items(), key=lambda t: t[0].pairs)]
        return "SpinOperator(" + " ".join(bits) + ")"

    # -- arithmetic --------------------------------------------------------

    def __add__(self, other: "SpinOperator") -> "SpinOperator":
        if not isinstance(other, SpinOperator):
            return NotImplemented
        merged = dict(self._terms)
        for s, c in other._terms.items():
            merged[s] = merged.get(s, 0j) + c
        return SpinOperator(merged)

    def __sub__(self, other: "SpinOperator") -> "SpinOperator":
        if not isinstance(other, SpinOperator):
            return NotImplemented
        merged = dict(self._terms)
        for s, c in other._terms.items():
            merged[s] = merged.get(s, 0j) - c
        return SpinOperator(merged)

    def __neg__(self) -> "SpinOperator":
        return SpinOperator({s: -c for s, c in self._terms.items()})

    def __mul__(self, scalar) -> "SpinOperator":
        if isinstance(scalar, SpinOperator):
            return NotImplemented
        return SpinOperator({s: c * scalar for s, c in self._terms.items()})

    __rmul__ = __mul__

    def __matmul__(self, other: "SpinOperator") -> "SpinOperator":
        """Full operator product with Pauli phases."""
        if not isinstance(other, SpinOperator):
            return NotImplemented
        acc: dict[PauliString, complex] = {}
        for sa, ca in self._terms.items():
            for sb, cb in other._terms.items():
                phase, prod = multiply(sa, sb)
                acc[prod] = acc.get(prod, 0j) + ca * cb * phase
        return SpinOperator(acc)


def commutator(a: SpinOperator, b: SpinOperator) -> SpinOperator:
    """[a, b] = ab - ba in canonical form.

    Term pairs whose strings commute contribute nothing; anticommuting pairs
    contribute 2 * phase * product, which keeps the evaluation exact.
    """
    acc: dict[PauliString, complex] = {}
    for sa, ca in a:
        for sb, cb in b:
            if sa.commutes_with(sb):
                continue
            phase, prod = multiply(sa, sb)
            acc[prod] = acc.get(prod, 0j) + 2.0 * ca * cb * phase
    return SpinOperator(acc)


def nested_commutator(a: SpinOperator, b: SpinOperator, p: int) -> SpinOperator:
    """p-fold nested commutator [a, [a, ... [a, b]]]; p = 0 returns b."""
    if p < 0:
        raise ValueError("nesting depth must be non-negative")
    out = b
    for _ in range(p):
        out = commutator(a, out)
    return out


def axis_field(axis: int, sites: Iterable[int]) -> SpinOperator:
    """Sum of sigma_axis over the given sites (a uniform transverse field)."""
    return SpinOperator([(PauliString({site: axis}), 1.0) for site in sites])


def to_dense(op: SpinOperator, n_sites: int, cap: int = DENSE_SITE_CAP) -> np.ndarray:
    """Dense 2^n x 2^n matrix for ``op``; site 0 is the leftmost tensor factor.

    Intended as an oracle bridge to exact diagonalization, hence the site cap.
    """
    if n_sites > cap:
        raise ValueError(f"n_sites={n_sites} exceeds dense cap {cap}")
    if op.max_site >= n_sites:
        raise ValueError(f"operator touches site {op.max_site}, beyond n_sites={n_sites}")
    dim = 2**n_sites
    out = np.zeros((dim, dim), dtype=complex)
    for string, coeff in op:
        mat = np.array([[coeff]], dtype=complex)
        for site in range(n_sites):
            mat = np.kron(mat, _DENSE_1SITE[string.axis(site)])
        out += mat
    return out
