"""Shared test fixtures: independent dense-matrix oracles.

Everything here is built from literal 2x2 matrices and np.kron so that
comparisons against the package's sparse algebra are genuinely independent.
"""

import numpy as np
import pytest

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
ID = np.eye(2, dtype=complex)

PAULI = {0: ID, 1: SX, 2: SY, 3: SZ}


def kron_chain(axes_by_site: dict, n_sites: int) -> np.ndarray:
    """Dense tensor product with site 0 as the leftmost factor."""
    out = np.array([[1.0 + 0j]])
    for site in range(n_sites):
        out = np.kron(out, PAULI[axes_by_site.get(site, 0)])
    return out


def dense_operator(op, n_sites: int) -> np.ndarray:
    """Independent dense expansion of a SpinOperator (bypasses to_dense)."""
    dim = 2**n_sites
    out = np.zeros((dim, dim), dtype=complex)
    for string, coeff in op:
        out += coeff * kron_chain(dict(string.pairs), n_sites)
    return out


def dense_xxz(n_sites: int, j_perp: float, j_z: float, couplings: np.ndarray) -> np.ndarray:
    """Reference XXZ Hamiltonian assembled directly from kron products."""
    dim = 2**n_sites
    h = np.zeros((dim, dim), dtype=complex)
    for a in range(n_sites):
        for b in range(a + 1, n_sites):
            v = couplings[a, b]
            if v == 0:
                continue
            h += j_perp * v * kron_chain({a: 1, b: 1}, n_sites)
            h += j_perp * v * kron_chain({a: 2, b: 2}, n_sites)
            h += j_z * v * kron_chain({a: 3, b: 3}, n_sites)
    return h


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


# one status line per acceptance criterion, emitted after the run regardless
# of output capture
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("-", "acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
