"""Brute-force exact diagonalisation in the 2^N spin basis.

This is the independent reference for everything computed through fermions.  The basis
ordering is fixed once in :func:`site_bit`: site 1 is the most significant qubit and the
local state |+> (sz = +1) is bit 0, so the Jordan-Wigner vacuum |++...+> is basis index 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .chain_model import Boundary, ChainSpec, Model
from .errors import InvalidSpecError, ResourceGuardError

__all__ = [
    "MAX_SITES",
    "DenseHamiltonian",
    "ReducedDensity",
    "site_bit",
    "build_spin_hamiltonian",
    "parity_diagonal",
    "ground_state",
    "partial_trace",
    "schmidt_coefficients",
    "vn_entropy",
]

MAX_SITES = 14

SX = np.array([[0.0, 1.0], [1.0, 0.0]])
SY_IM = np.array([[0.0, -1.0], [1.0, 0.0]])  # sigma_y = 1j * SY_IM
SZ = np.array([[1.0, 0.0], [0.0, -1.0]])
ID2 = np.eye(2)


def site_bit(site: int, n_sites: int) -> int:
    """Bit position (from the least significant end) holding 1-based ``site``."""
    return n_sites - site


@dataclass(frozen=True)
class DenseHamiltonian:
    matrix: np.ndarray
    spec: ChainSpec


@dataclass(frozen=True)
class ReducedDensity:
    rho: np.ndarray

    @property
    def eigenvalues(self) -> np.ndarray:
        w = np.linalg.eigvalsh(self.rho)
        return np.clip(w, 0.0, None)


def _kron_chain(ops):
    # sparse Kronecker products: the same operator, without 4^n dense intermediates
    return reduce(lambda a, b: sp.kron(a, b, format="csr"), ops)


def _site_op(op, site, n):
    ops = [ID2] * n
    ops[site - 1] = op
    return _kron_chain(ops)


def _bond_op(op, i, j, n):
    ops = [ID2] * n
    ops[i - 1] = op
    ops[j - 1] = op
    return _kron_chain(ops)


def build_spin_hamiltonian(spec: ChainSpec) -> DenseHamiltonian:
    n = spec.n_sites
    if n > MAX_SITES:
        raise ResourceGuardError(f"dense ED is capped at {MAX_SITES} sites, got {n}")
    bonds = [(i, i + 1) for i in range(1, n)]
    if spec.boundary is Boundary.PERIODIC:
        bonds.append((n, 1))
    dim = 2**n
    H = sp.csr_matrix((dim, dim))
    if spec.model is Model.ISING:
        for i, j in bonds:
            H -= _bond_op(SX, i, j, n)
        for i in range(1, n + 1):
            H -= spec.lam * _site_op(SZ, i, n)
    else:
        gx = 0.5 * (1.0 + spec.gamma)
        gy = 0.5 * (1.0 - spec.gamma)
        for i, j in bonds:
            # sy (x) sy = -(SY_IM (x) SY_IM), real
            H -= 0.5 * (gx * _bond_op(SX, i, j, n) - gy * _bond_op(SY_IM, i, j, n))
        for i in range(1, n + 1):
            H -= 0.5 * spec.lam * _site_op(SZ, i, n)
    return DenseHamiltonian(matrix=H.toarray(), spec=spec)


def parity_diagonal(n_sites: int) -> np.ndarray:
    """Diagonal of prod_i sz_i, i.e. the fermion parity (-1)^(number of flipped spins)."""
    idx = np.arange(2**n_sites)
    counts = np.array([bin(i).count("1") for i in idx])
    return 1 - 2 * (counts % 2)


def ground_state(H: DenseHamiltonian) -> tuple[float, np.ndarray]:
    """Lowest eigenpair by dense eigendecomposition.

    Both chain models commute with the spin-flip parity, so the Hamiltonian is split into
    its two parity blocks (an exact basis permutation) and each block is diagonalised.  The
    returned vector is normalised with its largest-magnitude amplitude made positive.
    """
    M = H.matrix
    dim = M.shape[0]
    par = parity_diagonal(H.spec.n_sites)
    best = None
    for p in (1, -1):
        sel = np.flatnonzero(par == p)
        if np.any(M[np.ix_(sel, np.flatnonzero(par != p))]):
            raise InvalidSpecError("Hamiltonian does not conserve spin-flip parity")
        w, v = sla.eigh(M[np.ix_(sel, sel)], subset_by_index=[0, 0])
        if best is None or w[0] < best[0]:
            vec = np.zeros(dim)
            vec[sel] = v[:, 0]
            best = (float(w[0]), vec)
    energy, vec = best
    vec /= np.linalg.norm(vec)
    k = np.argmax(np.abs(vec))
    if vec[k] < 0:
        vec = -vec
    return energy, vec


def _split(vector, keep_sites, n_sites):
    sites = list(keep_sites)
    if sites and sites != list(range(sites[0], sites[-1] + 1)):
        raise InvalidSpecError("keep_sites must be a contiguous range")
    if sites and (sites[0] < 1 or sites[-1] > n_sites):
        raise InvalidSpecError(f"keep_sites {sites[0]}..{sites[-1]} outside 1..{n_sites}")
    if not sites:
        return np.asarray(vector).reshape(1, 1, -1)
    left = sites[0] - 1
    keep = len(sites)
    right = n_sites - left - keep
    return np.asarray(vector).reshape(2**left, 2**keep, 2**right)


def _n_sites_of(vector) -> int:
    n = int(round(np.log2(len(vector))))
    if 2**n != len(vector):
        raise InvalidSpecError("state vector length must be a power of two")
    return n


def partial_trace(vector, keep_sites) -> ReducedDensity:
    """Reduced density matrix of the contiguous block ``keep_sites`` (1-based sites)."""
    n = _n_sites_of(vector)
    psi = _split(vector, keep_sites, n)
    rho = np.einsum("akb,alb->kl", psi, psi.conj())
    return ReducedDensity(rho=rho)


def schmidt_coefficients(vector, keep_sites) -> np.ndarray:
    """Squared singular values of the amplitude matrix for the cut ``keep_sites | rest``.

    Only meaningful when ``keep_sites`` starts at site 1 or ends at site N, so the rest is
    itself a single block.
    """
    n = _n_sites_of(vector)
    psi = _split(vector, keep_sites, n)
    a, k, b = psi.shape
    if a > 1 and b > 1:
        raise InvalidSpecError("Schmidt decomposition needs a block touching a chain end")
    mat = psi.reshape(k, b) if a == 1 else psi.reshape(a, k)
    s = np.linalg.svd(mat, compute_uv=False)
    return np.sort(s**2)[::-1]


def vn_entropy(rho: ReducedDensity, base: float | None = None) -> float:
    p = rho.eigenvalues
    p = p[p > 0]
    s = float(-np.sum(p * np.log(p)))
    if base is not None:
        s /= np.log(base)
    return max(s, 0.0)
