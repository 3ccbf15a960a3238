"""Finite-dimensional *-algebras, states on them, and the GNS construction.

An algebra is stored as a Frobenius-orthonormal basis e_0, ..., e_{n-1} of d x d complex
matrices with e_0 = 1/sqrt(d).  A state is the vector of its values omega(e_a).  Products
are expanded back into the basis through structure constants, so the GNS construction only
ever touches the numbers omega(e_a) and never a density matrix.

GNS: the Gram matrix G_ab = omega(e_a^* e_b) defines the inner product on the algebra; its
kernel is the null ideal.  Eigenvectors of G with eigenvalue mu_k > NULL_TOL, scaled by
mu_k^{-1/2}, give an orthonormal basis of the GNS space.

The invariant blocks of a reducible representation are the ranges of minimal projections
of the commutant, and that choice is not unique when the commutant is noncommutative.  We
take the projections from the spectral decomposition of the commutant element closest (in
Hilbert-Schmidt norm) to |[1]><[1]|, and only fall back to a seeded random commutant
element to split degenerate eigenspaces.  For the full matrix algebra this reproduces the
column decomposition {[e_11], [e_21]}, {[e_12], [e_22]} and makes the entropy of rho_omega
equal to the von Neumann entropy of the state's density matrix.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np

from .errors import InvalidStateError, NumericalInconsistencyError

__all__ = [
    "FiniteAlgebra",
    "AlgState",
    "GnsResult",
    "close_algebra",
    "full_matrix_algebra",
    "gns",
    "restrict_state",
    "purity_report",
    "m2_lambda",
    "two_fermion_space",
    "two_fermion",
]

SPAN_TOL = 1e-10
NULL_TOL = 1e-10
NEGATIVE_TOL = 1e-8
NORM_TOL = 1e-12
COMMUTANT_TOL = 1e-9
EIG_GROUP_TOL = 1e-8
BLOCK_SEED = 12345


@dataclass(frozen=True)
class FiniteAlgebra:
    ambient_dim: int
    basis: np.ndarray  # (n, d, d), Frobenius orthonormal, basis[0] = 1/sqrt(d)

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    def coordinates(self, X) -> np.ndarray:
        return np.einsum("aij,ij->a", self.basis.conj(), np.asarray(X, dtype=complex))

    def residual(self, X) -> float:
        X = np.asarray(X, dtype=complex)
        c = self.coordinates(X)
        return float(np.linalg.norm(X - np.einsum("a,aij->ij", c, self.basis)))

    def contains(self, X, tol: float = SPAN_TOL) -> bool:
        return self.residual(X) <= tol * max(1.0, np.linalg.norm(X))

    def left_multiplication(self) -> np.ndarray:
        """L[a, c, b] = coordinate c of e_a e_b."""
        prods = np.einsum("aij,bjk->abik", self.basis, self.basis)
        return np.einsum("cik,abik->acb", self.basis.conj(), prods)

    def adjoint_gram(self) -> np.ndarray:
        """S[a, b, c] = coordinate c of e_a^* e_b."""
        prods = np.einsum("aji,bjk->abik", self.basis.conj(), self.basis)
        return np.einsum("cik,abik->abc", self.basis.conj(), prods)


@dataclass(frozen=True)
class AlgState:
    algebra: FiniteAlgebra
    values: np.ndarray  # omega(e_a)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex).reshape(self.algebra.dim)
        object.__setattr__(self, "values", vals)
        if abs(self(np.eye(self.algebra.ambient_dim)) - 1.0) > NORM_TOL:
            raise InvalidStateError("state is not normalised: omega(1) != 1")

    def __call__(self, X) -> complex:
        return complex(self.algebra.coordinates(X) @ self.values)

    def gram(self) -> np.ndarray:
        G = self.algebra.adjoint_gram() @ self.values
        return 0.5 * (G + G.conj().T)

    def check_positive(self) -> np.ndarray:
        w = np.linalg.eigvalsh(self.gram())
        if w[0] < -NEGATIVE_TOL:
            raise InvalidStateError(f"functional is not positive: Gram eigenvalue {w[0]:.3e}")
        return w

    @classmethod
    def from_density(cls, algebra: FiniteAlgebra, rho) -> "AlgState":
        rho = np.asarray(rho, dtype=complex)
        vals = np.einsum("ij,aji->a", rho, algebra.basis)
        return cls(algebra, vals)

    @classmethod
    def from_vector(cls, algebra: FiniteAlgebra, psi) -> "AlgState":
        psi = np.asarray(psi, dtype=complex)
        return cls.from_density(algebra, np.outer(psi, psi.conj()))


@dataclass(frozen=True)
class GnsResult:
    hilbert_dim: int
    rep_matrices: np.ndarray  # (n, D, D), pi(e_a)
    cyclic_vector: np.ndarray
    block_projectors: tuple[np.ndarray, ...]
    rho_omega: np.ndarray
    entropy: float
    commutant_basis: np.ndarray  # (k, D, D), Hilbert-Schmidt orthonormal

    @property
    def n_blocks(self) -> int:
        return len(self.block_projectors)

    @property
    def commutant_dim(self) -> int:
        return self.commutant_basis.shape[0]


def _add_to_span(basis, X, tol):
    X = np.asarray(X, dtype=complex)
    nrm = np.linalg.norm(X)
    if nrm == 0:
        return False
    r = X / nrm
    for _ in range(2):  # re-orthogonalise once for stability
        for e in basis:
            r = r - np.vdot(e, r) * e
    rn = np.linalg.norm(r)
    if rn <= tol:
        return False
    basis.append(r / rn)
    return True


def close_algebra(generators, tol: float = SPAN_TOL) -> FiniteAlgebra:
    """Smallest *-algebra containing ``generators`` and the identity."""
    gens = [np.asarray(g, dtype=complex) for g in generators]
    if not gens:
        raise ValueError("need at least one generator")
    d = gens[0].shape[0]
    basis = [np.eye(d, dtype=complex) / np.sqrt(d)]
    for g in gens:
        _add_to_span(basis, g, tol)
        _add_to_span(basis, g.conj().T, tol)
    frontier = list(range(len(basis)))
    for _ in range(d * d + 1):
        new = []
        n0 = len(basis)
        for i in range(n0):
            for j in frontier:
                for X in (basis[i] @ basis[j], basis[j] @ basis[i]):
                    if _add_to_span(basis, X, tol):
                        new.append(len(basis) - 1)
                    if _add_to_span(basis, X.conj().T, tol):
                        new.append(len(basis) - 1)
        if not new:
            return FiniteAlgebra(ambient_dim=d, basis=np.array(basis))
        frontier = new
    raise NumericalInconsistencyError("algebra closure did not stabilise")


def full_matrix_algebra(d: int) -> FiniteAlgebra:
    units = np.zeros((d * d, d, d), dtype=complex)
    for k in range(d * d):
        units[k, k // d, k % d] = 1.0
    return close_algebra(list(units))


def _commutant(reps, tol=COMMUTANT_TOL):
    D = reps.shape[1]
    eye = np.eye(D)
    # vec(X P - P X) with row-major vec: (I (x) P^T - P (x) I) vec X
    M = np.concatenate([np.kron(eye, P.T) - np.kron(P, eye) for P in reps], axis=0)
    _, s, Vh = np.linalg.svd(M)
    scale = max(1.0, s[0] if s.size else 1.0)
    rank = int(np.sum(s > tol * scale))
    null = Vh[rank:].conj()
    return null.reshape(-1, D, D)


def _hs_project(K, X):
    return np.einsum("k,kij->ij", np.einsum("kij,ij->k", K.conj(), X), K)


def _eigenprojections(H):
    w, V = np.linalg.eigh(0.5 * (H + H.conj().T))
    scale = max(1.0, np.max(np.abs(w)))
    groups = [[0]]
    for k in range(1, len(w)):
        if w[k] - w[groups[-1][-1]] > EIG_GROUP_TOL * scale:
            groups.append([k])
        else:
            groups[-1].append(k)
    return [V[:, g] @ V[:, g].conj().T for g in groups]


def _corner_dim(Q, K):
    if K.shape[0] == 0:
        return 0
    corner = np.einsum("ij,kjl,lm->kim", Q, K, Q).reshape(K.shape[0], -1)
    s = np.linalg.svd(corner, compute_uv=False)
    return int(np.sum(s > COMMUTANT_TOL * max(1.0, s[0])))


def _minimal_projections(K, seed_vec, rng):
    seed_elem = _hs_project(K, np.outer(seed_vec, seed_vec.conj()))
    pending = _eigenprojections(seed_elem)
    done = []
    while pending:
        Q = pending.pop()
        if _corner_dim(Q, K) <= 1:
            done.append(Q)
            continue
        # degenerate: split with a random Hermitian commutant element inside range(Q)
        w, V = np.linalg.eigh(Q)
        W = V[:, w > 0.5]
        for _ in range(5):
            c = rng.standard_normal(K.shape[0]) + 1j * rng.standard_normal(K.shape[0])
            X = np.einsum("k,kij->ij", c, K)
            parts = _eigenprojections(W.conj().T @ (X + X.conj().T) @ W)
            if len(parts) > 1:
                pending.extend(W @ P @ W.conj().T for P in parts)
                break
        else:
            raise NumericalInconsistencyError("could not split a degenerate commutant block")
    return done


def gns(algebra: FiniteAlgebra, state: AlgState, seed: int = BLOCK_SEED) -> GnsResult:
    if state.algebra is not algebra and not np.allclose(state.algebra.basis, algebra.basis):
        raise InvalidStateError("state is defined on a different algebra")
    G = state.gram()
    mu, U = np.linalg.eigh(G)
    if mu[0] < -NEGATIVE_TOL:
        raise InvalidStateError(f"Gram matrix has negative eigenvalue {mu[0]:.3e}")
    keep = mu > NULL_TOL
    X = U[:, keep] / np.sqrt(mu[keep])  # columns: GNS orthonormal basis in algebra coordinates
    D = X.shape[1]
    L = algebra.left_multiplication()
    GX = G @ X
    reps = np.einsum("ck,acb,bl->akl", GX.conj(), L, X)
    one = np.zeros(algebra.dim, dtype=complex)
    one[0] = np.sqrt(algebra.ambient_dim)
    xi = GX.conj().T @ one

    K = _commutant(reps)
    rng = np.random.default_rng(seed)
    blocks = _minimal_projections(K, xi, rng)
    total = sum(blocks)
    if np.max(np.abs(total - np.eye(D))) > 1e-8:
        raise NumericalInconsistencyError("block projectors do not resolve the identity")
    # order blocks by their weight in the cyclic vector, largest first
    blocks.sort(key=lambda P: -np.vdot(xi, P @ xi).real)
    rho = sum(np.outer(P @ xi, (P @ xi).conj()) for P in blocks)
    if len(blocks) == 1:
        entropy = 0.0  # rho_omega is the pure projector onto [1]
    else:
        p = np.clip(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)), 0.0, None)
        p = p[p > 0]
        entropy = max(0.0, float(-np.sum(p * np.log(p))))
    return GnsResult(
        hilbert_dim=D,
        rep_matrices=reps,
        cyclic_vector=xi,
        block_projectors=tuple(blocks),
        rho_omega=rho,
        entropy=entropy,
        commutant_basis=K,
    )


def restrict_state(state: AlgState, sub: FiniteAlgebra) -> AlgState:
    """Restriction of ``state`` to a subalgebra living in the same ambient space."""
    big = state.algebra
    if sub.ambient_dim != big.ambient_dim:
        raise InvalidStateError("subalgebra lives in a different ambient space")
    for e in sub.basis:
        if not big.contains(e):
            raise InvalidStateError("subalgebra element lies outside the state's algebra")
    coords = np.einsum("bij,aij->ab", big.basis.conj(), sub.basis)
    restricted = AlgState(sub, coords @ state.values)
    restricted.check_positive()
    return restricted


def purity_report(result: GnsResult) -> tuple[bool, int]:
    """(is_irreducible, commutant dimension)."""
    k = result.commutant_dim
    return k == 1, k


def m2_lambda(lam: float) -> tuple[FiniteAlgebra, AlgState]:
    """M_2 with omega(a) = lam a_11 + (1 - lam) a_22."""
    if not 0.0 <= lam <= 1.0:
        raise InvalidStateError("lambda must lie in [0, 1]")
    alg = full_matrix_algebra(2)
    return alg, AlgState.from_density(alg, np.diag([lam, 1.0 - lam]))


# two fermions in four modes a_1, a_2, b_1, b_2 (Fock modes 0..3)
_MODES = {"a1": 0, "a2": 1, "b1": 2, "b2": 3}
TWO_FERMION_BASIS = (("a1", "a2"), ("b1", "b2"), ("a1", "b2"), ("a2", "b1"), ("a1", "b1"), ("a2", "b2"))


def _creators(n_modes=4):
    z = np.diag([1.0, -1.0])
    up = np.array([[0.0, 0.0], [1.0, 0.0]])
    return [reduce(np.kron, [z] * k + [up] + [np.eye(2)] * (n_modes - k - 1)) for k in range(n_modes)]


def two_fermion_space():
    """Isometry V (16 x 6) onto the two-particle basis, and the four creation operators."""
    cr = _creators()
    vac = np.zeros(16)
    vac[0] = 1.0
    cols = [cr[_MODES[p]] @ cr[_MODES[q]] @ vac for p, q in TWO_FERMION_BASIS]
    return np.column_stack(cols), cr


def two_fermion(theta: float) -> tuple[FiniteAlgebra, AlgState, FiniteAlgebra]:
    """(M_6, omega_theta, left-location subalgebra A_0).

    omega_theta is the vector state of cos(theta) a1^+ b2^+ |0> + sin(theta) a2^+ b1^+ |0>.
    A_0 is generated by n_12 = n_a1 n_a2, N_a = n_a1 + n_a2 and the left spin operators
    T_i = 1/2 sum a_l^+ (sigma_i)_{ll'} a_l', all compressed to the two-particle space.
    """
    V, cr = two_fermion_space()
    a1, a2 = cr[0], cr[1]  # creators
    n1, n2 = a1 @ a1.T, a2 @ a2.T
    ops = [n1 @ n2, n1 + n2]
    pauli = (
        np.array([[0, 1], [1, 0]], dtype=complex),
        np.array([[0, -1j], [1j, 0]], dtype=complex),
        np.array([[1, 0], [0, -1]], dtype=complex),
    )
    left = (a1, a2)
    for s in pauli:
        ops.append(0.5 * sum(s[i, j] * left[i] @ left[j].T for i in range(2) for j in range(2)))
    gens = [V.T @ op @ V for op in ops]
    big = full_matrix_algebra(6)
    psi = np.zeros(6)
    psi[2], psi[3] = np.cos(theta), np.sin(theta)
    state = AlgState.from_vector(big, psi)
    return big, state, close_algebra(gens)
