"""Bogoliubov diagonalisation of a real quadratic fermion form.

The pair equations (A - B) Psi_k = Lam_k Phi_k and (A + B) Phi_k = Lam_k Psi_k say that
Lam_k, Phi_k, Psi_k are the singular triplets of A - B (note (A - B)^T = A + B).  The
default route takes them straight from an SVD, which keeps Phi and Psi orthonormal to
machine precision even for exponentially small edge-mode energies.  The squared route
(eigenvectors of (A + B)(A - B)) is kept for cross-checks; it loses half the digits of any
small Lam_k.

Rows of ``Phi``/``Psi`` are the mode vectors, ``g = (Phi + Psi)/2`` and ``h = (Phi - Psi)/2``,
so that c_k = sum_i g_ki a_i + h_ki a_i^+.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chain_model import Boundary, ChainSpec, Parity, QuadraticForm, build_quadratic_form
from .errors import NotApplicableError, NumericalInconsistencyError

__all__ = [
    "BogoliubovSolution",
    "CorrelationPair",
    "SectorEnergies",
    "solve",
    "correlations",
    "sector_ground_energy",
    "ground_energy_check",
    "ground_state_correlations",
]

ZERO_MODE_RTOL = 1e-8
SIGN_TOL = 1e-8
NEGATIVE_EIG_TOL = 1e-9


@dataclass(frozen=True)
class BogoliubovSolution:
    lambdas: np.ndarray
    Phi: np.ndarray
    Psi: np.ndarray
    ground_energy: float
    vacuum_parity: int  # +1 / -1 fermion parity of the quasiparticle vacuum, 0 if a zero mode

    @property
    def g(self) -> np.ndarray:
        return 0.5 * (self.Phi + self.Psi)

    @property
    def h(self) -> np.ndarray:
        return 0.5 * (self.Phi - self.Psi)

    @property
    def n_modes(self) -> int:
        return len(self.lambdas)


@dataclass(frozen=True)
class CorrelationPair:
    C: np.ndarray  # <a_i^+ a_j>
    F: np.ndarray  # <a_i^+ a_j^+>


@dataclass(frozen=True)
class SectorEnergies:
    """Lowest physical energy in each fermion-parity sector of a periodic chain."""

    even: float
    odd: float

    @property
    def ground(self) -> float:
        return min(self.even, self.odd)

    @property
    def lower(self) -> Parity:
        return Parity.EVEN if self.even <= self.odd else Parity.ODD

    @property
    def gap(self) -> float:
        return abs(self.odd - self.even)


def _fix_signs(Phi, Psi):
    # first significant component of each Psi row positive; Phi follows so the pair
    # relations keep Lam >= 0
    for k in range(Psi.shape[0]):
        row = Psi[k]
        idx = np.flatnonzero(np.abs(row) > SIGN_TOL)
        if idx.size and row[idx[0]] < 0:
            Psi[k] = -row
            Phi[k] = -Phi[k]
    return Phi, Psi


def _solve_svd(amb):
    U, s, Vt = np.linalg.svd(amb)
    order = np.argsort(s, kind="stable")
    return s[order], U.T[order].copy(), Vt[order].copy()


def _solve_squared(A, B):
    amb, apb = A - B, A + B
    w, V = np.linalg.eigh(apb @ amb)
    if w[0] < -NEGATIVE_EIG_TOL * max(1.0, abs(w[-1])):
        raise NumericalInconsistencyError(f"(A+B)(A-B) has a negative eigenvalue {w[0]:.3e}")
    lam = np.sqrt(np.clip(w, 0.0, None))
    Psi = V.T.copy()
    Phi = np.zeros_like(Psi)
    zero = lam < ZERO_MODE_RTOL * max(lam[-1], 1.0)
    for k in np.flatnonzero(~zero):
        Phi[k] = amb @ Psi[k] / lam[k]
    if zero.any():
        # zero modes: Phi spans the kernel of A + B; the pairing inside it is arbitrary
        w2, V2 = np.linalg.eigh(amb @ apb)
        Phi[zero] = V2.T[: int(zero.sum())]
        lam[zero] = 0.0
    return lam, Phi, Psi


def solve(qf: QuadraticForm, method: str = "svd") -> BogoliubovSolution:
    """Diagonalise ``qf``: H = sum_k Lam_k c_k^+ c_k + E_vac with Lam_k >= 0 ascending."""
    A, B = qf.A, qf.B
    if method == "svd":
        lam, Phi, Psi = _solve_svd(A - B)
    elif method == "squared":
        lam, Phi, Psi = _solve_squared(A, B)
    else:
        raise ValueError(f"unknown method {method!r}")
    Phi, Psi = _fix_signs(Phi, Psi)
    # H = sum Lam (c^+ c - 1/2) + Tr(A)/2 + offset
    e0 = 0.5 * (np.trace(A) - lam.sum()) + qf.offset
    # Parity of the vacuum tracks sign det(A - B): it is +1 for a dominant positive
    # chemical potential (empty vacuum) and flips whenever a mode energy crosses zero.
    sign, _ = np.linalg.slogdet(A - B)
    zero = lam[0] < ZERO_MODE_RTOL * max(lam[-1], 1.0)
    parity = 0 if zero else int(round(sign))
    return BogoliubovSolution(lambdas=lam, Phi=Phi, Psi=Psi, ground_energy=float(e0), vacuum_parity=parity)


def correlations(sol: BogoliubovSolution) -> CorrelationPair:
    h, g = sol.h, sol.g
    return CorrelationPair(C=h.T @ h, F=h.T @ g)


def _sector_energy(sol: BogoliubovSolution, sigma: int) -> float:
    if sol.vacuum_parity in (0, sigma):
        return sol.ground_energy
    # the vacuum lives in the other sector: cheapest physical state has one quasiparticle
    return sol.ground_energy + float(sol.lambdas[0])


def sector_ground_energy(spec: ChainSpec) -> float:
    """Lowest energy of the spin chain restricted to the parity sector of ``spec``.

    Open chains have no sector constraint and return the vacuum energy.
    """
    sol = solve(build_quadratic_form(spec))
    if spec.boundary is Boundary.OPEN:
        return sol.ground_energy
    return _sector_energy(sol, spec.parity.sigma)


def ground_energy_check(spec: ChainSpec) -> SectorEnergies:
    if spec.boundary is not Boundary.PERIODIC:
        raise NotApplicableError("sector comparison needs a periodic chain")
    return SectorEnergies(
        even=sector_ground_energy(spec.with_parity(Parity.EVEN)),
        odd=sector_ground_energy(spec.with_parity(Parity.ODD)),
    )


def ground_state_correlations(spec: ChainSpec) -> tuple[BogoliubovSolution, CorrelationPair]:
    """Solve ``spec`` and return the vacuum correlations, checking the vacuum is physical.

    For periodic chains the quasiparticle vacuum is only a spin-chain state when its parity
    matches the sector.
    """
    sol = solve(build_quadratic_form(spec))
    if spec.boundary is Boundary.PERIODIC and sol.vacuum_parity not in (0, spec.parity.sigma):
        raise NotApplicableError(
            f"vacuum of the {spec.parity.value} sector has the wrong fermion parity "
            f"(lam={spec.lam}); it is not a state of the spin chain"
        )
    return sol, correlations(sol)
