"""Quadratic-form (A, B, offset) representation of the transverse Ising and XY chains.

After the Jordan-Wigner map both spin chains take the form

    H = sum_ij [ a_i^+ A_ij a_j + 1/2 (a_i^+ B_ij a_j^+ - a_i B_ij a_j) ] + offset

with A real symmetric and B real antisymmetric.  Conventions:

* Ising:  H = -sum sx_i sx_{i+1} - lam sum sz_i.
  A = 2 lam on the diagonal and -1 on the first off-diagonals, B = -1 above and +1 below
  the diagonal, offset = -lam N.
* XY:  H = -1/2 sum [ (1+g)/2 sx sx + (1-g)/2 sy sy + lam sz ], exactly as written, so the
  global factor 1/2 lives inside A (lam on the diagonal, -1/2 hopping), B (-/+ g/2) and the
  offset (-lam N / 2).  At g = 1 this is one half of the Ising chain.

Periodic spin chains are handled one fermion-parity sector at a time.  The boundary bond
picks up the factor -sigma (sigma = +1 even, -1 odd), i.e. antiperiodic fermions in the
even sector and periodic fermions in the odd one.  Corner entries are *added* to the bulk
entries so that N = 2, where the boundary bond doubles the single bulk bond, comes out right.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import InvalidSpecError, NotApplicableError, NumericalInconsistencyError

__all__ = [
    "Model",
    "Boundary",
    "Parity",
    "ChainSpec",
    "QuadraticForm",
    "MomentumGrid",
    "build_quadratic_form",
    "dispersion",
    "momentum_grid",
    "open_bc_real_roots",
]

ROOT_GRID_FACTOR = 64
ROOT_RESIDUAL_TOL = 1e-12


class Model(str, enum.Enum):
    ISING = "ising"
    XY = "xy"


class Boundary(str, enum.Enum):
    OPEN = "open"
    PERIODIC = "periodic"


class Parity(str, enum.Enum):
    EVEN = "even"
    ODD = "odd"

    @property
    def sigma(self) -> int:
        return 1 if self is Parity.EVEN else -1


@dataclass(frozen=True)
class ChainSpec:
    """One Hamiltonian instance: model family, size, couplings, boundary and parity sector.

    ``gamma`` is ignored for the Ising model.  For periodic chains a missing parity defaults
    to the even sector; open chains must not carry a parity.
    """

    model: Model
    n_sites: int
    lam: float
    gamma: float = 1.0
    boundary: Boundary = Boundary.OPEN
    parity: Parity | None = None

    def __post_init__(self):
        object.__setattr__(self, "model", Model(self.model))
        object.__setattr__(self, "boundary", Boundary(self.boundary))
        if self.parity is not None:
            object.__setattr__(self, "parity", Parity(self.parity))
        if int(self.n_sites) != self.n_sites or self.n_sites < 2:
            raise InvalidSpecError(f"n_sites must be an integer >= 2, got {self.n_sites!r}")
        object.__setattr__(self, "n_sites", int(self.n_sites))
        if not np.isfinite(self.lam) or not np.isfinite(self.gamma):
            raise InvalidSpecError("lam and gamma must be finite")
        if self.boundary is Boundary.OPEN and self.parity is not None:
            raise InvalidSpecError("open chains carry no parity sector")
        if self.boundary is Boundary.PERIODIC and self.parity is None:
            object.__setattr__(self, "parity", Parity.EVEN)

    @property
    def effective_gamma(self) -> float:
        return 1.0 if self.model is Model.ISING else float(self.gamma)

    def with_parity(self, parity: Parity) -> "ChainSpec":
        return ChainSpec(self.model, self.n_sites, self.lam, self.gamma, self.boundary, parity)


@dataclass(frozen=True)
class QuadraticForm:
    A: np.ndarray
    B: np.ndarray
    offset: float

    @property
    def n_sites(self) -> int:
        return self.A.shape[0]


@dataclass(frozen=True)
class MomentumGrid:
    phis: np.ndarray
    sector: Parity


def build_quadratic_form(spec: ChainSpec) -> QuadraticForm:
    n = spec.n_sites
    if spec.model is Model.ISING:
        diag, hop, pair, offset = 2.0 * spec.lam, -1.0, -1.0, -spec.lam * n
    else:
        diag, hop, pair, offset = spec.lam, -0.5, -0.5 * spec.gamma, -0.5 * spec.lam * n

    # Upper-triangular couplings; A and B are then completed by (anti)symmetry so that
    # A == A.T and B == -B.T hold bit for bit.
    a_up = np.zeros((n, n))
    b_up = np.zeros((n, n))
    for i in range(n - 1):
        a_up[i, i + 1] += hop
        b_up[i, i + 1] += pair
    if spec.boundary is Boundary.PERIODIC:
        # bond (N, 1) with a_{N+1} = -sigma a_1, stored on the (1, N) entry
        sigma = spec.parity.sigma
        a_up[0, n - 1] += -sigma * hop
        b_up[0, n - 1] += sigma * pair
    A = a_up + a_up.T + diag * np.eye(n)
    B = b_up - b_up.T
    return QuadraticForm(A=A, B=B, offset=float(offset))


def dispersion(spec: ChainSpec, phi):
    """Single-particle energy at momentum ``phi`` (scalar or array)."""
    phi = np.asarray(phi, dtype=float)
    lam = spec.lam
    if spec.model is Model.ISING:
        val = 2.0 * np.sqrt(np.maximum(lam * lam + 1.0 - 2.0 * lam * np.cos(phi), 0.0))
    else:
        val = np.sqrt((lam - np.cos(phi)) ** 2 + (spec.gamma * np.sin(phi)) ** 2)
    return val if val.ndim else float(val)


def momentum_grid(spec: ChainSpec) -> MomentumGrid:
    """Allowed momenta in (0, 2pi] for the parity sector of a periodic chain."""
    if spec.boundary is not Boundary.PERIODIC:
        raise NotApplicableError("momentum grid is only defined for periodic chains")
    n = spec.n_sites
    k = np.arange(n)
    shift = 1 if spec.parity is Parity.EVEN else 2
    return MomentumGrid(phis=(2 * k + shift) * np.pi / n, sector=spec.parity)


def _open_residual(k, n, lam):
    return np.sin(k * n) - lam * np.sin(k * (n + 1))


def open_bc_real_roots(spec: ChainSpec) -> np.ndarray:
    """Real roots in (0, pi) of sin(kN) = lam sin(k(N+1)) for the open Ising chain.

    Fewer than N roots are returned when a mode has left the real axis (edge mode);
    those energies only come out of the matrix eigensolve.
    """
    if spec.model is not Model.ISING or spec.boundary is not Boundary.OPEN:
        raise NotApplicableError("transcendental root equation applies to the open Ising chain")
    if spec.lam == 0:
        raise NotApplicableError("root equation degenerates at lam = 0; use the matrix route")
    n, lam = spec.n_sites, float(spec.lam)
    grid = np.linspace(0.0, np.pi, ROOT_GRID_FACTOR * n + 1)[1:-1]
    vals = _open_residual(grid, n, lam)
    roots = []
    for j in range(len(grid)):
        if vals[j] == 0.0:
            roots.append(grid[j])
        elif j + 1 < len(grid) and vals[j] * vals[j + 1] < 0.0:
            roots.append(
                brentq(_open_residual, grid[j], grid[j + 1], args=(n, lam), xtol=1e-15, rtol=4 * np.finfo(float).eps)
            )
    roots = np.array(roots)
    if roots.size and np.max(np.abs(_open_residual(roots, n, lam))) >= ROOT_RESIDUAL_TOL:
        raise NumericalInconsistencyError("root refinement did not reach the residual tolerance")
    return roots
