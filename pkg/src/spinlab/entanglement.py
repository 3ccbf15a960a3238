"""Entanglement of a contiguous block of sites in a free-fermion ground state.

Two routes are provided.  The finite-chain route restricts the correlation matrices C and F
of a solved chain to the first L sites and reads off the single-particle entanglement
energies eps_l from

    (2C - 1 - 2F)(2C - 1 + 2F) phi_l = tanh^2(eps_l / 2) phi_l.

Because F is antisymmetric the left factor is the transpose of Y = 2C - 1 + 2F, so
tanh(|eps_l| / 2) are the singular values of Y; we take them from an SVD rather than
squaring.  The thermodynamic route builds the Majorana correlation matrix of an infinite
XY chain from Fourier coefficients g_l and works with its eigenvalues nu_m.

All entropies use the natural log unless a ``base`` is given.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np
from scipy.special import entr, expit

from .chain_model import ChainSpec
from .errors import InvalidSpecError, NumericalInconsistencyError
from .free_fermion import CorrelationPair, ground_state_correlations

__all__ = [
    "EntanglementReport",
    "MajoranaBlock",
    "binary_entropy",
    "restrict",
    "entanglement_spectrum",
    "ground_state_report",
    "is_gapless",
    "majorana_coefficients",
    "majorana_block",
    "entropy_thermo",
    "entropy_thermo_profile",
    "fit_central_charge",
]

ARTANH_GUARD = 1e-14
EPS_CAP = 70.0
SV_TOL = 1e-8
RHO_CUTOFF = 1e-16
FULL_SPECTRUM_MODES = 16
MAX_RHO_EIGS = 2**16
NU_TOL = 1e-9
IMAG_TOL = 1e-10
DEFAULT_QUADRATURE = 4096
CRITICAL_QUADRATURE = 2**16
SINGULAR_NODE_TOL = 1e-12


def binary_entropy(p, base: float | None = None):
    """H(p) = -p ln p - (1-p) ln(1-p), with 0 ln 0 = 0."""
    p = np.asarray(p, dtype=float)
    h = entr(p) + entr(1.0 - p)
    if base is not None:
        h = h / np.log(base)
    return h if h.ndim else float(h)


@dataclass(frozen=True)
class EntanglementReport:
    """Entanglement data of one block.

    ``rho_eigs`` is sorted descending.  For more than ``FULL_SPECTRUM_MODES`` modes it is
    the best-first enumeration down to ``RHO_CUTOFF`` (at most ``MAX_RHO_EIGS`` values);
    ``tail_mass`` is then the exact total weight of the omitted eigenvalues.
    """

    epsilons: np.ndarray
    rho_eigs: np.ndarray
    entropy: float
    schmidt_gap: float
    tail_mass: float = 0.0
    log_base: float | None = None

    @property
    def truncated(self) -> bool:
        return len(self.rho_eigs) < 2 ** len(self.epsilons)

    @property
    def largest_eig(self) -> float:
        return float(self.rho_eigs[0])

    def spectrum_entropy(self) -> float:
        """Entropy recomputed directly from ``rho_eigs`` (omits any truncated tail)."""
        s = float(np.sum(entr(self.rho_eigs)))
        return s / np.log(self.log_base) if self.log_base is not None else s


@dataclass(frozen=True)
class MajoranaBlock:
    Gamma_L: np.ndarray
    nus: np.ndarray

    def entropy(self, base: float | None = None) -> float:
        return float(np.sum(binary_entropy(0.5 * (1.0 + self.nus), base)))


def restrict(corr: CorrelationPair, L: int) -> tuple[np.ndarray, np.ndarray]:
    n = corr.C.shape[0]
    if int(L) != L or not 1 <= L <= n:
        raise InvalidSpecError(f"block length must be in 1..{n}, got {L!r}")
    L = int(L)
    return corr.C[:L, :L].copy(), corr.F[:L, :L].copy()


def _mode_occupation(C, F, gam, eta):
    # <b^+ b> for b = sum gam_i a_i + eta_i a_i^+
    one_minus_c = np.eye(len(C)) - C
    return gam @ C @ gam + 2.0 * gam @ F @ eta + eta @ one_minus_c @ eta


def _rho_eigs_full(p):
    vals = np.ones(1)
    for pl in p:
        vals = np.concatenate([vals * pl, vals * (1.0 - pl)])
    return np.sort(vals)[::-1]


def _rho_eigs_best_first(abs_eps, cutoff, max_count):
    # abs_eps ascending, so ratios r_l = exp(-|eps_l|) descending; each subset of flipped
    # modes is reached exactly once through "extend" and "replace last" moves
    top = float(np.exp(-np.sum(np.log1p(np.exp(-abs_eps)))))
    ratios = np.exp(-abs_eps)
    out = [top]
    heap = [(-top * ratios[0], 0)] if len(ratios) else []
    while heap and len(out) < max_count:
        neg, j = heapq.heappop(heap)
        val = -neg
        if val < cutoff:
            break
        out.append(val)
        if j + 1 < len(ratios):
            heapq.heappush(heap, (-val * ratios[j + 1], j + 1))
            heapq.heappush(heap, (-val / ratios[j] * ratios[j + 1], j + 1))
    return np.array(out)


def entanglement_spectrum(C_L, F_L, base: float | None = None) -> EntanglementReport:
    """Entanglement spectrum of a block from its restricted correlation matrices.

    A mode whose occupation exceeds 1/2 gets a negative eps, so that its occupation is
    1/(1 + e^eps).  Only |eps| enters the density-matrix spectrum and the entropy.
    """
    C_L = np.asarray(C_L, dtype=float)
    F_L = np.asarray(F_L, dtype=float)
    L = C_L.shape[0]
    Y = 2.0 * C_L - np.eye(L) + 2.0 * F_L
    U, t, Vt = np.linalg.svd(Y)
    if t.size and t[0] > 1.0 + SV_TOL:
        raise NumericalInconsistencyError(f"tanh(eps/2) = {t[0]:.12g} exceeds 1")
    order = np.argsort(t, kind="stable")
    t = np.clip(t[order], 0.0, 1.0 - ARTANH_GUARD)
    phi, psi = Vt[order], U.T[order]

    abs_eps = np.minimum(2.0 * np.arctanh(t), EPS_CAP)
    signs = np.empty(L)
    for k in range(L):
        occ = _mode_occupation(C_L, F_L, 0.5 * (phi[k] + psi[k]), 0.5 * (phi[k] - psi[k]))
        signs[k] = -1.0 if occ > 0.5 else 1.0
    epsilons = signs * abs_eps

    p = expit(abs_eps)  # the larger of the two occupations of each mode
    if L <= FULL_SPECTRUM_MODES:
        rho = _rho_eigs_full(p)
        tail = 0.0
    else:
        rho = _rho_eigs_best_first(abs_eps, RHO_CUTOFF, MAX_RHO_EIGS)
        tail = max(0.0, 1.0 - float(np.sum(rho)))

    entropy = float(np.sum(binary_entropy(p)))
    if base is not None:
        entropy /= np.log(base)
    if L:
        top = float(np.exp(-np.sum(np.log1p(np.exp(-abs_eps)))))
        gap = top * float(-np.expm1(-abs_eps[0]))
    else:
        gap = 1.0
    return EntanglementReport(
        epsilons=epsilons,
        rho_eigs=rho,
        entropy=max(entropy, 0.0),
        schmidt_gap=gap,
        tail_mass=tail,
        log_base=base,
    )


def ground_state_report(spec: ChainSpec, L: int, base: float | None = None) -> EntanglementReport:
    """Solve ``spec`` and report the entanglement of its first ``L`` sites."""
    _, corr = ground_state_correlations(spec)
    return entanglement_spectrum(*restrict(corr, L), base=base)


def is_gapless(lam: float, gamma: float) -> bool:
    """True when the infinite XY chain at (lam, gamma) has a zero-energy mode."""
    return abs(abs(lam) - 1.0) < SINGULAR_NODE_TOL or (abs(gamma) < SINGULAR_NODE_TOL and abs(lam) <= 1.0)


def majorana_coefficients(lam: float, gamma: float, max_l: int, quadrature_points: int = DEFAULT_QUADRATURE):
    """Fourier coefficients g_l for l = -max_l..max_l by uniform quadrature.

    g_l = (1/2pi) int_0^2pi e^{-il phi} (cos phi - lam - i gamma sin phi) / |...| dphi.
    Returns an array indexed by l + max_l.  If a node hits a zero of the denominator the
    grid is shifted by half a step; a second hit raises.
    """
    m = int(quadrature_points)
    if m < 512:
        raise InvalidSpecError("quadrature_points must be at least 512")
    if m <= 2 * max_l:
        raise InvalidSpecError("quadrature_points must exceed twice the largest |l|")
    for shift in (0.0, 0.5):
        phis = 2.0 * np.pi * (np.arange(m) + shift) / m
        z = np.cos(phis) - lam - 1j * gamma * np.sin(phis)
        mag = np.abs(z)
        if np.all(mag > SINGULAR_NODE_TOL):
            break
    else:
        raise NumericalInconsistencyError("integrand is singular on the shifted quadrature grid too")
    coeffs = np.fft.fft(z / mag) / m
    ls = np.arange(-max_l, max_l + 1)
    g = coeffs[ls % m] * np.exp(-2j * np.pi * ls * shift / m)
    if np.max(np.abs(g.imag)) > IMAG_TOL:
        raise NumericalInconsistencyError(f"g_l has imaginary part {np.max(np.abs(g.imag)):.3e}")
    return g.real


def _gamma_matrix(g, L, max_l):
    # block (i, j) is Pi_{j-i} = [[0, g_{j-i}], [-g_{i-j}, 0]]
    d = np.arange(L)[None, :] - np.arange(L)[:, None]
    G = np.zeros((2 * L, 2 * L))
    G[0::2, 1::2] = g[d + max_l]
    G[1::2, 0::2] = -g[-d + max_l]
    return G


def _nus(Gamma):
    # i Gamma is Hermitian; its spectrum comes in +/- nu pairs
    w = np.linalg.eigvalsh(1j * Gamma)
    if w.size and np.max(np.abs(w)) > 1.0 + NU_TOL:
        raise NumericalInconsistencyError(f"|nu| = {np.max(np.abs(w)):.12g} exceeds 1")
    L = len(w) // 2
    return np.clip(np.sort(w)[L:], 0.0, 1.0)


def _resolve_points(lam, gamma, quadrature_points):
    if quadrature_points is None:
        quadrature_points = DEFAULT_QUADRATURE
    if is_gapless(lam, gamma):
        quadrature_points = max(int(quadrature_points), CRITICAL_QUADRATURE)
    return int(quadrature_points)


def majorana_block(lam: float, gamma: float, L: int, quadrature_points: int | None = None) -> MajoranaBlock:
    if int(L) != L or L < 1:
        raise InvalidSpecError(f"block length must be >= 1, got {L!r}")
    L = int(L)
    m = _resolve_points(lam, gamma, quadrature_points)
    m = max(m, 2 * L + 2)
    g = majorana_coefficients(lam, gamma, L - 1, m)
    G = _gamma_matrix(g, L, L - 1)
    return MajoranaBlock(Gamma_L=G, nus=_nus(G))


def entropy_thermo(lam: float, gamma: float, L: int, quadrature_points: int | None = None,
                   base: float | None = None) -> float:
    """Block entropy of L sites of the infinite XY chain.

    Gapless parameters raise the node count to at least ``CRITICAL_QUADRATURE``.
    """
    return majorana_block(lam, gamma, L, quadrature_points).entropy(base)


def entropy_thermo_profile(lam: float, gamma: float, Ls, quadrature_points: int | None = None,
                           base: float | None = None) -> np.ndarray:
    """``entropy_thermo`` for several block lengths, sharing one set of coefficients."""
    Ls = [int(L) for L in Ls]
    if not Ls or min(Ls) < 1:
        raise InvalidSpecError("block lengths must be >= 1")
    top = max(Ls)
    m = max(_resolve_points(lam, gamma, quadrature_points), 2 * top + 2)
    g = majorana_coefficients(lam, gamma, top - 1, m)
    G = _gamma_matrix(g, top, top - 1)
    out = []
    for L in Ls:
        nus = _nus(G[: 2 * L, : 2 * L])
        out.append(float(np.sum(binary_entropy(0.5 * (1.0 + nus), base))))
    return np.array(out)


def fit_central_charge(entropies) -> tuple[float, float, float]:
    """Least-squares fit of S = (c/3) ln L + b.  Returns (c, b, rms residual)."""
    data = np.asarray(entropies, dtype=float)
    if data.ndim != 2 or data.shape[1] != 2:
        raise InvalidSpecError("entropies must be a sequence of (L, S) pairs")
    if len(data) < 5:
        raise InvalidSpecError(f"need at least 5 points for a central-charge fit, got {len(data)}")
    L, S = data[:, 0], data[:, 1]
    if np.any(L <= 0) or np.any(np.diff(L) <= 0):
        raise InvalidSpecError("block lengths must be positive and strictly ascending")
    X = np.column_stack([np.log(L) / 3.0, np.ones_like(L)])
    coef, *_ = np.linalg.lstsq(X, S, rcond=None)
    rms = float(np.sqrt(np.mean((X @ coef - S) ** 2)))
    return float(coef[0]), float(coef[1]), rms
