"""Two-photon polarisation correlations, Bell and CHSH inequalities.

Quantum side: explicit 4x4 projector algebra on C^2 (x) C^2.  Classical side: the 16
deterministic truth assignments of four propositions and their convex mixtures.

Basis conventions: |x> = (1, 0), |y> = (0, 1) for photons; |+> = (1, 0), |-> = (0, 1) are
the sigma_3 eigenvectors for the psi_lambda family.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .errors import InvalidSpecError, NumericalInconsistencyError

__all__ = [
    "PolarizerSetup",
    "TwoQubitState",
    "BellCheck",
    "VIOLATING_ANGLES",
    "polarizer_projector",
    "photon_pair_state",
    "joint_prob",
    "marginal_prob",
    "bell_check",
    "coincidence",
    "deterministic_assignments",
    "assignment_satisfies_bell",
    "classical_bell_sides",
    "psi_lambda_state",
    "psi_lambda_correlators",
    "psi_lambda_correlators_matrix",
    "chsh_value",
    "chsh_closed_form",
    "classical_chsh_values",
    "maximize_chsh",
]

UNIT_TOL = 1e-10
AGREE_TOL = 1e-12
VIOLATION_TOL = 1e-12

SIGMA = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)
I2 = np.eye(2, dtype=complex)

# phi_1, phi_2, theta_1, theta_2 giving lhs = 1 > rhs = 3/4
VIOLATING_ANGLES = ((0.0, np.pi / 3), (np.pi / 2, np.pi / 6))


@dataclass(frozen=True)
class PolarizerSetup:
    phi: float
    theta: float

    def __post_init__(self):
        if not (np.isfinite(self.phi) and np.isfinite(self.theta)):
            raise InvalidSpecError("polarizer angles must be finite")

    def reduced(self) -> tuple[float, float]:
        return float(np.mod(self.phi, np.pi)), float(np.mod(self.theta, np.pi))


@dataclass(frozen=True)
class TwoQubitState:
    amplitudes: np.ndarray

    def __post_init__(self):
        amp = np.asarray(self.amplitudes, dtype=complex).reshape(4)
        if abs(np.linalg.norm(amp) - 1.0) > AGREE_TOL:
            raise InvalidSpecError("two-qubit state must have unit norm")
        object.__setattr__(self, "amplitudes", amp)

    def expect(self, op) -> complex:
        return complex(self.amplitudes.conj() @ op @ self.amplitudes)


@dataclass(frozen=True)
class BellCheck:
    lhs: float
    rhs: float
    violated: bool


def polarizer_projector(alpha: float) -> np.ndarray:
    v = np.array([np.cos(alpha), np.sin(alpha)], dtype=complex)
    return np.outer(v, v.conj())


def photon_pair_state() -> TwoQubitState:
    x, y = np.eye(2)
    return TwoQubitState((np.kron(x, y) - np.kron(y, x)) / np.sqrt(2.0))


def joint_prob(setup: PolarizerSetup, state: TwoQubitState | None = None) -> float:
    """Probability that both photons pass, <P_A(phi) P_B(theta)>."""
    state = state or photon_pair_state()
    op = np.kron(polarizer_projector(setup.phi), I2) @ np.kron(I2, polarizer_projector(setup.theta))
    return float(state.expect(op).real)


def marginal_prob(angle: float, side: str = "A", state: TwoQubitState | None = None) -> float:
    state = state or photon_pair_state()
    P = polarizer_projector(angle)
    op = np.kron(P, I2) if side == "A" else np.kron(I2, P)
    return float(state.expect(op).real)


def _sin2(x):
    # sin^2 x as (1 - cos 2x)/2, which lands on exact values at the standard angles
    return 0.5 * (1.0 - np.cos(2.0 * x))


def bell_check(phis, thetas) -> BellCheck:
    (p1, p2), (t1, t2) = phis, thetas
    lhs = _sin2(p1 - t1)
    rhs = _sin2(p1 - t2) + _sin2(p2 - t2) + _sin2(p2 - t1)
    return BellCheck(lhs=float(lhs), rhs=float(rhs), violated=bool(lhs > rhs + VIOLATION_TOL))


def coincidence(a: bool, b: bool) -> bool:
    """f(A, B) = AB + (not A)(not B)."""
    return (a and b) or (not a and not b)


def deterministic_assignments() -> list[tuple[bool, bool, bool, bool]]:
    """All truth tables of (A1, A2, B1, B2)."""
    return list(itertools.product((False, True), repeat=4))


def assignment_satisfies_bell(assignment) -> bool:
    """f(A1,B1) implies f(A1,B2) + f(A2,B2) + f(A2,B1)."""
    a1, a2, b1, b2 = assignment
    premise = coincidence(a1, b1)
    conclusion = coincidence(a1, b2) or coincidence(a2, b2) or coincidence(a2, b1)
    return (not premise) or conclusion


def classical_bell_sides(weights) -> tuple[float, float]:
    """(p(f(A1,B1)), p(f(A1,B2)) + p(f(A2,B2)) + p(f(A2,B1))) for a mixture of assignments."""
    w = np.asarray(weights, dtype=float)
    table = deterministic_assignments()
    if w.shape != (len(table),) or np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
        raise InvalidSpecError("weights must be a probability vector over the 16 assignments")
    lhs = rhs = 0.0
    for wk, (a1, a2, b1, b2) in zip(w, table):
        lhs += wk * coincidence(a1, b1)
        rhs += wk * (coincidence(a1, b2) + coincidence(a2, b2) + coincidence(a2, b1))
    return float(lhs), float(rhs)


def _unit(v, name="vector"):
    v = np.asarray(v, dtype=float).reshape(3)
    if abs(np.linalg.norm(v) - 1.0) > UNIT_TOL:
        raise InvalidSpecError(f"{name} must be a unit 3-vector")
    return v


def _spin_op(v):
    return sum(c * s for c, s in zip(v, SIGMA))


def psi_lambda_state(lam: float) -> TwoQubitState:
    if not 0.0 <= lam <= 1.0:
        raise InvalidSpecError("lambda must lie in [0, 1]")
    plus, minus = np.eye(2)
    return TwoQubitState(np.sqrt(lam) * np.kron(plus, minus) - np.sqrt(1.0 - lam) * np.kron(minus, plus))


def psi_lambda_correlators_matrix(lam: float, a, b) -> tuple[float, float]:
    a, b = _unit(a, "a"), _unit(b, "b")
    st = psi_lambda_state(lam)
    Ea, Eb = _spin_op(a), _spin_op(b)
    EE = st.expect(np.kron(Ea, Eb)).real
    PP = st.expect(np.kron(0.5 * (I2 + Ea), 0.5 * (I2 + Eb))).real
    return float(EE), float(PP)


def psi_lambda_correlators(lam: float, a, b) -> tuple[float, float]:
    """<E(a) (x) E(b)> and <P(a) (x) P(b)> in psi_lambda, closed form checked against matrices."""
    a, b = _unit(a, "a"), _unit(b, "b")
    if not 0.0 <= lam <= 1.0:
        raise InvalidSpecError("lambda must lie in [0, 1]")
    s = np.sqrt(lam * (1.0 - lam))
    transverse = a[0] * b[0] + a[1] * b[1]
    EE = -a[2] * b[2] - 2.0 * s * transverse
    PP = 0.25 * (1.0 + (2.0 * lam - 1.0) * (a[2] - b[2]) - a[2] * b[2] - 2.0 * s * transverse)
    EE_m, PP_m = psi_lambda_correlators_matrix(lam, a, b)
    if abs(EE - EE_m) > AGREE_TOL or abs(PP - PP_m) > AGREE_TOL:
        raise NumericalInconsistencyError("closed-form and matrix correlators disagree")
    return float(EE), float(PP)


def chsh_value(lam: float, a, a2, b, b2) -> float:
    """<E(a)(E(b) + E(b')) + E(a')(E(b) - E(b'))> in psi_lambda by matrix expectation."""
    a, a2, b, b2 = (_unit(v, n) for v, n in zip((a, a2, b, b2), ("a", "a'", "b", "b'")))
    st = psi_lambda_state(lam)
    Ea, Ea2, Eb, Eb2 = (_spin_op(v) for v in (a, a2, b, b2))
    op = np.kron(Ea, Eb + Eb2) + np.kron(Ea2, Eb - Eb2)
    return float(st.expect(op).real)


def chsh_closed_form(a, a2, b, b2) -> float:
    """CHSH combination for lambda = 1/2, where <E(a) (x) E(b)> = -a.b."""
    a, a2, b, b2 = (_unit(v) for v in (a, a2, b, b2))
    return float(-(a @ b + a @ b2 + a2 @ b - a2 @ b2))


def classical_chsh_values() -> np.ndarray:
    """a(b + b') + a'(b - b') for every deterministic +/-1 assignment."""
    return np.array([a * (b + b2) + a2 * (b - b2) for a, a2, b, b2 in itertools.product((-1, 1), repeat=4)])


def _angles_to_vectors(x):
    th, ph = x[0::2], x[1::2]
    return np.column_stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)])


def maximize_chsh(lam: float = 0.5, seed: int = 0, n_starts: int = 8) -> tuple[float, np.ndarray]:
    """Largest |CHSH| over four unit vectors; returns (value, 4x3 array of a, a', b, b').

    Starts from the coplanar arrangement at 45 degree spacing plus seeded random draws,
    each refined by BFGS on spherical angles.
    """
    rng = np.random.default_rng(seed)

    def neg(x):
        return -abs(chsh_value(lam, *_angles_to_vectors(x)))

    q = np.pi / 4
    starts = [np.array([np.pi / 2, 0.0, np.pi / 2, 2 * q, np.pi / 2, q, np.pi / 2, -q])]
    starts += [rng.uniform(0, 2 * np.pi, 8) for _ in range(n_starts)]
    best = None
    for x0 in starts:
        res = minimize(neg, x0, method="BFGS", options={"gtol": 1e-12})
        if best is None or res.fun < best.fun:
            best = res
    return float(-best.fun), _angles_to_vectors(best.x)
