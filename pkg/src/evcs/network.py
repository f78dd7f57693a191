"""Beam-splitter cascade: 2x2 unitaries, the composite operator map, and the
heralding-condition solver for the second transmittance.

All functions are pure and thread-safe.
"""

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import NoSolutionError, ValidationError

__all__ = [
    "BeamSplitterSpec",
    "QMap",
    "bs_matrix",
    "compose_q",
    "cascade_matrix",
    "zero_sum_residual",
    "solve_t2",
    "t2_closed_forms",
]


@dataclass(frozen=True)
class BeamSplitterSpec:
    """Lossless beam splitter: amplitude transmittance ``t`` in [0, 1] plus the
    transmitted/reflected phase shifts.  Reflectance is sqrt(1 - t^2)."""

    t: float
    phi_tau: float = 0.0
    phi_rho: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.t) or not 0.0 <= self.t <= 1.0:
            raise ValidationError(f"transmittance must lie in [0, 1], got {self.t!r}")
        for name in ("phi_tau", "phi_rho"):
            if not math.isfinite(getattr(self, name)):
                raise ValidationError(f"{name} must be finite")

    @property
    def r(self) -> float:
        return math.sqrt(1.0 - self.t * self.t)


def bs_matrix(spec: BeamSplitterSpec) -> np.ndarray:
    """2x2 unitary expressing the two input creation operators in terms of the
    two output ones:

        [[ t e^{-i phi_tau},  r e^{-i phi_rho}],
         [-r e^{ i phi_rho},  t e^{ i phi_tau}]]
    """
    t, r = spec.t, spec.r
    et = cmath.exp(1j * spec.phi_tau)
    er = cmath.exp(1j * spec.phi_rho)
    return np.array(
        [
            [t / et, r / er],
            [-r * er, t * et],
        ],
        dtype=complex,
    )


@dataclass(frozen=True)
class QMap:
    """Composite coefficients mapping the input creation operators (a, b, c)
    onto the output ones (u, v, w) through the two-splitter cascade.

    The c input never reaches the w output, so that entry is identically zero
    and not stored.
    """

    q_a_u: complex
    q_a_v: complex
    q_a_w: complex
    q_b_u: complex
    q_b_v: complex
    q_b_w: complex
    q_c_u: complex
    q_c_v: complex

    def as_matrix(self) -> np.ndarray:
        """Rows (a, b, c) by columns (u, v, w); the (c, w) entry is 0."""
        return np.array(
            [
                [self.q_a_u, self.q_a_v, self.q_a_w],
                [self.q_b_u, self.q_b_v, self.q_b_w],
                [self.q_c_u, self.q_c_v, 0.0],
            ],
            dtype=complex,
        )

    def unitarity_residual(self) -> float:
        m = self.as_matrix()
        return float(np.max(np.abs(m @ m.conj().T - np.eye(3))))


def cascade_matrix(bs1: BeamSplitterSpec, bs2: BeamSplitterSpec) -> np.ndarray:
    """The literal product of the two embedded three-mode unitaries.

    The first splitter couples inputs (a, b) to (d, w); the second couples
    (d, c) to (u, v).  Intermediate mode order is (d, w, c).
    """
    m1 = bs_matrix(bs1)
    m2 = bs_matrix(bs2)
    e1 = np.array(
        [
            [m1[0, 0], m1[0, 1], 0.0],
            [m1[1, 0], m1[1, 1], 0.0],
            [0.0, 0.0, 1.0],
        ],
        dtype=complex,
    )
    e2 = np.array(
        [
            [m2[0, 0], m2[0, 1], 0.0],
            [0.0, 0.0, 1.0],
            [m2[1, 0], m2[1, 1], 0.0],
        ],
        dtype=complex,
    )
    return e1 @ e2


def compose_q(bs1: BeamSplitterSpec, bs2: BeamSplitterSpec) -> QMap:
    """Closed-form entries of the cascade map.

    Signs are fixed by unitarity of the embedded three-mode product (see
    :func:`cascade_matrix`, which the entries below reproduce entrywise).
    """
    t1, r1 = bs1.t, bs1.r
    t2, r2 = bs2.t, bs2.r
    et1 = cmath.exp(1j * bs1.phi_tau)
    er1 = cmath.exp(1j * bs1.phi_rho)
    et2 = cmath.exp(1j * bs2.phi_tau)
    er2 = cmath.exp(1j * bs2.phi_rho)
    return QMap(
        q_a_u=t1 * t2 / (et1 * et2),
        q_a_v=t1 * r2 / (et1 * er2),
        q_a_w=r1 / er1,
        q_b_u=-r1 * t2 * er1 / et2,
        q_b_v=-r1 * r2 * er1 / er2,
        q_b_w=t1 * et1,
        q_c_u=-r2 * er2,
        q_c_v=t2 * et2,
    )


def zero_sum_residual(beta: complex, gamma: complex, q: QMap) -> float:
    """|beta q_b^u + gamma q_c^u|: zero exactly when the heralding condition holds."""
    return abs(beta * q.q_b_u + gamma * q.q_c_u)


def t2_closed_forms(beta0: float, gamma0: float, t1: float) -> tuple[float, float]:
    """Two closed-form candidates for the conditioned transmittance, shown side
    by side as diagnostics: gamma / sqrt(beta^2 + gamma^2 - beta^2 * t1) and the
    variant with t1 squared.  The numeric solver (:func:`solve_t2`) is the
    authoritative answer; these are printed for comparison only.

    Either form can leave [0, 1] or lose meaning for some inputs; NaN is
    returned in that case.
    """

    def _form(denom_sq: float) -> float:
        if denom_sq <= 0.0:
            return math.nan
        val = gamma0 / math.sqrt(denom_sq)
        return val if 0.0 <= val <= 1.0 else math.nan

    linear = _form(beta0 * beta0 + gamma0 * gamma0 - beta0 * beta0 * t1)
    squared = _form(beta0 * beta0 + gamma0 * gamma0 - beta0 * beta0 * t1 * t1)
    return linear, squared


def solve_t2(
    beta: complex,
    gamma: complex,
    bs1: BeamSplitterSpec,
    phi_tau2: float = 0.0,
    phi_rho2: float = 0.0,
    tol: float = 1e-12,
) -> float:
    """Transmittance of the second splitter that cancels the coherent
    amplitudes in the heralded output port: beta q_b^u + gamma q_c^u = 0.

    Solved by root bracketing on t2 in (0, 1]; the returned value always
    satisfies ``zero_sum_residual`` < tol when substituted into
    :func:`compose_q` (asserted before returning).  Raises
    :class:`NoSolutionError` when the two terms cannot cancel anywhere on the
    bracket, e.g. for incompatible phases.
    """
    beta = complex(beta)
    gamma = complex(gamma)
    if gamma == 0:
        raise ValidationError("gamma must be nonzero to condition the cascade")
    if abs(beta) ** 2 + abs(gamma) ** 2 <= 0.0:
        raise ValidationError("at least one coherent amplitude must be nonzero")

    # residual(t2) = A t2 + B sqrt(1 - t2^2) with the moduli below
    a_coef = -beta * bs1.r * cmath.exp(1j * (bs1.phi_rho - phi_tau2))
    b_coef = -gamma * cmath.exp(1j * phi_rho2)
    mod_a, mod_b = abs(a_coef), abs(b_coef)

    if mod_a == 0.0:
        candidate = 1.0
    else:
        candidate = brentq(
            lambda t: mod_a * t - mod_b * math.sqrt(max(0.0, 1.0 - t * t)),
            0.0,
            1.0,
            xtol=1e-15,
            rtol=4 * np.finfo(float).eps,
        )
    bs2 = BeamSplitterSpec(candidate, phi_tau2, phi_rho2)
    residual = zero_sum_residual(beta, gamma, compose_q(bs1, bs2))
    if residual >= tol:
        raise NoSolutionError(
            f"cannot drive |beta q_b_u + gamma q_c_u| below {tol:g} on (0, 1]; "
            f"best residual {residual:.3e} at t2 = {candidate:.6f} "
            "(incompatible phases?)"
        )
    return candidate
