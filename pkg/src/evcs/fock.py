"""Number-basis coefficients for the three input beams.

Everything here is a pure function of its arguments, so the module is safe
to use from any number of threads.  Photon-number arguments are capped at
``MAX_PHOTON``; all factorials are assembled through log-gamma so that the
largest admissible arguments stay comfortably inside double precision.
"""

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import ValidationError

__all__ = [
    "MAX_PHOTON",
    "TWO_PI",
    "SqueezeParam",
    "CoherentParam",
    "normalize_phase",
    "log_factorial",
    "squeezed_coeff",
    "coherent_coeff",
    "damped_coherent_coeff",
    "vacuum_evacuated_coeffs",
]

MAX_PHOTON = 64
TWO_PI = 2.0 * math.pi


def normalize_phase(phi: float) -> float:
    """Map an angle to [0, 2*pi).

    Uses IEEE ``remainder``, which is exact with respect to the double value
    of 2*pi: whenever ``phi + 2*pi`` is itself exactly representable, the
    normalized results of ``phi`` and ``phi + 2*pi`` are bit-identical.
    """
    if not math.isfinite(phi):
        raise ValidationError(f"phase must be finite, got {phi!r}")
    r = math.remainder(phi, TWO_PI)
    if r < 0.0:
        r += TWO_PI
    return r + 0.0  # fold -0.0 to +0.0


def log_factorial(n):
    """log(n!) for scalar or array n >= 0, via log-gamma."""
    return gammaln(np.asarray(n, dtype=float) + 1.0)


def _check_photon(n: int) -> int:
    if not isinstance(n, (int, np.integer)):
        raise ValidationError(f"photon number must be an integer, got {n!r}")
    if n < 0 or n > MAX_PHOTON:
        raise ValidationError(f"photon number must be in [0, {MAX_PHOTON}], got {n}")
    return int(n)


@dataclass(frozen=True)
class SqueezeParam:
    """Squeezed-vacuum input: magnitude ``s`` and phase ``phi`` of s*e^{i phi}."""

    s: float
    phi: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.s) or self.s < 0.0:
            raise ValidationError(f"squeeze magnitude must be finite and >= 0, got {self.s!r}")
        object.__setattr__(self, "phi", normalize_phase(self.phi))


@dataclass(frozen=True)
class CoherentParam:
    """Coherent input with non-negative magnitude and a phase in radians."""

    magnitude: float
    phase: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.magnitude) or self.magnitude < 0.0:
            raise ValidationError(f"coherent magnitude must be finite and >= 0, got {self.magnitude!r}")
        if not math.isfinite(self.phase):
            raise ValidationError(f"coherent phase must be finite, got {self.phase!r}")

    @property
    def amplitude(self) -> complex:
        return self.magnitude * cmath.exp(1j * self.phase)


def squeezed_coeff(param: SqueezeParam, n: int) -> complex:
    """Number-state amplitude <n|S(xi)|0> of the squeezed vacuum, xi = s*e^{i phi}.

    Zero for every odd n.  For even n the value is
    sqrt(n!) / (sqrt(cosh s) * (n/2)!) * (-e^{i phi} tanh(s) / 2)^(n/2),
    assembled in log space so n up to MAX_PHOTON cannot overflow.
    """
    n = _check_photon(n)
    if n % 2 == 1:
        return 0j
    k = n // 2
    ln_mag = (
        0.5 * float(log_factorial(n))
        - float(log_factorial(k))
        - 0.5 * math.log(math.cosh(param.s))
    )
    base = -0.5 * cmath.exp(1j * param.phi) * math.tanh(param.s)
    return math.exp(ln_mag) * base**k


def coherent_coeff(alpha: complex, n: int) -> complex:
    """Standard coherent-state amplitude <n|alpha> = e^{-|a|^2/2} a^n / sqrt(n!)."""
    n = _check_photon(n)
    alpha = complex(alpha)
    if alpha == 0:
        return 1.0 + 0j if n == 0 else 0j
    scale = math.exp(-0.5 * abs(alpha) ** 2 - 0.5 * float(log_factorial(n)))
    return scale * alpha**n


def damped_coherent_coeff(alpha: complex, n: int) -> complex:
    """Coherent weight with the full vacuum-overlap damping: e^{-|a|^2} a^n / sqrt(n!).

    Differs from :func:`coherent_coeff` by an extra factor e^{-|a|^2/2}; both
    conventions circulate for the two-branch model coefficients, so both are
    provided (see ``evcs.fit``).
    """
    n = _check_photon(n)
    alpha = complex(alpha)
    if alpha == 0:
        return 1.0 + 0j if n == 0 else 0j
    scale = math.exp(-abs(alpha) ** 2 - 0.5 * float(log_factorial(n)))
    return scale * alpha**n


def vacuum_evacuated_coeffs(alpha: float, n_max: int, convention: str = "damped") -> np.ndarray:
    """Number-basis coefficients of a coherent state with its vacuum part removed.

    Entry 0 is exactly 0; entries n >= 1 carry the coherent weight in the
    requested convention ("damped" -> e^{-|a|^2} normalization, "standard" ->
    e^{-|a|^2/2}).
    """
    if n_max < 1 or n_max > MAX_PHOTON:
        raise ValidationError(f"n_max must be in [1, {MAX_PHOTON}], got {n_max}")
    coeff = damped_coherent_coeff if convention == "damped" else coherent_coeff
    if convention not in ("damped", "standard"):
        raise ValidationError(f"unknown convention {convention!r}")
    out = np.zeros(n_max + 1, dtype=complex)
    for n in range(1, n_max + 1):
        out[n] = coeff(alpha, n)
    return out
