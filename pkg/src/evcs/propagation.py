"""Reference engine: dense state-vector propagation in a truncated three-mode
Fock space.

Deliberately simple and slow.  The input product state is built from the
same single-mode coefficients the combinatorial engine uses, then pushed
through each beam splitter by exponentiating the two-mode generator

    theta * (e^{i phi_g} a^dag b - e^{-i phi_g} a b^dag)

blockwise per total photon number (the generator conserves it, so each block
is a finite tridiagonal chain and the matrix exponential is exact there).
Blocks are never truncated mid-flight: the pair extent grows to hold every
reachable total, so propagation is exact up to the input truncation and any
reported leakage comes only from an explicit retention cap.
"""

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import expm

from .errors import PropagationLeakageError, TruncationMassError, ValidationError
from .fock import coherent_coeff, squeezed_coeff
from .network import BeamSplitterSpec
from .simulator import ScenarioSpec, joint_amplitudes

__all__ = [
    "TruncatedState",
    "build_input_state",
    "apply_beam_splitter",
    "propagate_joint_amplitudes",
    "engine_deviation",
]

_LEAK_TOL = 1e-9


@dataclass
class TruncatedState:
    """Three-mode amplitudes plus the norm lost to explicit retention caps."""

    amplitudes: np.ndarray
    leakage: float = 0.0

    def norm_squared(self) -> float:
        a = self.amplitudes
        return float(np.sum(a.real**2 + a.imag**2))


def build_input_state(spec: ScenarioSpec, cap: int) -> TruncatedState:
    """Product state squeezed (x) coherent (x) coherent, each mode cut at ``cap``.

    Raises :class:`TruncationMassError` when the cap captures less than 0.999
    of the product mass.
    """
    if cap < spec.trunc_in:
        raise ValidationError(f"cap {cap} is below the scenario's input truncation {spec.trunc_in}")
    ns = range(cap + 1)
    vec_a = np.array([squeezed_coeff(spec.squeeze, n) for n in ns])
    vec_b = np.array([coherent_coeff(spec.beta_amp, n) for n in ns])
    vec_c = np.array([coherent_coeff(spec.gamma_amp, n) for n in ns])
    mass = float(
        np.sum(np.abs(vec_a) ** 2) * np.sum(np.abs(vec_b) ** 2) * np.sum(np.abs(vec_c) ** 2)
    )
    if mass < 0.999:
        raise TruncationMassError("cap too small for these inputs", mass)
    amps = vec_a[:, None, None] * vec_b[None, :, None] * vec_c[None, None, :]
    return TruncatedState(amplitudes=amps)


def _chain_unitary(bs: BeamSplitterSpec, total: int, flip_convention: bool = False) -> np.ndarray:
    """Unitary of one splitter on the total-photon-number chain |x, total - x>.

    ``flip_convention`` drops the pi offset of the generator phase; that flips
    the sign of every reflected amplitude and exists purely as a negative
    control for the verification command.
    """
    theta = math.acos(min(max(bs.t, 0.0), 1.0))
    phi_g = bs.phi_rho if flip_convention else math.pi + bs.phi_rho
    x = np.arange(total, dtype=float)
    coupling = theta * np.sqrt((x + 1.0) * (total - x))
    gen = np.zeros((total + 1, total + 1), dtype=complex)
    phase = np.exp(1j * phi_g)
    gen[np.arange(1, total + 1), np.arange(total)] = coupling * phase
    gen[np.arange(total), np.arange(1, total + 1)] = -coupling * np.conj(phase)
    unitary = expm(gen)
    levels = np.arange(total + 1, dtype=float)
    pre = np.exp(1j * bs.phi_tau * (total - levels))
    post = np.exp(-1j * bs.phi_tau * levels)
    return (post[:, None] * unitary) * pre[None, :]


def apply_beam_splitter(
    state: TruncatedState,
    bs: BeamSplitterSpec,
    modes: tuple[int, int],
    keep: int | None = None,
    flip_convention: bool = False,
) -> TruncatedState:
    """Apply one splitter to a mode pair.

    The output pair extent covers every reachable total, so the operation is
    exactly unitary.  With ``keep`` set, both output modes are cut back to
    that many levels afterwards and the removed norm is accumulated into
    ``leakage``; more than 1e-9 of it raises
    :class:`PropagationLeakageError`.
    """
    i, j = modes
    arr = np.moveaxis(state.amplitudes, (i, j), (0, 1))
    si, sj = arr.shape[:2]
    rest = arr.shape[2:]
    flat = arr.reshape(si, sj, -1)
    sout = si + sj - 1
    out = np.zeros((sout, sout, flat.shape[2]), dtype=complex)
    for total in range(si + sj - 1):
        xs = np.arange(max(0, total - (sj - 1)), min(total, si - 1) + 1)
        if len(xs) == 0:
            continue
        block = flat[xs, total - xs, :]
        unitary = _chain_unitary(bs, total, flip_convention)
        ys = np.arange(total + 1)
        out[ys, total - ys, :] = unitary[:, xs] @ block
    out = out.reshape((sout, sout) + rest)
    out = np.moveaxis(out, (0, 1), (i, j))

    leakage = state.leakage
    if keep is not None:
        edge = keep + 1
        sl = [slice(None)] * out.ndim
        total_mass = float(np.sum(out.real**2 + out.imag**2))
        sl[i] = slice(0, edge)
        sl[j] = slice(0, edge)
        out = out[tuple(sl)].copy()
        leakage += total_mass - float(np.sum(out.real**2 + out.imag**2))
        if leakage > _LEAK_TOL:
            raise PropagationLeakageError(
                f"retention cap lost {leakage:.3e} of the norm; raise the cap"
            )
    return TruncatedState(amplitudes=out, leakage=leakage)


def propagate_joint_amplitudes(
    spec: ScenarioSpec, cap: int, flip_convention: bool = False
) -> TruncatedState:
    """Push the input state through both splitters; axes ordered (u, v, w).

    Comparable index-by-index with the combinatorial engine run at the same
    input truncation.
    """
    state = build_input_state(spec, cap)
    state = apply_beam_splitter(state, spec.bs1, (0, 1))  # (a, b, c) -> (d, w, c)
    state = apply_beam_splitter(state, spec.bs2, (0, 2), flip_convention=flip_convention)
    # axes are now (u, w, v)
    return TruncatedState(
        amplitudes=np.transpose(state.amplitudes, (0, 2, 1)).copy(),
        leakage=state.leakage,
    )


def engine_deviation(
    spec: ScenarioSpec,
    cap: int = 12,
    compare_up_to: int = 8,
    flip_convention: bool = False,
) -> float:
    """Max absolute deviation between the two engines over indices <= ``compare_up_to``.

    Both engines run with the same per-input photon cap so they expand exactly
    the same truncated state; the remaining deviation is numerical only.
    """
    if compare_up_to > cap:
        raise ValidationError("compare_up_to cannot exceed the cap")
    spec_cap = replace(spec, trunc_in=cap, trunc_out=min(spec.trunc_out, cap))
    combinatorial = joint_amplitudes(spec_cap).amplitudes
    propagated = propagate_joint_amplitudes(spec_cap, cap, flip_convention).amplitudes
    k = compare_up_to + 1
    return float(np.max(np.abs(combinatorial[:k, :k, :k] - propagated[:k, :k, :k])))
