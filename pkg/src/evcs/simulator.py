"""Exact truncated joint photon-number amplitudes of the cascade, the heralded
grid conditioned on a single detected photon, and the analytic-limit
quantities used to characterize the conditioned output.

The three input expansions are capped at ``trunc_in`` photons each.  The
amplitude of an output cell (N_u, N_v, N_w) is a sum over every decomposition

    n_u + l_u + m_u = N_u,  n_v + l_v + m_v = N_v,  n_w + l_w = N_w

with n = n_u+n_v+n_w, l = l_u+l_v+l_w, m = m_u+m_v all <= trunc_in, of

    sqrt(N_u! N_v! N_w!) * e^{-(|b|^2+|g|^2)/2} * C_n(xi) * b^l * g^m
    * sqrt(n!)/(n_u! n_v! n_w!) * 1/(l_u! l_v! l_w!) * 1/(m_u! m_v!)
    * q-coefficient powers,

where the leading sqrt converts creation-operator monomials to normalized
number states.  Terms are always reduced in ascending lexicographic order of
the decomposition tuple (n_u, n_v, n_w, l_u, l_v, l_w, m_u, m_v); generation
order is canonicalized first, so results are bitwise reproducible regardless
of iteration strategy or thread count.
"""

import cmath
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import ConditionError, DegenerateScenarioError, TruncationMassError, ValidationError
from .fock import CoherentParam, SqueezeParam, log_factorial
from .network import BeamSplitterSpec, QMap, compose_q, zero_sum_residual

__all__ = [
    "ScenarioSpec",
    "JointAmplitudeTensor",
    "HeraldedGrid",
    "PsiWApproximation",
    "make_scenario",
    "joint_amplitudes",
    "herald_single",
    "heralded_grid",
    "smallv_metric",
    "approx_psi_w",
]

_MAX_TRUNC = 64


@dataclass(frozen=True)
class ScenarioSpec:
    """Complete description of one run of the cascade.

    ``beta`` is the coherent input on the b mode and must carry phase 0; the
    relative phase theta lives on ``gamma``.  ``trunc_in`` caps each input
    expansion, ``trunc_out`` the reported heralded grid.
    """

    squeeze: SqueezeParam
    beta: CoherentParam
    gamma: CoherentParam
    bs1: BeamSplitterSpec
    bs2: BeamSplitterSpec
    trunc_in: int = 16
    trunc_out: int = 9

    def __post_init__(self):
        if self.beta.phase != 0.0:
            raise ValidationError("the b-mode coherent phase is fixed to 0; fold it into theta")
        if not 1 <= self.trunc_in <= _MAX_TRUNC:
            raise ValidationError(f"trunc_in must be in [1, {_MAX_TRUNC}], got {self.trunc_in}")
        if not 0 <= self.trunc_out <= self.trunc_in:
            raise ValidationError("trunc_out must satisfy 0 <= trunc_out <= trunc_in")

    @property
    def beta_amp(self) -> complex:
        return complex(self.beta.magnitude)

    @property
    def gamma_amp(self) -> complex:
        return self.gamma.amplitude

    @property
    def qmap(self) -> QMap:
        return compose_q(self.bs1, self.bs2)


def make_scenario(
    s: float,
    beta0: float,
    gamma0: float,
    t1: float,
    t2: float,
    phi: float = math.pi,
    theta: float = math.pi,
    bs_phases: tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0),
    trunc_in: int = 16,
    trunc_out: int = 9,
) -> ScenarioSpec:
    """Convenience constructor from bare numbers.

    ``bs_phases`` is (phi_tau1, phi_rho1, phi_tau2, phi_rho2); all default to 0.
    """
    pt1, pr1, pt2, pr2 = bs_phases
    return ScenarioSpec(
        squeeze=SqueezeParam(s, phi),
        beta=CoherentParam(beta0, 0.0),
        gamma=CoherentParam(gamma0, theta),
        bs1=BeamSplitterSpec(t1, pt1, pr1),
        bs2=BeamSplitterSpec(t2, pt2, pr2),
        trunc_in=trunc_in,
        trunc_out=trunc_out,
    )


@dataclass
class JointAmplitudeTensor:
    """Dense amplitudes over (N_u, N_v, N_w), each index up to ``trunc_in``.

    ``captured_mass`` is the squared norm inside the box; ``mass_outside_box``
    is the (small) mass the truncated inputs generate at indices beyond the
    box.  Deterministic for a fixed scenario: the summation order is pinned.
    """

    amplitudes: np.ndarray
    trunc_in: int
    trunc_out: int
    captured_mass: float
    mass_outside_box: float

    @property
    def total_mass(self) -> float:
        return self.captured_mass + self.mass_outside_box


@dataclass
class HeraldedGrid:
    """Amplitudes C(1, n, m) for n, m <= trunc_out after a single-photon herald.

    ``p`` holds the probabilities |C|^2, ``pr`` their sum exactly as stored,
    and ``pu`` the fraction of ``pr`` on the two axes (the (0,0) cell is
    counted in both axis sums, matching the literal definition).  ``pu`` is 0
    for an all-zero grid; whether that is an error is the caller's call.
    """

    c: np.ndarray
    p: np.ndarray = field(init=False)
    pr: float = field(init=False)
    pu: float = field(init=False)

    def __post_init__(self):
        self.p = self.c.real**2 + self.c.imag**2
        self.pr = float(np.sum(self.p))
        axis = float(np.sum(self.p[:, 0]) + np.sum(self.p[0, :]))
        self.pu = axis / self.pr if self.pr > 0.0 else 0.0

    @property
    def trunc_out(self) -> int:
        return self.c.shape[0] - 1


def _check_not_degenerate(grid: HeraldedGrid) -> HeraldedGrid:
    if grid.pr < 1e-15:
        raise DegenerateScenarioError(
            f"heralding probability {grid.pr:.3e} is numerically zero"
        )
    return grid


# ---------------------------------------------------------------------------
# index tables shared by the full-tensor and heralded-slice kernels


@lru_cache(maxsize=8)
def _tables(trunc_in: int):
    """Composition tables for one input cap, all in ascending lexicographic order."""
    t = trunc_in
    n_triples = np.array(
        [(a, b, c) for a in range(t + 1) for b in range(t + 1 - a) for c in range(t + 1 - a - b)],
        dtype=np.int64,
    )
    m_pairs = np.array(
        [(a, b) for a in range(t + 1) for b in range(t + 1 - a)],
        dtype=np.int64,
    )
    l_triples = n_triples  # same index set
    stride = 3 * t + 1  # virtual box edge: each output index is at most 3 * trunc_in
    n_l = len(l_triples)
    n_m = len(m_pairs)
    jl = np.repeat(np.arange(n_l), n_m)
    jm = np.tile(np.arange(n_m), n_l)
    du = l_triples[jl, 0] + m_pairs[jm, 0]
    dv = l_triples[jl, 1] + m_pairs[jm, 1]
    dw = l_triples[jl, 2]
    off = du * stride * stride + dv * stride + dw
    even_rows = np.nonzero(n_triples.sum(axis=1) % 2 == 0)[0]
    return {
        "stride": stride,
        "n_triples": n_triples,
        "l_triples": l_triples,
        "m_pairs": m_pairs,
        "jl": jl,
        "jm": jm,
        "du": du,
        "dv": dv,
        "dw": dw,
        "off": off,
        "off_len": int(off.max()) + 1,
        "even_rows": even_rows,
    }


@lru_cache(maxsize=8)
def _herald_tables(trunc_in: int, trunc_out: int):
    """Subsets of the composition tables that can reach the N_u = 1 slice."""
    tab = _tables(trunc_in)
    k = trunc_out
    n_triples = tab["n_triples"]
    rows = [
        i
        for i in tab["even_rows"]
        if n_triples[i, 0] <= 1 and n_triples[i, 1] <= k and n_triples[i, 2] <= k
    ]
    subsets = {}
    for du_needed in (0, 1):
        sel = np.nonzero((tab["du"] == du_needed) & (tab["dv"] <= k) & (tab["dw"] <= k))[0]
        subsets[du_needed] = {
            "combo": sel,
            "dv": tab["dv"][sel],
            "dw": tab["dw"][sel],
            "goff": tab["dv"][sel] * (k + 1) + tab["dw"][sel],
        }
    return {"rows": np.array(rows, dtype=np.int64), "subsets": subsets}


def _mode_factors(spec: ScenarioSpec, tab) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-input composition weights A (squeezed), B (beta beam), G (gamma beam)."""
    q = spec.qmap
    nt = tab["n_triples"]
    nu, nv, nw = nt[:, 0], nt[:, 1], nt[:, 2]
    n = nu + nv + nw
    half = n // 2
    s = spec.squeeze.s
    base = -0.5 * cmath.exp(1j * spec.squeeze.phi) * math.tanh(s)
    ln_mag = (
        log_factorial(n)  # one sqrt(n!) from C_n, one from the multinomial
        - log_factorial(half)
        - 0.5 * math.log(math.cosh(s))
        - log_factorial(nu)
        - log_factorial(nv)
        - log_factorial(nw)
    )
    a_vals = (
        np.exp(ln_mag)
        * np.power(base, half)
        * np.power(q.q_a_u, nu)
        * np.power(q.q_a_v, nv)
        * np.power(q.q_a_w, nw)
    )
    a_vals[n % 2 == 1] = 0.0

    lt = tab["l_triples"]
    lu, lv, lw = lt[:, 0], lt[:, 1], lt[:, 2]
    ltot = lu + lv + lw
    beta = spec.beta_amp
    b_vals = (
        math.exp(-0.5 * abs(beta) ** 2)
        * np.power(beta, ltot)
        * np.exp(-(log_factorial(lu) + log_factorial(lv) + log_factorial(lw)))
        * np.power(q.q_b_u, lu)
        * np.power(q.q_b_v, lv)
        * np.power(q.q_b_w, lw)
    )

    mp = tab["m_pairs"]
    mu, mv = mp[:, 0], mp[:, 1]
    mtot = mu + mv
    gamma = spec.gamma_amp
    g_vals = (
        math.exp(-0.5 * abs(gamma) ** 2)
        * np.power(gamma, mtot)
        * np.exp(-(log_factorial(mu) + log_factorial(mv)))
        * np.power(q.q_c_u, mu)
        * np.power(q.q_c_v, mv)
    )
    return a_vals, np.asarray(b_vals, dtype=complex), np.asarray(g_vals, dtype=complex)


def _output_norm_factors(box: int) -> np.ndarray:
    """sqrt(N_u! N_v! N_w!) over a cubic box of edge ``box``."""
    half_lf = 0.5 * log_factorial(np.arange(box))
    return np.exp(half_lf[:, None, None] + half_lf[None, :, None] + half_lf[None, None, :])


def _canonical_combo_order(tab, iteration_order: str):
    """Indices into the combo tables, canonicalized to (l, m) lexicographic order.

    ``iteration_order`` only changes how candidates are generated; they are
    stably sorted back to the canonical order before any summation, which is
    what makes the reduction order independent of iteration strategy.
    """
    n_m = len(tab["m_pairs"])
    if iteration_order == "canonical":
        return np.arange(len(tab["off"]))
    if iteration_order == "m_major":
        n_l = len(tab["l_triples"])
        jm = np.repeat(np.arange(n_m), n_l)
        jl = np.tile(np.arange(n_l), n_m)
        rank = jl * n_m + jm
        return rank[np.argsort(rank, kind="stable")]  # == sorted canonical ranks
    raise ValidationError(f"unknown iteration order {iteration_order!r}")


def joint_amplitudes(spec: ScenarioSpec, _iteration_order: str = "canonical") -> JointAmplitudeTensor:
    """Full joint amplitude tensor of the cascade output.

    Independent output cells may safely be read concurrently; the computation
    itself runs in a single fixed order so two calls (from any threads) return
    bit-identical arrays.  Raises :class:`TruncationMassError` when the box
    captures less than 0.99 of the probability mass.
    """
    tab = _tables(spec.trunc_in)
    order = _canonical_combo_order(tab, _iteration_order)
    off = tab["off"][order]
    a_vals, b_vals, g_vals = _mode_factors(spec, tab)
    bg = b_vals[tab["jl"][order]] * g_vals[tab["jm"][order]]

    stride = tab["stride"]
    off_len = tab["off_len"]
    acc_re = np.zeros(stride**3)
    acc_im = np.zeros(stride**3)
    nt = tab["n_triples"]
    bases = nt[:, 0] * stride * stride + nt[:, 1] * stride + nt[:, 2]
    for i in tab["even_rows"]:  # odd totals carry an exactly-zero squeezed weight
        w = a_vals[i] * bg
        base = int(bases[i])
        acc_re[base : base + off_len] += np.bincount(off, weights=w.real, minlength=off_len)
        acc_im[base : base + off_len] += np.bincount(off, weights=w.imag, minlength=off_len)

    full = (acc_re + 1j * acc_im).reshape(stride, stride, stride)
    edge = spec.trunc_in + 1
    box = full[:edge, :edge, :edge] * _output_norm_factors(edge)
    norm_sq = full.real**2 + full.imag**2
    # weight |C|^2 by N!-factors to get physical probabilities outside the box too
    big_norm = _output_norm_factors(stride)
    total = float(np.sum(norm_sq * big_norm**2))
    captured = float(np.sum(box.real**2 + box.imag**2))
    tensor = JointAmplitudeTensor(
        amplitudes=box,
        trunc_in=spec.trunc_in,
        trunc_out=spec.trunc_out,
        captured_mass=captured,
        mass_outside_box=total - captured,
    )
    if captured < 0.99:
        raise TruncationMassError(
            "input truncation leaves a heavy tail; raise trunc_in", captured
        )
    return tensor


def herald_single(tensor: JointAmplitudeTensor) -> HeraldedGrid:
    """Condition on exactly one photon in the u mode.

    Extracts the N_u = 1 slice up to ``trunc_out`` on both remaining indices
    and assembles probabilities, the heralding probability ``pr`` and the
    axis fraction ``pu``.  Raises :class:`DegenerateScenarioError` when pr is
    numerically zero.
    """
    k = tensor.trunc_out + 1
    if tensor.amplitudes.shape[0] < 2:
        raise ValidationError("tensor does not cover N_u = 1")
    return _check_not_degenerate(HeraldedGrid(c=tensor.amplitudes[1, :k, :k].copy()))


def heralded_grid(spec: ScenarioSpec) -> HeraldedGrid:
    """Heralded grid computed directly, without materializing the full tensor.

    Restricted to the cells the herald keeps, with the same canonical
    reduction order as :func:`joint_amplitudes`; the result is bit-identical
    to ``herald_single(joint_amplitudes(spec))`` at a fraction of the cost,
    which is what makes large parameter scans practical.
    """
    tab = _tables(spec.trunc_in)
    ht = _herald_tables(spec.trunc_in, spec.trunc_out)
    a_vals, b_vals, g_vals = _mode_factors(spec, tab)
    k = spec.trunc_out
    edge = k + 1
    g_re = np.zeros(edge * edge)
    g_im = np.zeros(edge * edge)
    nt = tab["n_triples"]
    jl, jm = tab["jl"], tab["jm"]
    for i in ht["rows"]:
        nu, nv, nw = (int(x) for x in nt[i])
        sub = ht["subsets"][1 - nu]
        sel = (sub["dv"] <= k - nv) & (sub["dw"] <= k - nw)
        combo = sub["combo"][sel]
        w = a_vals[i] * (b_vals[jl[combo]] * g_vals[jm[combo]])
        bins = sub["goff"][sel] + (nv * edge + nw)
        g_re += np.bincount(bins, weights=w.real, minlength=edge * edge)
        g_im += np.bincount(bins, weights=w.imag, minlength=edge * edge)

    c = (g_re + 1j * g_im).reshape(edge, edge)
    # sqrt(N_u! N_v! N_w!) with N_u = 1, associated exactly as in the full tensor
    half_lf = 0.5 * log_factorial(np.arange(edge))
    h1 = 0.5 * float(log_factorial(1))
    c = c * np.exp((h1 + half_lf[:, None]) + half_lf[None, :])
    return _check_not_degenerate(HeraldedGrid(c=c))


def smallv_metric(spec: ScenarioSpec) -> float:
    """Modulus of (q_a^w / (beta q_b^w))^2 * (-e^{i phi} tanh(s) / 2).

    When this is much smaller than 1, only the leading term of the k-sum in
    :func:`approx_psi_w` survives and the heralded w branch approaches a
    photon-added coherent state.
    """
    q = spec.qmap
    denom = spec.beta_amp * q.q_b_w
    if denom == 0:
        raise ZeroDivisionError("beta * q_b_w vanishes; the metric is undefined")
    s = spec.squeeze.s
    return abs((q.q_a_w / denom) ** 2 * (-0.5 * cmath.exp(1j * spec.squeeze.phi) * math.tanh(s)))


@dataclass
class PsiWApproximation:
    """w-mode coefficient vectors of the heralded (N_v = 0) branch.

    ``full`` sums the k-series exactly; ``k1_only`` keeps the leading term,
    the photon-added-coherent limit.  Both share the normalization of the
    C(1, 0, N_w) row of the joint tensor, and entry 0 is exactly zero.
    """

    full: np.ndarray
    k1_only: np.ndarray


def approx_psi_w(spec: ScenarioSpec, n_max: int | None = None, tol: float = 1e-8) -> PsiWApproximation:
    """Analytic k-sum for the w branch of the heralded state.

    Requires the heralding condition to hold: the zero-sum residual must be
    below ``tol``, else :class:`ConditionError` is raised.  The same per-input
    cap as the joint tensor is applied to the summation indices so the full-k
    vector is directly comparable with the C(1, 0, .) row.
    """
    if n_max is None:
        n_max = spec.trunc_out
    q = spec.qmap
    beta, gamma = spec.beta_amp, spec.gamma_amp
    residual = zero_sum_residual(beta, gamma, q)
    if residual > tol:
        raise ConditionError(
            f"zero-sum residual {residual:.3e} exceeds {tol:g}; solve t2 first"
        )
    denom = beta * q.q_b_w
    if denom == 0:
        raise ZeroDivisionError("beta * q_b_w vanishes; the k-series is undefined")
    s = spec.squeeze.s
    base = -0.5 * cmath.exp(1j * spec.squeeze.phi) * math.tanh(s)
    prefactor = (
        math.exp(-0.5 * (abs(beta) ** 2 + abs(gamma) ** 2))
        * 2.0
        * q.q_a_u
        / math.sqrt(math.cosh(s))
    )
    ratio = q.q_a_w / denom
    full = np.zeros(n_max + 1, dtype=complex)
    k1 = np.zeros(n_max + 1, dtype=complex)
    for n_w in range(1, n_max + 1):
        root_fact = math.exp(0.5 * float(log_factorial(n_w)))
        acc = 0j
        for k in range(1, (n_w + 1) // 2 + 1):
            if 2 * k > spec.trunc_in or n_w - 2 * k + 1 > spec.trunc_in:
                continue
            term = (
                denom**n_w
                * ratio ** (2 * k - 1)
                * base**k
                / math.exp(float(log_factorial(n_w - 2 * k + 1) + log_factorial(k - 1)))
            )
            acc += term
            if k == 1:
                k1[n_w] = prefactor * term * root_fact
        full[n_w] = prefactor * acc * root_fact
    return PsiWApproximation(full=full, k1_only=k1)
