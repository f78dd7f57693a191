"""Toolkit for heralded generation of entangled vacuum-evacuated coherent states.

A squeezed vacuum and two coherent beams feed two cascaded beam splitters;
detecting exactly one photon in the monitored output port projects the other
two ports onto an entangled state whose branches are coherent states with
the vacuum component removed.  This package computes the exact truncated
joint photon-number amplitudes of that process, the conditional grid with
its probability and purity metrics, the analytic small-parameter limits,
fits of the conditional state to the two-branch model, and grid searches for
good operating points.  A CLI (``evcs``) exposes simulation, verification
against an independent dense-propagation engine, the bundled reference
table, searches, and fitting, with JSON/CSV/figure output.
"""

__version__ = "0.1.0"

from .errors import (
    ConditionError,
    DegenerateScenarioError,
    EmptyResultError,
    EvcsError,
    NoSolutionError,
    PropagationLeakageError,
    ScenarioParseError,
    TruncationMassError,
    ValidationError,
)
from .fock import (
    CoherentParam,
    SqueezeParam,
    coherent_coeff,
    damped_coherent_coeff,
    normalize_phase,
    squeezed_coeff,
    vacuum_evacuated_coeffs,
)
from .network import (
    BeamSplitterSpec,
    QMap,
    bs_matrix,
    cascade_matrix,
    compose_q,
    solve_t2,
    t2_closed_forms,
    zero_sum_residual,
)
from .simulator import (
    HeraldedGrid,
    JointAmplitudeTensor,
    PsiWApproximation,
    ScenarioSpec,
    approx_psi_w,
    herald_single,
    heralded_grid,
    joint_amplitudes,
    make_scenario,
    smallv_metric,
)
from .propagation import (
    TruncatedState,
    apply_beam_splitter,
    build_input_state,
    engine_deviation,
    propagate_joint_amplitudes,
)
from .fit import FitResult, ansatz_grid, fit_entangled
from .search import (
    ScenarioRow,
    SearchSpace,
    TABLE1,
    evaluate_scenario,
    reference_spec,
    search,
    table1_rows,
)

__all__ = [name for name in dir() if not name.startswith("_")]
