"""Bound-state spectra of 1D Hermitian and complex PT-symmetric double wells.

Solves the characteristic equations of piecewise potentials (double delta
wells, delta wells between rigid walls, square double wells) and a shooting
formulation of smooth confining potentials, with complex root finding,
parameter continuation, exceptional-point location, and an independent
finite-difference oracle.
"""

__version__ = "0.1.0"

from .errors import (
    AmbiguousTransition,
    BadBracket,
    BadGeometry,
    ConfigError,
    DegenerateEnergy,
    IntegrationOverflow,
    LostBranch,
    NoConvergence,
    PtspectraError,
    UnboundedPotential,
)
from .potentials import (
    DeltaInBox,
    DeltaTerm,
    DoubleDelta,
    HermitianCounterpart,
    LinearBox,
    LinearPT,
    PotentialSpec,
    QuadraticPT,
    ScarfII,
    SquareDoubleWell,
    delta_terms,
    evaluate_potential,
    spec_from_json,
    spec_to_json,
)
from .chareq import (
    CharFn,
    TransferChain,
    build_charfn,
    char_dddp,
    char_delta_box,
    char_delta_box_det,
    char_square_dw,
    is_physical,
    momentum_p,
    transfer_matrices,
    wavenumbers,
)
from .rootfind import (
    EPResult,
    Root,
    RootOptions,
    bisect_transition,
    find_all_roots,
    find_ep,
    polish,
    scan_complex,
    scan_real,
)
from .shooting import (
    ShootingOptions,
    build_charfn_shooting,
    eigenvalues_shooting,
    integrate_side,
    mismatch,
)
from .oracle import (
    TridiagonalOperator,
    char_det,
    discretize,
    oracle_eigenvalues,
)
from .sweep import (
    Branch,
    SweepPlan,
    TransitionReport,
    classify_transition,
    make_family,
    pair_conjugates,
    run_sweep,
)

__all__ = [name for name in dir() if not name.startswith("_")]
