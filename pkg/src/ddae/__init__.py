"""Linear time-invariant delay-differential algebraic equations.

Kernels as causal matrix-valued measures, well-posedness classification,
canonical block diagrams with causality analysis, fixed-step simulation,
characteristic-root search and predictor-feedback construction.
"""

from .measures import (
    Atom,
    AtomOffGrid,
    DelayKernel,
    ExpDensity,
    NonAtomicConvolution,
    PolyDensity,
    add,
    atom_at_zero,
    convolve,
    dirac,
    discretize,
    entry_kernel,
    laplace,
    scale_left,
    strip_zero_atom,
    total_variation,
    zero_kernel,
)
from .model import (
    DdaeSystem,
    InitialState,
    NotWellPosed,
    Posedness,
    WellPosedness,
    classify,
    consistency_residual,
    explicitize,
    initial_offset,
)
from .graph import (
    INTEGRATOR,
    BlockDiagram,
    CausalityReport,
    adjacency,
    canonical_diagram,
    causality_check,
    to_dot,
)
from .sim import HorizonNotMultipleOfStep, Trajectory, simulate, state_norm
from .spectrum import (
    DimensionTooLarge,
    Root,
    RootOnBoundary,
    SpectrumReport,
    WindowTooLarge,
    char_det,
    char_matrix,
    conv_det,
    count_roots,
    delta0_det,
    find_roots,
)
from .fsa import FsaPlant, Uncontrollable, build_fsa, place_poles, verify_fsa_identity

__version__ = "0.1.0"
