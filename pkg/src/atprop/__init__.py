"""Node-wise graph feature propagation precompute engine.

Pipeline: mask the edges of densely connected nodes (correction), encode each
node's local context into a propagation kernel coefficient (encoding), run
k-step weighted sparse propagation with the node-wise operator
D^(r-1) A D^(-r) (propagation), analyze convergence spectrally (spectral),
and train a linear probe on the result (probe).
"""

from .config import PipelineConfig, stage_seed
from .correction import (
    CorrectionReport,
    MaskPlan,
    apply_mask,
    select_nodes,
    select_nodes_epsilon,
)
from .encoding import (
    EncodingConfig,
    KernelCoefficients,
    cluster_encoding,
    combine,
    compute_kernel,
    degree_encoding,
    eigenvector_encoding,
)
from .errors import (
    AtpropError,
    CapabilityError,
    ConvergenceError,
    DependencyError,
    InvalidStateError,
    NumericError,
    ParseError,
    PropertyViolationError,
    ValidationError,
)
from .graph import (
    DegreeVector,
    SparseGraph,
    add_self_loops,
    connected_components,
    degrees,
    from_edge_pairs,
    generate,
    load_edge_list,
    save_edge_list,
    to_scipy,
    validate_graph,
)
from .pipeline import run_pipeline, run_stage
from .probe import (
    DegreeGroupReport,
    ProbeConfig,
    SplitSpec,
    TrainedProbe,
    degree_group_report,
    evaluate,
    predict,
    train_probe,
)
from .propagation import (
    NodeWiseOperator,
    PropagatedFeatures,
    PropagationConfig,
    build_operator,
    propagate,
    scheme_weights,
)
from .spectral import (
    ComponentGap,
    ConvergenceReport,
    PropagationMatrixView,
    component_second_eigenvalues,
    convergence_bound,
    second_eigenvalue,
    spectral_gap_report,
    stationary_distribution,
    verify_bound,
)

__version__ = "0.1.0"
