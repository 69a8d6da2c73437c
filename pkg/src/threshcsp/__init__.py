"""threshcsp: (1 + O(eps))-approximation for MAX-2CSP and MAX-CUT on graphs
of bounded threshold rank, via top-eigenspace enumeration plus one small
degree-2 moment SDP per net point."""

from ._kernel import backend_name
from .instances import (
    CspInstance,
    GeneratedInstance,
    degree_diagonal,
    evaluate,
    evaluate_batch,
    generate,
    label_extended,
    maxcut_instance,
    normalized_adjacency,
    normalized_label_extended,
    validate,
)
from .net import EpsilonNet, NetSizeError, build_net, lift, net_size_bound
from .sdp import (
    AdmmOptions,
    Pseudoexpectation,
    SdpBuilder,
    build_sdp,
    expected_objective,
    round_assignments,
    solve_sdp,
)
from .solver import (
    BruteForceTooLargeError,
    SolveReport,
    SolverOptions,
    brute_force,
    brute_force_quadratic,
    solve_2csp,
    solve_boolean_quadratic,
    solve_maxcut,
)
from .spectral import (
    BoundReport,
    CertificateReport,
    Projector,
    SpectralData,
    eig_sym,
    rank_certificate,
    threshold_rank,
    top_eigenspace,
    verify_rank_bound,
)

__version__ = "0.1.0"
