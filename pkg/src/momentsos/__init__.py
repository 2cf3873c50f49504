"""Sparsity-adapted moment relaxations for polynomial optimization.

Builds dense, correlative-sparse, term-sparse, and combined block moment
relaxations of polynomial problems, solves them with a built-in
interior-point SDP solver, and exchanges problems in SDPA sparse format.
"""

from .correlative import CliqueDecomposition, OrderTooLowError, build_csp_graph, decompose
from .graphs import (
    ChordalResult,
    Graph,
    chordal_extension_heuristic,
    chordal_extension_maximal,
    maximal_cliques,
    merge_cliques,
)
from .poly import (
    HalfDegrees,
    Polynomial,
    PopFormatError,
    PopInstance,
    canonicalize,
    degree,
    half_degrees,
    load_pop,
    parse_pop,
    reduce_binary,
    serialize_pop,
    support_of,
)
from .relax import (
    MomentIndex,
    MomentSdp,
    assemble_cs,
    assemble_cs_ts,
    assemble_dense,
    assemble_ts,
    moment_block,
    structure_summary,
)
from .sdp import SdpProblem, SolveResult, read_sdpa, solve_ipm, to_standard_form, write_sdpa
from .termsparse import (
    BlockStructure,
    initial_support,
    iterate,
    iterate_steps,
    iterate_until_stable,
    monomial_basis,
    newton_basis,
    tsp_graph,
    extend_support,
)

__version__ = "0.1.0"
