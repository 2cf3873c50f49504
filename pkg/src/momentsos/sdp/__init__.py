"""Standard-form conversion, interior-point solving, and SDPA file exchange."""

from .ipm import SolveResult, solve_ipm
from .sdpa import read_sdpa, write_sdpa
from .standard import SdpBlock, SdpProblem, presolve_problem, to_standard_form

__all__ = [
    "SdpBlock",
    "SdpProblem",
    "SolveResult",
    "presolve_problem",
    "read_sdpa",
    "solve_ipm",
    "to_standard_form",
    "write_sdpa",
]
