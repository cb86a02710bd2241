"""Weighted quasi-Monte Carlo estimation of PPT and cross-norm probability
ratios for random bipartite density matrices under the Hilbert-Schmidt and
monotone-metric measures."""

from .config import RunConfig
from .criteria import CriterionOutcome, Split, cross_norm_pass, is_ppt, partial_transpose, realign
from .estimator import (
    Accumulator,
    EditRule,
    IntervalDelta,
    edit_series,
    omega,
    pooled_omega,
    probability,
)
from .faure import SequenceConfig, faure_point, prng_stream, stream
from .measures import HS, MetricKind, hs_density, metric_from_name, monotone_density, weight
from .oracle import exact_area_to_volume_ratio, ginibre_state, mc_ppt_probability
from .runner import accumulate_only, report, resume, run
from .states import (
    SpectrumPoint,
    assemble_state,
    cube_to_state,
    simplex_from_cube,
    unitary_from_cube,
)

__version__ = "0.1.0"

__all__ = [
    "Accumulator",
    "CriterionOutcome",
    "EditRule",
    "HS",
    "IntervalDelta",
    "MetricKind",
    "RunConfig",
    "SequenceConfig",
    "SpectrumPoint",
    "Split",
    "accumulate_only",
    "assemble_state",
    "cross_norm_pass",
    "cube_to_state",
    "edit_series",
    "exact_area_to_volume_ratio",
    "faure_point",
    "ginibre_state",
    "hs_density",
    "is_ppt",
    "mc_ppt_probability",
    "metric_from_name",
    "monotone_density",
    "omega",
    "partial_transpose",
    "pooled_omega",
    "prng_stream",
    "probability",
    "realign",
    "report",
    "resume",
    "run",
    "simplex_from_cube",
    "stream",
    "unitary_from_cube",
    "weight",
]
