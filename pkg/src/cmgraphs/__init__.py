"""Component counts in configuration-model random graphs: samplers, census, limit theory."""

from .census import CanonGraph, canonical_code, census, count_class, count_copies, named_graph
from .confmodel import Multigraph, sample_multigraph, sample_simple, sample_via_cuffs
from .degrees import DegreeDistribution, DegreeSequence, from_counts, poisson
from .formulas import giant_mean_var, lambda_H, poisson_rates, sigma_pair

__version__ = "0.1.0"
