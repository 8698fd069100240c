"""Deep belief network approximation toolkit.

Thin wrapper over the C++ core. Densities are referenced by spec strings
("gaussian 1", "truncated_exponential 1 1 1", "standard_gaussian 1",
"from_parental", "uniform_box 0 1", "clipped_ramp 8", "gaussian_mixture ...")
and networks travel as their text serialization.
"""

from ._core import (
    approximate_kl,
    approximate_lq,
    approximate_sup,
    counterexample,
    measure,
    network_eval,
    network_info,
    network_roundtrip,
    network_sample,
    parent_norm,
    rbm_unit_marginals,
    run_config,
    synthesize_rbm,
    upsilon,
)

__all__ = [
    "approximate_kl",
    "approximate_lq",
    "approximate_sup",
    "counterexample",
    "measure",
    "network_eval",
    "network_info",
    "network_roundtrip",
    "network_sample",
    "parent_norm",
    "rbm_unit_marginals",
    "run_config",
    "synthesize_rbm",
    "upsilon",
]

__version__ = "0.1.0"
