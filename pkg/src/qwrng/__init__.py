"""Quantum-walk randomness generation laboratory.

A desk-scale toolkit around one protocol: run a Hadamard walk on a cycle,
measure positions, certify extractable min-entropy from a sampling argument
against an untrusted source of bounded dimension, and compress the outcomes
into a near-uniform key with Toeplitz hashing.

The pieces are importable on their own:

* walk: the cycle walk, its peak position probability, and scan utilities.
* sampling: deviation thresholds, d-ary entropies, failure-probability
  bounds, and Monte-Carlo checks of the sampling argument.
* rate: the certified key-length formula and rate curves over run sizes.
* protocol: source models, seeded measurement sampling, subset choice,
  Toeplitz extraction, and full protocol runs.
* cli: the qwrng command-line tool built from all of the above.
"""

from .protocol import (
    KeyDiagnostics,
    ProtocolRun,
    Seeds,
    SourceModel,
    ToeplitzSeed,
    choose_subset,
    decode_raw,
    encode_raw,
    key_diagnostics,
    make_toeplitz_seed,
    run_protocol,
    run_protocol_aggregate,
    toeplitz_extract,
)
from .rate import (
    CurvePoint,
    RateInputs,
    RateReport,
    asymptotic_rate,
    key_length,
    rate_curve,
)
from .sampling import (
    SamplingParams,
    Word,
    classical_sampling_error,
    entropy_d,
    extended_entropy_d,
    good_set_member,
    log2_binomial,
    monte_carlo_sampling_check,
    relative_weight,
    sampling_delta,
)
from .walk import (
    WalkParams,
    basis_state,
    evolve,
    gamma,
    gamma_scan,
    gamma_series,
    min_entropy_of_distribution,
    position_distribution,
    uncertainty_overlap,
    walk_step,
    walk_step_adjoint,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # walk
    "WalkParams",
    "basis_state",
    "walk_step",
    "walk_step_adjoint",
    "evolve",
    "position_distribution",
    "gamma",
    "gamma_series",
    "gamma_scan",
    "uncertainty_overlap",
    "min_entropy_of_distribution",
    # sampling
    "SamplingParams",
    "Word",
    "relative_weight",
    "entropy_d",
    "extended_entropy_d",
    "sampling_delta",
    "classical_sampling_error",
    "good_set_member",
    "log2_binomial",
    "monte_carlo_sampling_check",
    # rate
    "RateInputs",
    "RateReport",
    "CurvePoint",
    "key_length",
    "rate_curve",
    "asymptotic_rate",
    # protocol
    "Seeds",
    "SourceModel",
    "ProtocolRun",
    "ToeplitzSeed",
    "KeyDiagnostics",
    "choose_subset",
    "encode_raw",
    "decode_raw",
    "make_toeplitz_seed",
    "toeplitz_extract",
    "key_diagnostics",
    "run_protocol",
    "run_protocol_aggregate",
]
