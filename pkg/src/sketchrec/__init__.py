"""Heavy-hitter sketches and sparse recovery at desk scale.

Streaming sketches (Count-Min with superset guarantee, dyadic search,
count-sketch estimation, a deterministic expander-based scheme), a
non-adaptive l2/l2 sparse recovery pipeline, adaptive measurement
schemes, and a Monte Carlo verification harness.
"""

from .field import (
    MERSENNE31,
    MERSENNE61,
    PolyHash,
    PrimeField,
    SignHash,
    make_hash,
    make_sign_hash,
    multipoint_eval,
)
from .streams import (
    SpikedSignal,
    TurnstileStream,
    exact_heavy_hitters,
    gen_spiked,
    gen_zipf,
    head_eps,
    head_tail,
    load_stream,
    materialize,
    save_stream,
)
from .countmin import CmConstants, CountMinG3, DyadicG3
from .countsketch import (
    CountSketchEst,
    CsConstants,
    GaussianMedianSketch,
    PartitionSketch,
)
from .expander import DetHHSketch, GUVParams, find_irreducible, guv_neighbor, verify_expansion
from .weak import WeakConstants, WeakSystem, WeakSystemOutput, weak_identify, weak_recover
from .pipeline import (
    LevelSpec,
    RecoveryResult,
    ScheduleConstants,
    SparsePipeline,
    build_schedule,
    sparse_recover,
    spiked_recover,
)
from .adaptive import (
    BinaryCode,
    MeasurementOracle,
    RoundViolation,
    adaptive_k_recover,
    low_sparsity_recover,
    one_sparse_recover,
    precondition,
    shrink,
)
from . import harness

__version__ = "0.1.0"

__all__ = [
    "MERSENNE31",
    "MERSENNE61",
    "PrimeField",
    "PolyHash",
    "SignHash",
    "make_hash",
    "make_sign_hash",
    "multipoint_eval",
    "TurnstileStream",
    "SpikedSignal",
    "materialize",
    "exact_heavy_hitters",
    "head_tail",
    "head_eps",
    "gen_zipf",
    "gen_spiked",
    "save_stream",
    "load_stream",
    "CmConstants",
    "CountMinG3",
    "DyadicG3",
    "CsConstants",
    "CountSketchEst",
    "GaussianMedianSketch",
    "PartitionSketch",
    "GUVParams",
    "guv_neighbor",
    "find_irreducible",
    "verify_expansion",
    "DetHHSketch",
    "WeakConstants",
    "WeakSystem",
    "WeakSystemOutput",
    "weak_identify",
    "weak_recover",
    "LevelSpec",
    "ScheduleConstants",
    "build_schedule",
    "SparsePipeline",
    "RecoveryResult",
    "sparse_recover",
    "spiked_recover",
    "MeasurementOracle",
    "RoundViolation",
    "BinaryCode",
    "precondition",
    "shrink",
    "one_sparse_recover",
    "adaptive_k_recover",
    "low_sparsity_recover",
    "harness",
]
