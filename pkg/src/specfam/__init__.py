"""Spectral certificates, continuity moduli and spectral flow for
parameter-indexed families of Hermitian operators."""

__version__ = "0.1.0"

from . import errors
from .spectral import (
    HermitianOperator,
    RealWindow,
    SpectralDecomposition,
    WindowProjection,
    TAU_EDGE_DEFAULT,
    bounded_transform,
    bounded_transform_scalar,
    decompose,
    diagonal_operator,
    identity_operator,
    operator_norm,
    resolvent_at_i,
    spectral_projection,
    zero_operator,
)
from .families import (
    FamilySample,
    FamilySpec,
    ParameterGrid,
    essential_sign_check,
    sample,
    truncation_check,
)
from .adapted import (
    AdaptedPairCertificate,
    CoveringCertificate,
    GridRange,
    adapted_from_covering,
    certify_adapted_pair,
    covering_construction,
    discrete_spectrum_certify,
    find_adapted_pair,
    fixed_level_certifier,
    truncation_ceiling,
)
from .topology import (
    ContinuityModuli,
    GraphContinuityCertificate,
    RieszContinuityCertificate,
    StrictAdaptednessResult,
    continuity_modulus,
    graph_continuity_certify,
    graph_distance,
    riesz_continuity_certify,
    riesz_distance,
    strict_adaptedness_certify,
    transform_clearing_level,
)
from .flow import FlowPartition, FlowResult, flow_by_partition, flow_by_tracking
from .polarized import (
    CorrespondenceReport,
    PolarizationCheck,
    compact_polarization_check,
    polarized_continuity_certify,
    transform_correspondence_check,
    weak_discrete_spectrum_certify,
)
from .report import canonical_json, jsonable, run_analysis, validate_config

__all__ = [name for name in dir() if not name.startswith("_")]
