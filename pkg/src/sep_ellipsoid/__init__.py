"""Separability certificates from separable ellipsoids around product states."""

from .criteria import (
    CERTIFIED,
    INCONCLUSIVE,
    CertificateOutcome,
    CmBound,
    ball_criterion,
    c_m_bound,
    ellipsoid_criterion,
    k_separability_criterion,
    neighborhood_criterion,
    trace_criterion,
)
from .decomposition import PartitionSpec, SeparableDecomposition, Term, bipartitions, full_partition
from .detect import (
    CertificationReport,
    certify,
    natural_product_state,
    negativity,
    threshold_scan,
)
from .optimize import OptimizerConfig, closest_separable_state
from .qmat import ProductState, eigh, frobenius_norm, gen_neg_power, kron, partial_trace, partial_transpose
from .volume import VolumeReport, log_volume_ratio

__version__ = "0.1.0"

__all__ = [
    "CERTIFIED",
    "CertificateOutcome",
    "CertificationReport",
    "CmBound",
    "INCONCLUSIVE",
    "OptimizerConfig",
    "PartitionSpec",
    "ProductState",
    "SeparableDecomposition",
    "Term",
    "VolumeReport",
    "ball_criterion",
    "bipartitions",
    "c_m_bound",
    "certify",
    "closest_separable_state",
    "eigh",
    "ellipsoid_criterion",
    "frobenius_norm",
    "full_partition",
    "gen_neg_power",
    "k_separability_criterion",
    "kron",
    "log_volume_ratio",
    "natural_product_state",
    "negativity",
    "neighborhood_criterion",
    "partial_trace",
    "partial_transpose",
    "threshold_scan",
    "trace_criterion",
]
