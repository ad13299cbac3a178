"""Converse bounds and exhaustive scheme search for computing X xor Y over a
two-transmitter network with side information Z at the receiver."""

__version__ = "0.1.0"

from .model import BinaryMarkovSource, DomainError, JointPMF, joint_pmf, probdist_source
from .bounds import BoundValue, cut_set, nw_extension, sweep, theorem1, theorem1_L, theorem2, theorem2_L
from .schemes import Scheme, coupling_report, enumerate_schemes, min_sum_message_entropy

__all__ = [
    "BinaryMarkovSource",
    "BoundValue",
    "DomainError",
    "JointPMF",
    "Scheme",
    "coupling_report",
    "cut_set",
    "enumerate_schemes",
    "joint_pmf",
    "min_sum_message_entropy",
    "nw_extension",
    "probdist_source",
    "sweep",
    "theorem1",
    "theorem1_L",
    "theorem2",
    "theorem2_L",
]
