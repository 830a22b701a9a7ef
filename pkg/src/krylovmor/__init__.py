"""Moment-matching model order reduction of RLC circuits over standard,
extended and asymmetric extended Krylov subspaces."""

from .circuit import Netlist, assemble_mna, detect_singularity, parse_netlist
from .descriptor import DenseSystem, DescriptorSystem, LinearSystem
from .exceptions import (CapExceeded, Deflated, DimensionMismatch, KrylovMORError,
                         ManifestError, MismatchedSweep, ParseError, PoleHit,
                         RegularizationError, SingularG22, SingularMatrix,
                         UnsupportedElement)
from .krylov import (OperatorPair, ProjectionBasis, build_basis, compute_aeks,
                     compute_eks, standard_krylov)
from .reduction import (FrequencySweep, ReducedModel, markov_parameters, max_error,
                        moments, reduce, reduce_per_port, simo_split, transfer_function)
from .regularize import (PartitionedMNA, RegularizedSystem, eliminate_v2, partition_mna,
                         regularize)

__version__ = "0.1.0"
