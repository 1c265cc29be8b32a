"""Finite-dimensional laboratory for almost square Banach space constructions."""

from .certificates import RefutationCertificate, build_counterexample, refute_lasq_sweep, refute_unit_h
from .constructions import make_c0_sum, make_fkn, make_linf_sum, make_xn, space_from_config
from .errors import (
    AsqlabError,
    CertificateError,
    ConfigurationError,
    EnumerationCapExceeded,
    InputError,
    InvariantViolation,
    RankError,
    TruncationTooSmall,
)
from .norm import enumerate_oracle, eval_norm, norming_functional
from .vector import CoordVector

__version__ = "0.1.0"
