"""q-Gosper telescoping and Abel pairs for basic hypergeometric identities."""

from .catalog import default_catalog, list_identities, lookup
from .errors import *  # noqa: F401,F403
from .errors import __all__ as _errors_all
from .numeval import NumericContext, verify_identity, verify_pair_numeric
from .pairsynth import (
    AbelPair,
    GosperPair,
    IterationRelation,
    build_iteration,
    check_limit_condition,
    derive_abel_pair,
    synthesize_gosper_pair,
)
from .qgosper import CancelToken, GosperCertificate, q_gosper
from .qterm import BILATERAL, UNILATERAL, QFactorial, QTerm, ratio, same_term
from .syntax import format_term, parse_param, parse_ratx, parse_substitution, parse_term

__version__ = "0.1.0"

__all__ = [
    "default_catalog",
    "list_identities",
    "lookup",
    "NumericContext",
    "verify_identity",
    "verify_pair_numeric",
    "AbelPair",
    "GosperPair",
    "IterationRelation",
    "build_iteration",
    "check_limit_condition",
    "derive_abel_pair",
    "synthesize_gosper_pair",
    "CancelToken",
    "GosperCertificate",
    "q_gosper",
    "BILATERAL",
    "UNILATERAL",
    "QFactorial",
    "QTerm",
    "ratio",
    "same_term",
    "format_term",
    "parse_param",
    "parse_ratx",
    "parse_substitution",
    "parse_term",
    *_errors_all,
]
