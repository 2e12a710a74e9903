"""Enumerations for type-safe command options"""

from enum import Enum


class OcrsMode(Enum):
    """How feasibility probabilities are obtained"""
    EXACT = "exact"
    MONTE_CARLO = "mc"


class RcrsScheme(Enum):
    """Random-order schemes"""
    ATTENUATE = "attenuate"
    RECURSIVE = "recursive"
    GREEDY = "greedy"


class OutputFormat(Enum):
    """Report formats"""
    CSV = "csv"
    JSON = "json"
    TABLE = "table"


class GeneratorKind(Enum):
    """Instance families of the generate command"""
    TIGHTNESS = "tightness"
    RANDOM_ORDER = "random-order"
    PLANE = "plane"
    RANDOM = "random"
    PARTITE = "partite"
    STANDARD = "standard"


class OracleKind(Enum):
    """Reference computations"""
    DP = "dp"
    OFFLINE = "offline"
    ENUMERATE = "enumerate"


class VerifyTarget(Enum):
    """Acceptance checks runnable from the command line"""
    SELECTABILITY = "selectability"
    TIGHTNESS = "tightness"
    OFFLINE = "offline"
    CURVES = "curves"
