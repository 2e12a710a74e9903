"""Exception hierarchy"""

from typing import Optional


class CrsLabError(Exception):
    """Base class for all crslab failures"""


class SchemaError(CrsLabError, ValueError):
    """Document does not parse or does not match its schema"""

    def __init__(self, message: str, locus: Optional[str] = None):
        self.locus = locus
        super().__init__(f"{locus}: {message}" if locus else message)


class ConstructionError(CrsLabError, ValueError):
    """A field, plane or instance cannot be built from the given parameters"""


class StateSpaceTooLarge(CrsLabError):
    """Exact computation would track too many items"""


class EnumerationTooLarge(CrsLabError):
    """Brute-force enumeration exceeds its limit"""


class RecourseError(CrsLabError):
    """A recourse oracle returned an action that breaks substitutability"""

    def __init__(self, message: str, product_id: str):
        self.product_id = product_id
        super().__init__(f"{message} (product '{product_id}')")


class InventoryUnderflow(CrsLabError, RuntimeError):
    """An item was sold more often than its inventory allows"""
