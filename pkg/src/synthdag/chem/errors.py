"""Error types raised by the chemistry layer."""


class ChemError(ValueError):
    """Base class for all molecule / SMILES errors."""


class SmilesSyntaxError(ChemError):
    """Malformed SMILES text (bad character, bad bracket atom, ...)."""


class UnbalancedParenthesisError(SmilesSyntaxError):
    pass


class DanglingRingClosureError(SmilesSyntaxError):
    pass


class UnknownElementError(ChemError):
    pass


class IsotopeError(SmilesSyntaxError):
    """Isotope labels are rejected rather than silently dropped."""


class ValenceError(ChemError):
    pass


class MolGraphError(ChemError):
    """Structural invariant violation in a molecular graph."""
