"""Exception hierarchy shared by all modules."""


class MsovcError(Exception):
    """Base class for every error raised by this package."""


class StructureError(MsovcError, ValueError):
    """A relational structure violates its signature or kind invariants."""


class FormulaSyntaxError(MsovcError, ValueError):
    def __init__(self, message, position=None):
        self.position = position
        if position is not None:
            message = f"{message} (at offset {position})"
        super().__init__(message)


class ScopeError(MsovcError, ValueError):
    """Unbound variable, clashing variable sorts, or a bad partition."""


class DialectError(MsovcError, ValueError):
    """Formula uses a construct not permitted by the requested dialect."""


class SignatureError(MsovcError, ValueError):
    """Formula and structure (or automaton alphabet) do not fit together."""


class BudgetExceeded(MsovcError, RuntimeError):
    """A brute-force enumeration or automaton construction would exceed its cap."""


class AlphabetError(MsovcError, ValueError):
    """Automata over incompatible alphabets, or an unknown symbol."""


class ModelError(MsovcError, ValueError):
    """Invalid minor model or transduction input."""


class KExpressionError(MsovcError, ValueError):
    """Malformed k-expression or a width certificate that does not fit its graph."""
