"""Exception types shared across the package."""


class AogError(Exception):
    """Base class for errors raised by this package."""


class ConfigError(AogError):
    """A relation or function config does not fit the domain's contract."""


class DomainError(AogError):
    """A parameter value or relation/function lookup is invalid for the domain."""


class DepthExceeded(AogError):
    """Recursive expansion passed the caller's depth bound."""


class InvalidTree(AogError):
    """A parse tree is inconsistent with the grammar it claims to follow."""


class UnsupportedGrammar(AogError):
    """The grammar is valid but outside what this operation can handle."""


class UnitCycleError(UnsupportedGrammar):
    """Or-to-Or rules form a cycle, so unit elimination cannot terminate."""


class NotInNormalForm(UnsupportedGrammar):
    """An operation that requires normal form was handed a general grammar."""


class BudgetExceeded(AogError):
    """The parser hit its entry-count or wall-clock budget."""


class MissingEntry(AogError):
    """A chart lookup asked for a composition the table does not hold."""


class MapMismatch(AogError):
    """A node map does not correspond to the tree or grammar it is applied to."""


class FormatError(AogError):
    """A file or text payload does not follow the expected format."""


class InvalidSpn(AogError):
    """A sum-product network fails a structural requirement."""
