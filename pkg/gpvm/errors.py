class GPVMError(Exception):
    """Base class of every error raised by the library."""


class ConfigError(GPVMError, ValueError):
    pass


class InputError(GPVMError, ValueError):
    """Malformed JSON input or a file that does not match its schema."""


class NotHermitian(GPVMError, ValueError):
    pass


class NoConvergence(GPVMError, ArithmeticError):
    pass


class DimensionMismatch(GPVMError, ValueError):
    pass


class IndexOutOfRange(GPVMError, IndexError):
    pass


class NotNormalized(GPVMError, ValueError):
    pass


class NotAProjector(GPVMError, ValueError):
    pass


class NotUnitary(GPVMError, ValueError):
    pass


class InvalidPartition(GPVMError, ValueError):
    pass


class InvalidChain(GPVMError, ValueError):
    pass


class FunctionUndefined(GPVMError, ArithmeticError):
    pass


class MalformedRegion(GPVMError, ValueError):
    pass


class GridMismatch(GPVMError, ValueError):
    pass


class UnknownValue(GPVMError, KeyError):
    pass


class PreconditionFailed(GPVMError):
    pass


class ChannelInvalid(GPVMError, ValueError):
    pass


class InvariantViolation(GPVMError):
    pass


class ExprSyntaxError(GPVMError, ValueError):
    """
    Expression that does not match the grammar.
    Args:
        message: what went wrong
        offset: byte offset into the source where parsing stopped
        expected: set of token kinds that would have been accepted there
    """

    def __init__(self, message, offset, expected=()):
        self.offset = offset
        self.expected = frozenset(expected)
        detail = f' (expected one of: {", ".join(sorted(self.expected))})' if self.expected else ''
        super().__init__(f'{message} at offset {offset}{detail}')


class UnknownIdentifier(GPVMError, ValueError):
    def __init__(self, name, offset):
        self.name = name
        self.offset = offset
        super().__init__(f'unknown identifier {name!r} at offset {offset}')


class UnboundVariable(GPVMError, KeyError):
    def __init__(self, name):
        self.name = name
        super().__init__(f'variable {name!r} is not bound')

    def __str__(self):
        return self.args[0]
