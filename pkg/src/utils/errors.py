from typing import Optional, Tuple


class GenLabError(Exception):
    pass


class IndeterminateFloor(GenLabError, ArithmeticError):
    """Raised when an enclosure still straddles an integer at the precision cap."""

    def __init__(self, message: str, *, bits: Optional[int] = None, value: Optional[str] = None,
                 path: Tuple[int, ...] = (), subexpression: Optional[str] = None,
                 step: Optional[int] = None):
        super().__init__(message)
        self.bits = bits
        self.value = value
        self.path = tuple(path)
        self.subexpression = subexpression
        self.step = step

    def with_context(self, **context) -> 'IndeterminateFloor':
        fields = {
            'bits': self.bits,
            'value': self.value,
            'path': self.path,
            'subexpression': self.subexpression,
            'step': self.step,
        }
        fields.update(context)
        message = str(self.args[0]) if self.args else "indeterminate floor"
        if context.get('step') is not None:
            message = f"{message} (orbit step {context['step']})"
        if context.get('subexpression') is not None and self.subexpression is None:
            message = f"{message} in {context['subexpression']}"
        return IndeterminateFloor(message, **fields)


class IndeterminateComparison(GenLabError, ArithmeticError):
    def __init__(self, message: str, *, bits: Optional[int] = None):
        super().__init__(message)
        self.bits = bits


class PremiseViolated(GenLabError):
    def __init__(self, message: str, *, failures: Tuple[int, ...] = ()):
        super().__init__(message)
        self.failures = tuple(failures)
