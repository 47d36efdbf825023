"""
Exception hierarchy for the equivalence checker
"""
from typing import Iterable, Optional, Tuple

Location = Optional[Tuple[int, int]]


def format_location(loc: Location) -> str:
    if loc is None:
        return "?:?"
    return f"{loc[0]}:{loc[1]}"


class CfgkatError(Exception):
    """Base class for every checker failure. Carries an optional (line, column)."""

    def __init__(self, message: str, loc: Location = None):
        self.message = message
        self.loc = loc
        super().__init__(self.__str__())

    def __str__(self) -> str:
        if self.loc is None:
            return self.message
        return f"{format_location(self.loc)}: {self.message}"

    def to_dict(self) -> dict:
        return {
            'type': type(self).__name__,
            'message': self.message,
            'location': list(self.loc) if self.loc else None,
        }


class InvalidProgram(CfgkatError):
    """Raised when a caller requires a valid program and validation found violations."""

    def __init__(self, violations: Iterable, loc: Location = None):
        self.violations = list(violations)
        first = self.violations[0] if self.violations else None
        if loc is None and first is not None:
            loc = first.location
        text = "; ".join(v.describe() for v in self.violations) or "invalid program"
        super().__init__(text, loc)


class UnknownId(CfgkatError):
    pass


class TooManyTests(CfgkatError):
    def __init__(self, count: int, cap: int):
        self.count = count
        self.cap = cap
        super().__init__(
            f"{count} primitive tests exceed the cap of {cap} "
            f"({2 ** count} atoms); raise --max-tests to proceed"
        )


class AlphabetMismatch(CfgkatError):
    pass


class FrontendSyntaxError(CfgkatError):
    def __init__(self, message: str, loc: Location = None, expected: Tuple[str, ...] = ()):
        self.expected = tuple(expected)
        if self.expected:
            message = f"{message} (expected {', '.join(self.expected)})"
        super().__init__(message, loc)


class UnsupportedConstruct(CfgkatError):
    def __init__(self, construct: str, loc: Location = None):
        self.construct = construct
        super().__init__(f"unsupported construct '{construct}'", loc)


class DoWhileWithBreakOrLabel(CfgkatError):
    def __init__(self, loc: Location = None):
        super().__init__("do-while body contains a break or a label and cannot be unrolled", loc)


class NonBlindableStatement(CfgkatError):
    def __init__(self, text: str, loc: Location = None):
        self.text = text
        super().__init__(
            f"statement '{text}' is not pact/pbool/indicator/control flow; use --auto-blind", loc
        )


class FunctionNotFound(CfgkatError):
    def __init__(self, name: str, available: Iterable[str] = ()):
        self.name = name
        names = ", ".join(sorted(available)) or "none"
        super().__init__(f"function '{name}' not found (available: {names})")
