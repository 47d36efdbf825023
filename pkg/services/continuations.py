"""
Continuations: how a trace ends and where control resumes.
"""
from dataclasses import dataclass
from typing import Hashable, Union


@dataclass(frozen=True)
class Acc:
    """Normal completion with indicator value."""
    value: Hashable

    def __str__(self) -> str:
        return f"acc {self.value}"


@dataclass(frozen=True)
class Brk:
    """Exit the enclosing loop, resuming after it with indicator value."""
    value: Hashable

    def __str__(self) -> str:
        return f"brk {self.value}"


@dataclass(frozen=True)
class Ret:
    def __str__(self) -> str:
        return "ret"


@dataclass(frozen=True)
class Jmp:
    """Resume at a label with indicator value."""
    label: Hashable
    value: Hashable

    def __str__(self) -> str:
        return f"jmp({self.label}, {self.value})"


Continuation = Union[Acc, Brk, Ret, Jmp]

RET = Ret()


def is_continuation(entry: object) -> bool:
    return isinstance(entry, (Acc, Brk, Ret, Jmp))


def floor(c: Continuation) -> Continuation:
    """Loop exit: brk i becomes acc i, everything else passes through."""
    if isinstance(c, Brk):
        return Acc(c.value)
    return c


def sort_key(c: Continuation):
    if isinstance(c, Acc):
        return (0, str(c.value))
    if isinstance(c, Brk):
        return (1, str(c.value))
    if isinstance(c, Ret):
        return (2, '')
    return (3, str(c.label), str(c.value))


class _StartPoint:
    """Key of the program-start entry in a labeled family."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return '♯'

    def __reduce__(self):
        return (_StartPoint, ())


SHARP = _StartPoint()
