"""Feature mapping operators with total ("safe") numeric semantics.

Every operator maps finite inputs to finite outputs:

=========  ==================================================================
log        sign(x) * ln(|x| + 1)
sin, cos   as usual
tan        tan(x) clamped to [-1e6, 1e6]
powK       x ** K for K in {-3, -2, -1, 2, 3}; negative K guards the base as
           sign(x) * max(|x|, EPS) with sign(0) = +1
id         x (the K = 1 member of the power family; it has no other spelling)
div        a / (sign(b) * max(|b|, EPS)), sign(0) = +1
=========  ==================================================================

All results are finally clipped to [-BOUND, BOUND] so that nested chains
cannot overflow.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

EPS = 1e-6
TAN_LIMIT = 1e6
BOUND = 1e100

UNARY_TAGS = ("log", "sin", "cos", "tan", "pow-3", "pow-2", "pow-1", "id", "pow2", "pow3")
BINARY_TAGS = ("add", "sub", "mul", "div")
_ALIASES = {"pow1": "id", "identity": "id"}


def _guard(b):
    return np.where(b < 0, -1.0, 1.0) * np.maximum(np.abs(b), EPS)


def _pow(k):
    if k < 0:
        return lambda x: _guard(x) ** k
    return lambda x: x**k


_UNARY = {
    "log": lambda x: np.sign(x) * np.log1p(np.abs(x)),
    "sin": np.sin,
    "cos": np.cos,
    "tan": lambda x: np.clip(np.tan(x), -TAN_LIMIT, TAN_LIMIT),
    "pow-3": _pow(-3),
    "pow-2": _pow(-2),
    "pow-1": _pow(-1),
    "id": lambda x: x,
    "pow2": _pow(2),
    "pow3": _pow(3),
}

_BINARY = {
    "add": np.add,
    "sub": np.subtract,
    "mul": np.multiply,
    "div": lambda a, b: a / _guard(b),
}


def normalize_unary(tag: str) -> str:
    tag = _ALIASES.get(tag, tag)
    if tag not in _UNARY:
        raise ValueError(f"unknown unary operator {tag!r}")
    return tag


def apply_unary(tag: str, x: np.ndarray) -> np.ndarray:
    with np.errstate(all="ignore"):
        return np.clip(_UNARY[tag](x), -BOUND, BOUND)


def apply_binary(tag: str, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    with np.errstate(all="ignore"):
        return np.clip(_BINARY[tag](a, b), -BOUND, BOUND)


@dataclass(frozen=True)
class FmopSet:
    """The unary and binary operator urns used when drawing chains."""

    unary: tuple[str, ...] = UNARY_TAGS
    binary: tuple[str, ...] = BINARY_TAGS

    def __post_init__(self):
        unary = tuple(normalize_unary(t) for t in self.unary)
        if len(set(unary)) != len(unary):
            raise ValueError("duplicate unary operator (pow1 and id are the same operator)")
        for t in self.binary:
            if t not in _BINARY:
                raise ValueError(f"unknown binary operator {t!r}")
        if len(set(self.binary)) != len(self.binary):
            raise ValueError("duplicate binary operator")
        object.__setattr__(self, "unary", unary)
        object.__setattr__(self, "binary", tuple(self.binary))
