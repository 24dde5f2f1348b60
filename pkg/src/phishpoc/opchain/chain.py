"""Operation-chain expression trees, their evaluation and text form.

Grammar of the canonical rendering::

    chain  = leaf | "(" unary ws chain ")" | "(" binary ws chain ws chain ")"
    leaf   = "f" digit {digit}
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

import numpy as np

from ..errors import ParseError
from .ops import BINARY_TAGS, apply_binary, apply_unary, normalize_unary


@dataclass(frozen=True)
class Leaf:
    index: int

    @property
    def size(self) -> int:
        return 0

    def __str__(self):
        return f"f{self.index}"


@dataclass(frozen=True)
class Unary:
    op: str
    child: "Chain"

    def __post_init__(self):
        object.__setattr__(self, "op", normalize_unary(self.op))

    @property
    def size(self) -> int:
        return self.child.size + 1

    def __str__(self):
        return f"({self.op} {self.child})"


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Chain"
    right: "Chain"

    def __post_init__(self):
        if self.op not in BINARY_TAGS:
            raise ValueError(f"unknown binary operator {self.op!r}")

    @property
    def size(self) -> int:
        return self.left.size + self.right.size + 1

    def __str__(self):
        return f"({self.op} {self.left} {self.right})"


Chain = Union[Leaf, Unary, Binary]


def leaves(chain: Chain) -> list[int]:
    """Leaf feature indices in left-to-right order."""
    if isinstance(chain, Leaf):
        return [chain.index]
    if isinstance(chain, Unary):
        return leaves(chain.child)
    return leaves(chain.left) + leaves(chain.right)


def replace_leaf(chain: Chain, position: int, index: int) -> Chain:
    """Return a copy of ``chain`` whose ``position``-th leaf reads feature ``index``."""

    def walk(node, k):
        if isinstance(node, Leaf):
            return (Leaf(index) if k == 0 else node), k - 1
        if isinstance(node, Unary):
            child, k = walk(node.child, k)
            return Unary(node.op, child), k
        left, k = walk(node.left, k)
        right, k = walk(node.right, k)
        return Binary(node.op, left, right), k

    new, rest = walk(chain, position)
    if rest >= 0:
        raise IndexError(position)
    return new


def evaluate(chain: Chain, X: np.ndarray) -> np.ndarray:
    """Evaluate ``chain`` on every row of ``X`` (n x |F|)."""
    X = np.asarray(X, dtype=float)
    if isinstance(chain, Leaf):
        return X[..., chain.index].astype(float, copy=True)
    if isinstance(chain, Unary):
        return apply_unary(chain.op, evaluate(chain.child, X))
    return apply_binary(chain.op, evaluate(chain.left, X), evaluate(chain.right, X))


def eval_chain(chain: Chain, sample) -> float:
    values = getattr(sample, "values", sample)
    return float(evaluate(chain, np.asarray(values, dtype=float)))


_TOKEN = re.compile(r"\s*(?:(\()|(\))|([A-Za-z0-9_\-]+))")


def _tokenize(text: str, offset: int = 0):
    pos = 0
    tokens = []
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ParseError(f"unexpected character {text[pos]!r}", offset + pos)
        start = m.start(m.lastindex)
        tokens.append((m.group(m.lastindex), offset + start))
        pos = m.end()
    return tokens


def parse_chain(text: str, offset: int = 0) -> Chain:
    """Parse the canonical s-expression form. ``offset`` shifts reported positions."""
    tokens = _tokenize(text, offset)
    end = offset + len(text)
    i = 0

    def peek():
        return tokens[i] if i < len(tokens) else (None, end)

    def node():
        nonlocal i
        tok, pos = peek()
        if tok is None:
            raise ParseError("unexpected end of input", end)
        i += 1
        if tok == ")":
            raise ParseError("unexpected ')'", pos)
        if tok != "(":
            if re.fullmatch(r"f\d+", tok):
                return Leaf(int(tok[1:]))
            raise ParseError(f"expected a leaf like 'f3', got {tok!r}", pos)
        op, op_pos = peek()
        if op is None:
            raise ParseError("unexpected end of input", end)
        i += 1
        if op in BINARY_TAGS:
            left = node()
            right = node()
            result = Binary(op, left, right)
        else:
            try:
                tag = normalize_unary(op)
            except ValueError:
                raise ParseError(f"unknown operator {op!r}", op_pos) from None
            result = Unary(tag, node())
        tok, pos = peek()
        if tok != ")":
            raise ParseError("expected ')'" if tok is not None else "unexpected end of input", pos)
        i += 1
        return result

    chain = node()
    if i != len(tokens):
        raise ParseError("trailing input", tokens[i][1])
    return chain
