#!/usr/bin/env python3

"""
Small expression language used to define phi, psi1, psi2, c, d, h and f.

Grammar (standard precedence, ^ is right associative and binds tighter than
unary minus, so -x^2 is -(x^2))::

    expr   :: term [ ('+' | '-') term ]*
    term   :: factor [ ('*' | '/') factor ]*
    factor :: ('-' | '+') factor | power
    power  :: atom [ '^' factor ]
    atom   :: number | piecewise | name '(' expr [, expr]* ')' | name | '(' expr ')'
    piece  :: [bound '<='] var [('<' | '<=') bound] ':' expr
    piecewise :: 'piece' '(' piece [';' piece]* ')'

Pieces are half-open [a, b); the piece with the largest upper bound is also
closed at that bound.
"""

import re
import numpy as np
from dataclasses import dataclass
from functools import reduce
from pyparsing import Forward
from pyparsing import Keyword
from pyparsing import Literal
from pyparsing import Optional
from pyparsing import ParseBaseException
from pyparsing import ParserElement
from pyparsing import Regex
from pyparsing import Suppress
from pyparsing import Word
from pyparsing import ZeroOrMore
from pyparsing import alphanums
from pyparsing import alphas
from pyparsing import delimited_list
from pyparsing import one_of
from phi_lab.main.errors import DomainError
from phi_lab.main.errors import ExpressionError
from phi_lab.main.errors import ExpressionSyntaxError
from typing import Dict, List, Tuple

ParserElement.enable_packrat()

UNARY_FUNCTIONS = {"abs":np.abs, "log":np.log, "exp":np.exp, "sqrt":np.sqrt}
NARY_FUNCTIONS = {"min":np.minimum, "max":np.maximum}
NAMED_CONSTANTS = {"pi":np.pi, "e":np.e}
BINARY_OPERATORS = {"+":np.add, "-":np.subtract, "*":np.multiply, "/":np.divide, "^":np.power}

class Node:
    """
    Base class for expression tree nodes.
    """

    def evaluate(self, x:np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def resolve(self, var_name:str) -> "Node":
        return self

    def breakpoints(self) -> List[float]:
        return []

    def uses_variable(self) -> bool:
        return False

@dataclass(frozen=True)
class Constant(Node):
    value:float

    def evaluate(self, x:np.ndarray) -> np.ndarray:
        return np.full(x.shape, self.value, dtype=float)

@dataclass(frozen=True)
class Variable(Node):

    def evaluate(self, x:np.ndarray) -> np.ndarray:
        return x

    def uses_variable(self) -> bool:
        return True

@dataclass(frozen=True)
class Name(Node):
    """
    Identifier before it is resolved against the free variable.
    """
    name:str
    position:int

    def resolve(self, var_name:str) -> Node:
        if self.name == var_name:
            return Variable()
        if self.name in NAMED_CONSTANTS:
            return Constant(NAMED_CONSTANTS[self.name])
        raise ExpressionError(f"Unknown identifier '{self.name}' at position {self.position}"
                    + f" (free variable is '{var_name}')")

@dataclass(frozen=True)
class Negate(Node):
    arg:Node

    def evaluate(self, x:np.ndarray) -> np.ndarray:
        return np.negative(self.arg.evaluate(x))

    def resolve(self, var_name:str) -> Node:
        return Negate(self.arg.resolve(var_name))

    def breakpoints(self) -> List[float]:
        return self.arg.breakpoints()

    def uses_variable(self) -> bool:
        return self.arg.uses_variable()

@dataclass(frozen=True)
class BinaryOp(Node):
    op:str
    left:Node
    right:Node

    def evaluate(self, x:np.ndarray) -> np.ndarray:
        return BINARY_OPERATORS[self.op](self.left.evaluate(x), self.right.evaluate(x))

    def resolve(self, var_name:str) -> Node:
        return BinaryOp(self.op, self.left.resolve(var_name), self.right.resolve(var_name))

    def breakpoints(self) -> List[float]:
        return self.left.breakpoints() + self.right.breakpoints()

    def uses_variable(self) -> bool:
        return self.left.uses_variable() or self.right.uses_variable()

@dataclass(frozen=True)
class Call(Node):
    name:str
    args:Tuple[Node, ...]
    position:int

    def evaluate(self, x:np.ndarray) -> np.ndarray:
        values = [arg.evaluate(x) for arg in self.args]
        if self.name in UNARY_FUNCTIONS:
            return UNARY_FUNCTIONS[self.name](values[0])
        return reduce(NARY_FUNCTIONS[self.name], values)

    def resolve(self, var_name:str) -> Node:
        if self.name in UNARY_FUNCTIONS:
            if len(self.args) != 1:
                raise ExpressionError(f"{self.name}() takes one argument"
                            + f" (position {self.position})")
        elif self.name in NARY_FUNCTIONS:
            if len(self.args) == 0:
                raise ExpressionError(f"{self.name}() needs at least one argument"
                            + f" (position {self.position})")
        else:
            raise ExpressionError(f"Unknown function '{self.name}' at position {self.position}")
        return Call(self.name, tuple(arg.resolve(var_name) for arg in self.args), self.position)

    def breakpoints(self) -> List[float]:
        points = []
        for arg in self.args:
            points.extend(arg.breakpoints())
        return points

    def uses_variable(self) -> bool:
        return any(arg.uses_variable() for arg in self.args)

@dataclass(frozen=True)
class Piece:
    lower:float
    upper:float
    closed_upper:bool
    body:Node

    def contains(self, x:np.ndarray) -> np.ndarray:
        below = (x <= self.upper) if self.closed_upper else (x < self.upper)
        return (x >= self.lower) & below

@dataclass(frozen=True)
class Piecewise(Node):
    pieces:Tuple[Piece, ...]

    def evaluate(self, x:np.ndarray) -> np.ndarray:
        # Points outside every piece stay NaN and surface as domain errors.
        result = np.full(x.shape, np.nan)
        for piece in self.pieces:
            mask = piece.contains(x)
            if np.any(mask):
                result[mask] = piece.body.evaluate(x[mask])
        return result

    def breakpoints(self) -> List[float]:
        points = []
        for piece in self.pieces:
            points.extend(p for p in (piece.lower, piece.upper) if np.isfinite(p))
            points.extend(piece.body.breakpoints())
        return points

    def uses_variable(self) -> bool:
        return True

@dataclass(frozen=True)
class _Bound:
    node:Node
    closed:bool

@dataclass(frozen=True)
class _RawPiece(Node):
    """
    Piece as parsed, with bounds still unevaluated.
    """
    var:str
    lower:_Bound
    upper:_Bound
    body:Node
    position:int

def _constant_bound(bound:_Bound, var_name:str) -> float:
    node = bound.node.resolve(var_name)
    if node.uses_variable():
        raise ExpressionError("Piece bounds must not depend on the free variable")
    with np.errstate(all="ignore"):
        value = float(node.evaluate(np.zeros(1))[0])
    if np.isnan(value):
        raise ExpressionError("Piece bound does not evaluate to a number")
    return value

@dataclass(frozen=True)
class _RawPiecewise(Node):
    raw:Tuple[_RawPiece, ...]

    def resolve(self, var_name:str) -> Node:
        pieces = []
        for raw in self.raw:
            if raw.var != var_name:
                raise ExpressionError(f"Piece condition uses '{raw.var}' at position"
                            + f" {raw.position}, free variable is '{var_name}'")
            lower = -np.inf if raw.lower is None else _constant_bound(raw.lower, var_name)
            upper = np.inf if raw.upper is None else _constant_bound(raw.upper, var_name)
            closed = raw.upper is not None and raw.upper.closed
            if not lower < upper:
                raise ExpressionError(f"Empty piece interval [{lower}, {upper})"
                            + f" at position {raw.position}")
            pieces.append(Piece(lower, upper, closed, raw.body.resolve(var_name)))
        pieces.sort(key=lambda p: (p.lower, p.upper))
        # CHECK THAT NO TWO PIECES OVERLAP
        for prev, nxt in zip(pieces, pieces[1:]):
            if nxt.lower < prev.upper or (prev.closed_upper and nxt.lower == prev.upper):
                raise ExpressionError(f"Overlapping piece intervals near {nxt.lower!r}")
        # The piece reaching furthest right is closed at its right end.
        last = pieces[-1]
        pieces[-1] = Piece(last.lower, last.upper, True, last.body)
        return Piecewise(tuple(pieces))

def _fold_left(toks) -> Node:
    tokens = list(toks)
    node = tokens[0]
    for i in range(1, len(tokens), 2):
        node = BinaryOp(tokens[i], node, tokens[i + 1])
    return node

def _make_unary(toks) -> Node:
    tokens = list(toks)
    node = tokens[-1]
    for sign in reversed(tokens[:-1]):
        if sign == "-":
            node = Negate(node)
    return node

def _make_power(toks) -> Node:
    tokens = list(toks)
    if len(tokens) == 1:
        return tokens[0]
    return BinaryOp("^", tokens[0], tokens[2])

def _make_piece(s, loc, toks) -> _RawPiece:
    lower = None
    upper = None
    var = None
    tokens = list(toks)
    body = tokens[-1]
    for token in tokens[:-1]:
        if isinstance(token, str):
            var = token
        elif isinstance(token, _Bound) and var is None:
            lower = token
        elif isinstance(token, _Bound):
            upper = token
    return _RawPiece(var, lower, upper, body, loc)

def _build_grammar() -> ParserElement:
    """
    Builds the pyparsing grammar producing unresolved expression trees.
    """
    expr = Forward()
    factor = Forward()
    lpar = Suppress("(")
    rpar = Suppress(")")
    number = Regex(r"(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?")
    number.set_parse_action(lambda t: Constant(float(t[0])))
    ident = Word(alphas + "_", alphanums + "_")
    name = ident.copy().set_parse_action(lambda s, loc, t: Name(t[0], loc))
    call = (ident + lpar + Optional(delimited_list(expr)) + rpar)
    call.set_parse_action(lambda s, loc, t: Call(t[0], tuple(t[1:]), loc))
    # PIECEWISE DEFINITIONS
    lower = (expr + Suppress("<="))
    lower.set_parse_action(lambda t: _Bound(t[0], True))
    upper = ((Literal("<=") | Literal("<")) + expr)
    upper.set_parse_action(lambda t: _Bound(t[1], t[0] == "<="))
    condition = (lower + ident + Optional(upper)) | (ident + Optional(upper))
    piece = (condition + Suppress(":") + expr).set_parse_action(_make_piece)
    piecewise = (Keyword("piece") + lpar + piece
                + ZeroOrMore(Suppress(";") + piece) + Optional(Suppress(";")) + rpar)
    piecewise.set_parse_action(lambda t: _RawPiecewise(tuple(t[1:])))
    atom = number | piecewise | call | name | (lpar + expr + rpar)
    power = (atom + Optional(Literal("^") + factor)).set_parse_action(_make_power)
    factor <<= (ZeroOrMore(one_of("+ -")) + power).set_parse_action(_make_unary)
    term = (factor + ZeroOrMore(one_of("* /") + factor)).set_parse_action(_fold_left)
    expr <<= (term + ZeroOrMore(one_of("+ -") + term)).set_parse_action(_fold_left)
    return expr

GRAMMAR = _build_grammar()

def _check_parentheses(source:str):
    """
    Raises an ExpressionSyntaxError pointing at the first unbalanced parenthesis.

    :param source: Expression source
    :type source: str
    """
    stack = []
    for position, char in enumerate(source):
        if char == "(":
            stack.append(position)
        elif char == ")":
            if len(stack) == 0:
                raise ExpressionSyntaxError("Unmatched ')'", source, position)
            stack.pop()
    if len(stack) > 0:
        raise ExpressionSyntaxError("Unbalanced '('", source, stack[-1])

class Expression:
    """
    Parsed expression in one free variable.
    Immutable; evaluation is vectorized over numpy arrays.
    """

    def __init__(self, source:str, var_name:str, root:Node, domain:Tuple[float, float]=None):
        """
        Initializes the Expression.

        :param source: Source text the expression was parsed from
        :type source: str
        :param var_name: Name of the free variable
        :type var_name: str
        :param root: Resolved expression tree
        :type root: Node
        :param domain: Closed interval the expression is declared on, defaults to None
        :type domain: tuple, optional
        """
        self.source = source
        self.var_name = var_name
        self.root = root
        self.domain = domain

    def __repr__(self) -> str:
        return f"Expression({self.source!r}, {self.var_name!r})"

    def values(self, x) -> np.ndarray:
        """
        Evaluates the expression at every point of an array.

        :param x: Points to evaluate at
        :type x: array_like
        :return: Finite values, same shape as x
        :rtype: np.ndarray
        """
        points = np.asarray(x, dtype=float)
        if self.domain is not None:
            outside = (points < self.domain[0]) | (points > self.domain[1])
            if np.any(outside):
                bad = points[outside].flat[0]
                raise DomainError(f"{self.var_name}={bad!r} is outside the domain"
                            + f" {list(self.domain)} of '{self.source}'")
        with np.errstate(all="ignore"):
            result = self.root.evaluate(points)
        finite = np.isfinite(result)
        if not np.all(finite):
            bad = points[~finite].flat[0]
            raise DomainError(f"'{self.source}' is not finite at {self.var_name}={bad!r}")
        return result

    def __call__(self, x):
        if np.ndim(x) == 0:
            return float(self.values(np.array([x], dtype=float))[0])
        return self.values(x)

    def breakpoints(self) -> List[float]:
        """
        Returns the sorted, distinct finite piece boundaries of the expression.

        :return: Piece boundaries
        :rtype: list[float]
        """
        return sorted(set(self.root.breakpoints()))

    def is_constant(self) -> bool:
        return not self.root.uses_variable()

def parse_expr(source:str=None, var_name:str="x", domain:Tuple[float, float]=None) -> Expression:
    """
    Parses expression source text in one free variable.

    :param source: Expression source, defaults to None
    :type source: str, optional
    :param var_name: Name of the free variable, defaults to "x"
    :type var_name: str, optional
    :param domain: Declared domain; piece coverage is checked against it, defaults to None
    :type domain: tuple, optional
    :return: Parsed Expression
    :rtype: Expression
    """
    if source is None or source.strip() == "":
        raise ExpressionSyntaxError("Empty expression", "" if source is None else source, 0)
    _check_parentheses(source)
    try:
        tree = GRAMMAR.parse_string(source, parse_all=True)[0]
    except ParseBaseException as error:
        raise ExpressionSyntaxError("Syntax error", source, error.loc) from None
    root = tree.resolve(var_name)
    if domain is not None:
        _check_coverage(root, source, domain)
    return Expression(source, var_name, root, domain)

def _check_coverage(root:Node, source:str, domain:Tuple[float, float]):
    """
    Checks that a top-level piecewise expression covers its declared domain.
    """
    if not isinstance(root, Piecewise):
        return
    lo, hi = domain
    pieces = root.pieces
    if pieces[0].lower > lo:
        raise ExpressionError(f"Pieces of '{source}' leave [{lo}, {pieces[0].lower}) uncovered")
    for prev, nxt in zip(pieces, pieces[1:]):
        if prev.upper < nxt.lower and prev.upper < hi:
            raise ExpressionError(f"Pieces of '{source}' leave [{prev.upper}, {nxt.lower}) uncovered")
    if pieces[-1].upper < hi:
        raise ExpressionError(f"Pieces of '{source}' leave ({pieces[-1].upper}, {hi}] uncovered")

def eval_expr(e:Expression, value:float) -> float:
    """
    Evaluates an expression at a single real value.

    :param e: Expression to evaluate
    :type e: Expression
    :param value: Value of the free variable
    :type value: float
    :return: Finite result
    :rtype: float
    """
    return float(e.values(np.array([value], dtype=float))[0])

def substitute_parameters(source:str=None, parameters:Dict[str, float]=None) -> str:
    """
    Replaces whole-word parameter names in expression source with their values.

    :param source: Expression source, defaults to None
    :type source: str, optional
    :param parameters: Parameter names and values, defaults to None
    :type parameters: dict, optional
    :return: Source with parameters substituted
    :rtype: str
    """
    if source is None:
        return ""
    if parameters is None:
        return source
    result = source
    # Longest names first so that "a1" is not clobbered by "a".
    for name in sorted(parameters, key=len, reverse=True):
        result = re.sub(rf"\b{re.escape(name)}\b", f"({parameters[name]!r})", result)
    return result

def substitute_variable(source:str=None, var_name:str=None, replacement:str=None) -> str:
    """
    Replaces the free variable in expression source with parenthesized source text.
    Piecewise sources cannot be composed this way since piece conditions name the variable.

    :param source: Expression source, defaults to None
    :type source: str, optional
    :param var_name: Name of the free variable, defaults to None
    :type var_name: str, optional
    :param replacement: Source text to put in place of the variable, defaults to None
    :type replacement: str, optional
    :return: Composed source
    :rtype: str
    """
    if source is None:
        return ""
    if var_name is None or replacement is None:
        return source
    if re.search(r"\bpiece\s*\(", source):
        raise ExpressionError(f"Cannot substitute into piecewise expression '{source}'")
    return re.sub(rf"\b{re.escape(var_name)}\b", lambda match: f"({replacement})", source)
